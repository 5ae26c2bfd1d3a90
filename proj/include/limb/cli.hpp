#pragma once
// Command-line front end. run() is the whole program minus process setup so
// tests can drive it in-process.
//
// Every option is a string slot keyed by its long name. Defaults depend on the
// context (the subcommand, or the mc mode), and the echoed configuration is
// the resolved text of every slot that applies, so feeding it back through
// --config replays the run.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "limb/errors.hpp"
#include "limb/estimators.hpp"
#include "limb/io.hpp"
#include "limb/series.hpp"
#include "limb/stochastic.hpp"
#include "limb/workloads.hpp"

namespace limb::cli {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kTemperatureEnv = "LIMB_TEMP_K";

enum ExitCode : int { kExitOk = 0, kExitInvalid = 1, kExitConvergence = 2 };

using KeyValues = std::vector<std::pair<std::string, std::string>>;

struct OptionDef {
    std::string name;
    std::string help;
    bool flag = false;
    // context -> default text ("" means optional and unset)
    std::map<std::string, std::string> uses;
};

inline const std::vector<std::string>& commands() {
    static const std::vector<std::string> c{"estimate", "sweep", "trajectory", "fit", "compare", "mc"};
    return c;
}

inline std::map<std::string, std::string> in(std::initializer_list<const char*> contexts, const std::string& def) {
    std::map<std::string, std::string> m;
    for (const char* c : contexts) m[c] = def;
    return m;
}

inline std::map<std::string, std::string> merge(std::map<std::string, std::string> a,
                                                const std::map<std::string, std::string>& b) {
    a.insert(b.begin(), b.end());
    return a;
}

inline const std::vector<OptionDef>& option_table() {
    static const std::vector<OptionDef> t = [] {
        const std::initializer_list<const char*> all = {"estimate", "sweep", "trajectory", "fit",
                                                        "compare", "kinetics", "walk", "audit"};
        const std::initializer_list<const char*> energy = {"estimate", "sweep", "compare"};
        const std::initializer_list<const char*> lim = {"estimate", "sweep", "trajectory", "compare"};
        const std::initializer_list<const char*> walks = {"walk", "audit"};
        const std::initializer_list<const char*> mc = {"kinetics", "walk", "audit"};
        std::vector<OptionDef> d;
        d.push_back({"mode", "mc experiment: kinetics, walk or audit", false, in(mc, "kinetics")});
        d.push_back({"method", "comma-separated estimators (lim-a, lim-a-closed, lim-b, lim-b-ub, lim-b-lb, "
                               "lim-b-lb-finite, lim-a-exp, lim-b-exp, ceb, landauer)",
                     false, merge(in({"estimate"}, "lim-b"), in({"sweep"}, "lim-a,lim-b"))});
        d.push_back({"flops", "training operations", false, in(energy, "1e28")});
        d.push_back({"params", "memory elements M", false, in(energy, "1e15")});
        d.push_back({"bits", "precision in bits (excludes --delta)", false,
                     merge(in(lim, "16"), in(walks, "4"))});
        d.push_back({"delta", "precision delta in (0, 1] (excludes --bits)", false,
                     merge(in(lim, ""), in(walks, ""))});
        d.push_back({"schedule", "update-rate schedule: poly:G, exp:G, expunit or logpoly", false,
                     merge(in(lim, "poly:2"), in(walks, "poly:0.3"))});
        d.push_back({"lr-offset", "learning-rate offset n0 in eps_n = 1/(n + n0)", false,
                     merge(in(lim, "0"), in(walks, "0"))});
        d.push_back({"gamma", "sweep grid lo:hi:count", false, in({"sweep"}, "0.5:10:20")});
        d.push_back({"gamma-scale", "sweep spacing: linear or log", false, in({"sweep"}, "linear")});
        d.push_back({"temperature", "kelvin (default from LIMB_TEMP_K, else 300)", false, in(all, "")});
        d.push_back({"tol", "relative tolerance for series sums", false, in(energy, "1e-9")});
        d.push_back({"e-bit", "CEB energy per bit in joules (default kT log 2)", false, in(energy, "")});
        d.push_back({"truncation", "N for lim-b-lb-finite (default floor(1/delta))", false, in(energy, "")});
        d.push_back({"cal-beta", "manual calibration beta", false, in(lim, "")});
        d.push_back({"cal-lambda-min", "manual calibration smallest Hessian eigenvalue", false, in(lim, "")});
        d.push_back({"cal-bits", "manual calibration precision P", false, in(lim, "")});
        d.push_back({"r-max", "maximum update rate per second", false,
                     merge(in({"trajectory"}, "1e12"), in({"kinetics"}, "1e6"))});
        d.push_back({"points", "trajectory points (log-spaced)", false, in({"trajectory"}, "50")});
        d.push_back({"n-max", "last trajectory step", false, in({"trajectory"}, "1000000")});
        d.push_back({"workloads", "model CSV (name,params,flops,reported_energy_j)", false, in({"fit"}, "")});
        d.push_back({"breakpoint", "parameter count splitting the trend", false, in({"fit"}, "1e9")});
        d.push_back({"pin-slopes", "fit intercepts only, with --slope-low/--slope-high", true, in({"fit"}, "false")});
        d.push_back({"slope-low", "pinned slope below the breakpoint", false, in({"fit"}, "2")});
        d.push_back({"slope-high", "pinned slope above the breakpoint", false, in({"fit"}, "1")});
        d.push_back({"continuity", "force the segments to meet at the breakpoint", true, in({"fit"}, "false")});
        d.push_back({"query", "parameter count to project", false, in({"fit"}, "1e15")});
        d.push_back({"baselines", "baseline key-value file", false, in({"compare"}, "")});
        d.push_back({"gpu-watts", "add GPU-hour equivalents at this power", false, in({"compare"}, "")});
        d.push_back({"seed", "64-bit RNG seed", false, in(mc, "1")});
        d.push_back({"barrier", "cell barrier in kT", false, in({"kinetics"}, "2")});
        d.push_back({"tilt", "cell tilt in kT", false, in({"kinetics"}, "1")});
        d.push_back({"dt", "time step in seconds", false, in({"kinetics"}, "1e-8")});
        d.push_back({"steps", "simulation steps", false, merge(in({"kinetics"}, "10000000"), in(walks, "10000"))});
        d.push_back({"scheme", "hop discretisation: linear or first-event", false, in({"kinetics"}, "linear")});
        d.push_back({"trials", "walk trials", false, in(walks, "200")});
        d.push_back({"beta", "tilt per unit loss decrease (kT)", false, in(walks, "10")});
        d.push_back({"start", "start cell ix,iy", false, in(walks, "10,10")});
        d.push_back({"loss", "quadratic loss coefficients a,b,c", false, in(walks, "1,0,1")});
        d.push_back({"grid-step", "parameter quantum", false, in(walks, "1")});
        d.push_back({"attempt-scale", "r_max * dt, at most 0.5", false, in(walks, "0.5")});
        d.push_back({"walk-barrier", "'profile' or a constant barrier in kT", false, in(walks, "profile")});
        d.push_back({"tolerance", "success radius in grid steps", false, in(walks, "2")});
        d.push_back({"dump", "write per-step walk CSV here", false, in({"walk"}, "")});
        d.push_back({"format", "json or csv", false,
                     merge(in({"estimate", "fit", "compare", "kinetics", "walk", "audit"}, "json"),
                           in({"sweep", "trajectory"}, "csv"))});
        d.push_back({"units", "energy display units: J or kT", false, in(energy, "J")});
        d.push_back({"output", "output file (default stdout)", false, in(all, "")});
        d.push_back({"no-timestamp", "omit the timestamp for byte-identical output", true, in(all, "false")});
        return d;
    }();
    return t;
}

// ------------------------------------------------------------ config files

inline std::string trim(const std::string& s) { return limb::detail::trim(s); }

/// Reads a flat `key = value` file, a JSON document with a "config" object,
/// or a CSV output whose `# config key = value` lines carry the run.
inline KeyValues parse_config_text(const std::string& text, const std::string& source) {
    KeyValues kv;
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        io::Json doc;
        try {
            doc = io::Json::parse(text);
        } catch (const std::exception& e) {
            throw ConfigError(source + ": invalid JSON (" + e.what() + ")");
        }
        const auto& cfg = doc.contains("config") ? doc["config"] : doc;
        if (!cfg.is_object()) throw ConfigError(source + ": \"config\" must be an object");
        for (auto it = cfg.begin(); it != cfg.end(); ++it) {
            const auto& v = it.value();
            if (v.is_string()) {
                kv.emplace_back(it.key(), v.get<std::string>());
            } else if (v.is_boolean()) {
                kv.emplace_back(it.key(), v.get<bool>() ? "true" : "false");
            } else if (v.is_number()) {
                kv.emplace_back(it.key(), io::shortest(v.get<double>()));
            } else {
                throw ConfigError(source + ": config value for '" + it.key() + "' must be a scalar");
            }
        }
        return kv;
    }

    static const std::string csv_prefix = "# config ";
    const bool csv_mode = text.find("\n" + csv_prefix) != std::string::npos || text.rfind(csv_prefix, 0) == 0;
    std::istringstream stream(text);
    std::string line;
    int lineno = 0;
    while (std::getline(stream, line)) {
        ++lineno;
        if (csv_mode) {
            if (line.rfind(csv_prefix, 0) != 0) continue;
            line = line.substr(csv_prefix.size());
        } else if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        const auto t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key = value");
        }
        kv.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return kv;
}

inline KeyValues load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str(), path);
}

// -------------------------------------------------------- resolved options

/// Resolved, context-checked option values.
class Options {
public:
    Options(std::string command, std::string context, KeyValues resolved)
        : command_(std::move(command)), context_(std::move(context)), resolved_(std::move(resolved)) {
        for (const auto& [k, v] : resolved_) values_[k] = v;
    }

    const std::string& command() const noexcept { return command_; }
    const std::string& context() const noexcept { return context_; }
    /// Echo of the run: command first, then every applicable option.
    const KeyValues& resolved() const noexcept { return resolved_; }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    const std::string& text(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError("missing required option --" + key);
        return it->second;
    }

    double number(const std::string& key) const { return limb::detail::parse_double(text(key), "--" + key); }

    std::optional<double> maybe_number(const std::string& key) const {
        if (!has(key)) return std::nullopt;
        return number(key);
    }

    double positive(const std::string& key) const {
        const double v = number(key);
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("--" + key + " must be a positive number");
        return v;
    }

    double non_negative(const std::string& key) const {
        const double v = number(key);
        if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("--" + key + " must be >= 0");
        return v;
    }

    std::int64_t integer(const std::string& key, std::int64_t min_value) const {
        const double v = number(key);
        if (!(v >= static_cast<double>(min_value)) || v != std::floor(v) || v > 9.0e15) {
            throw ConfigError("--" + key + " must be an integer >= " + std::to_string(min_value));
        }
        return static_cast<std::int64_t>(v);
    }

    std::uint64_t seed() const {
        const auto& s = text("seed");
        std::uint64_t v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
            throw ConfigError("--seed must be an unsigned 64-bit integer");
        }
        return v;
    }

    bool flag(const std::string& key) const { return has(key) && text(key) == "true"; }

    std::vector<std::string> list(const std::string& key) const {
        std::vector<std::string> out;
        std::stringstream ss(text(key));
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) out.push_back(item);
        }
        if (out.empty()) throw ConfigError("--" + key + " must not be empty");
        return out;
    }

    std::string choice(const std::string& key, std::initializer_list<const char*> allowed) const {
        const auto& v = text(key);
        std::string names;
        for (const char* a : allowed) {
            if (v == a) return v;
            names += names.empty() ? a : std::string(", ") + a;
        }
        throw ConfigError("--" + key + " must be one of " + names + " (got '" + v + "')");
    }

private:
    std::string command_;
    std::string context_;
    KeyValues resolved_;
    std::map<std::string, std::string> values_;
};

inline std::string default_temperature() {
    if (const char* env = std::getenv(kTemperatureEnv); env && *env) {
        const double t = limb::detail::parse_double(env, kTemperatureEnv);
        if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError(std::string(kTemperatureEnv) + " must be > 0");
        return env;
    }
    return "300";
}

inline std::string normalise_flag(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return "true";
    if (v == "false" || v == "0") return "false";
    throw ConfigError("config key '" + key + "' expects true or false");
}

/// Merges command-line values over config-file values, checks that every
/// explicit option applies to the chosen context and fills in defaults.
inline Options resolve(std::string command, const std::map<std::string, std::string>& given,
                       const KeyValues& file) {
    std::map<std::string, std::string> explicit_values = given;
    const bool cli_precision = given.count("bits") || given.count("delta");
    std::set<std::string> known;
    for (const auto& d : option_table()) known.insert(d.name);
    for (const auto& [k, v] : file) {
        if (k == "command") {
            if (command.empty()) command = v;
            continue;
        }
        if (!known.count(k)) throw ConfigError("unknown config key '" + k + "'");
        if (given.count(k)) continue;
        if ((k == "bits" || k == "delta") && cli_precision) continue;
        explicit_values[k] = v;
    }

    if (command.empty()) throw ConfigError("missing command (estimate, sweep, trajectory, fit, compare or mc)");
    if (std::find(commands().begin(), commands().end(), command) == commands().end()) {
        throw ConfigError("unknown command '" + command + "'");
    }
    if (explicit_values.count("bits") && explicit_values.count("delta")) {
        throw ConfigError("delta and bits are mutually exclusive");
    }

    std::string context = command;
    if (command == "mc") {
        context = explicit_values.count("mode") ? explicit_values.at("mode") : "kinetics";
        if (context != "kinetics" && context != "walk" && context != "audit") {
            throw ConfigError("--mode must be kinetics, walk or audit (got '" + context + "')");
        }
    }

    KeyValues resolved{{"command", command}};
    for (const auto& d : option_table()) {
        const auto use = d.uses.find(context);
        const auto ex = explicit_values.find(d.name);
        if (use == d.uses.end()) {
            if (ex != explicit_values.end()) {
                throw ConfigError("--" + d.name + " does not apply to '" +
                                  (command == "mc" ? "mc --mode " + context : command) + "'");
            }
            continue;
        }
        std::string value;
        if (ex != explicit_values.end()) {
            value = d.flag ? normalise_flag(d.name, ex->second) : ex->second;
        } else if (d.name == "temperature") {
            value = default_temperature();
        } else if (d.name == "bits" && explicit_values.count("delta")) {
            continue;
        } else {
            value = use->second;
        }
        if (value.empty()) continue;
        resolved.emplace_back(d.name, value);
    }
    return Options(command, context, std::move(resolved));
}

// ------------------------------------------------------------ run helpers

inline std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

class Runner {
public:
    explicit Runner(const Options& o) : o_(o), env_(o.positive("temperature")) {}

    std::string execute() {
        const auto& c = o_.command();
        if (c == "estimate") return estimate();
        if (c == "sweep") return sweep();
        if (c == "trajectory") return trajectory_cmd();
        if (c == "fit") return fit();
        if (c == "compare") return compare();
        return mc();
    }

private:
    const Options& o_;
    ThermalEnvironment env_;

    // ---- shared pieces

    std::string format() const { return o_.choice("format", {"json", "csv"}); }
    bool kt_units() const { return o_.has("units") && o_.choice("units", {"J", "kT"}) == "kT"; }

    io::Json meta(bool rng = false) const {
        io::Json m;
        m["tool"] = "limb";
        m["version"] = kVersion;
        if (!o_.flag("no-timestamp")) m["timestamp"] = timestamp_utc();
        m["temperature_k"] = env_.temperature();
        m["kt_joules"] = env_.kt();
        if (rng) m["rng"] = kRngName;
        return m;
    }

    io::Json config_json() const {
        io::Json c = io::Json::object();
        for (const auto& [k, v] : o_.resolved()) c[k] = v;
        return c;
    }

    std::string json_document(io::Json results, bool rng = false, io::Json extra = nullptr) const {
        io::Json doc;
        doc["meta"] = meta(rng);
        doc["config"] = config_json();
        if (!extra.is_null()) {
            for (auto it = extra.begin(); it != extra.end(); ++it) doc[it.key()] = it.value();
        }
        doc["results"] = std::move(results);
        std::ostringstream os;
        io::write_json(os, doc);
        return os.str();
    }

    std::string csv_preamble(const KeyValues& extra = {}) const {
        std::ostringstream os;
        os << "# limb " << kVersion << "\n";
        if (!o_.flag("no-timestamp")) os << "# timestamp = " << timestamp_utc() << "\n";
        os << "# temperature_k = " << io::format_number(env_.temperature()) << "\n";
        for (const auto& [k, v] : extra) os << "# " << k << " = " << v << "\n";
        for (const auto& [k, v] : o_.resolved()) os << "# config " << k << " = " << v << "\n";
        return os.str();
    }

    Workload workload() const {
        const double flops = o_.non_negative("flops");
        const double params = o_.non_negative("params");
        if (o_.has("delta")) {
            const double d = o_.number("delta");
            if (!(d > 0.0 && d <= 1.0)) throw ConfigError("--delta must lie in (0, 1]");
            return Workload(flops, params, d);
        }
        return Workload::from_bits(flops, params, o_.positive("bits"));
    }

    double delta() const {
        if (o_.has("delta")) {
            const double d = o_.number("delta");
            if (!(d > 0.0 && d <= 1.0)) throw ConfigError("--delta must lie in (0, 1]");
            return d;
        }
        return std::exp2(-o_.positive("bits"));
    }

    LimCalibration calibration() const {
        const int n = o_.has("cal-beta") + o_.has("cal-lambda-min") + o_.has("cal-bits");
        if (n == 0) return LimCalibration::asymptotic();
        if (n != 3) throw ConfigError("manual calibration needs --cal-beta, --cal-lambda-min and --cal-bits together");
        return LimCalibration::manual(o_.positive("cal-beta"), o_.positive("cal-lambda-min"),
                                      o_.positive("cal-bits"));
    }

    LimSetup setup(const UpdateRateSchedule& ur) const {
        LimSetup s;
        s.lr = LearningRateSchedule(o_.non_negative("lr-offset"));
        s.ur = ur;
        s.calibration = calibration();
        if (o_.has("tol")) s.series.rel_tol = o_.positive("tol");
        return s;
    }

    EnergyEstimate compute(const std::string& method, const Workload& w, const LimSetup& s) const {
        const auto& ur = s.ur;
        auto need_poly = [&] {
            if (ur.family() != RateFamily::polynomial) {
                throw ConfigError("method " + method + " needs a poly:GAMMA schedule");
            }
        };
        auto need_harmonic = [&] {
            if (s.lr.offset() != 0.0) throw ConfigError("method " + method + " assumes --lr-offset 0");
        };
        if (method == "lim-a") return lim_a_numeric(w, s, env_);
        if (method == "lim-b") return lim_b_numeric(w, s, env_);
        if (method == "lim-b-ub") return lim_b_upper(w, env_);
        if (method == "lim-a-closed") {
            need_poly();
            need_harmonic();
            return lim_a_closed_poly(w, ur.gamma(), env_, s.calibration);
        }
        if (method == "lim-b-lb") {
            need_poly();
            return lim_b_lower_closed(w, ur.gamma(), env_);
        }
        if (method == "lim-b-lb-finite") {
            need_poly();
            std::optional<std::int64_t> n;
            if (o_.has("truncation")) n = o_.integer("truncation", 1);
            return lim_b_lower_finite(w, ur.gamma(), env_, n);
        }
        if (method == "lim-a-exp" || method == "lim-b-exp") {
            if (!ur.is_exponential()) throw ConfigError("method " + method + " needs an exp:GAMMA or expunit schedule");
            need_harmonic();
            return method == "lim-a-exp" ? lim_a_exp_closed(w, ur.gamma(), env_, s.calibration)
                                         : lim_b_exp_closed(w, ur.gamma(), env_);
        }
        if (method == "ceb") return ceb_energy(w, env_, o_.maybe_number("e-bit"));
        if (method == "landauer") return landauer_measurement_total(w, env_);
        throw ConfigError("unknown method '" + method + "'");
    }

    std::vector<std::string> methods() const {
        auto m = o_.list("method");
        for (const auto& name : m) {
            static const std::set<std::string> ok{"lim-a",     "lim-a-closed", "lim-b",     "lim-b-ub",
                                                  "lim-b-lb",  "lim-b-lb-finite", "lim-a-exp", "lim-b-exp",
                                                  "ceb",       "landauer"};
            if (!ok.count(name)) throw ConfigError("unknown method '" + name + "'");
        }
        return m;
    }

    io::Json project(const EnergyEstimate& e, const std::string& cli_name, std::optional<double> gamma) const {
        io::Json j;
        j["method"] = method_tag(e.method);
        j["cli_method"] = cli_name;
        if (gamma) j["gamma"] = *gamma;
        j["per_op_kt"] = e.dynamic_kt_per_op;
        if (kt_units()) {
            j["dynamic_kt"] = e.flops * e.dynamic_kt_per_op;
            j["retention_kt"] = e.retention_kt;
            j["total_kt"] = e.total_kt();
        } else {
            j["dynamic_joules"] = e.dynamic_joules();
            j["retention_joules"] = e.retention_joules();
            j["total_joules"] = e.total_joules;
        }
        j["per_op_error_bound"] = e.per_op_error_bound();
        j["terms_used"] = e.terms_used();
        io::Json diags = io::Json::array();
        for (const auto& d : e.diagnostics) {
            io::Json dj;
            dj["name"] = d.name;
            dj["value"] = d.series.value;
            dj["terms_used"] = d.series.terms_used;
            dj["tail_bound"] = d.series.tail_bound;
            dj["converged"] = d.series.converged;
            diags.push_back(dj);
        }
        j["diagnostics"] = diags;
        io::Json notes = io::Json::array();
        for (const auto& n : e.notes) notes.push_back(n);
        j["notes"] = notes;
        return j;
    }

    std::string energy_csv_header() const {
        return kt_units() ? "method,gamma,per_op_kt,dynamic_kt,retention_kt,total_kt,terms_used,tail_bound\n"
                          : "method,gamma,per_op_kt,dynamic_j,retention_j,total_j,terms_used,tail_bound\n";
    }

    std::string energy_csv_row(const EnergyEstimate& e, std::optional<double> gamma) const {
        std::ostringstream os;
        const bool kt = kt_units();
        os << method_tag(e.method) << ',' << (gamma ? io::format_number(*gamma) : "") << ','
           << io::format_number(e.dynamic_kt_per_op) << ','
           << io::format_number(kt ? e.flops * e.dynamic_kt_per_op : e.dynamic_joules()) << ','
           << io::format_number(kt ? e.retention_kt : e.retention_joules()) << ','
           << io::format_number(kt ? e.total_kt() : e.total_joules) << ',' << e.terms_used() << ','
           << io::format_number(e.per_op_error_bound()) << '\n';
        return os.str();
    }

    static std::optional<double> schedule_gamma(const UpdateRateSchedule& ur) {
        if (ur.family() == RateFamily::log_poly) return std::nullopt;
        return ur.gamma();
    }

    // ---- commands

    std::string estimate() {
        const auto w = workload();
        const auto ur = UpdateRateSchedule::parse(o_.text("schedule"));
        const auto s = setup(ur);
        std::vector<std::pair<std::string, EnergyEstimate>> rows;
        for (const auto& m : methods()) rows.emplace_back(m, compute(m, w, s));
        if (format() == "csv") {
            std::string out = csv_preamble() + energy_csv_header();
            for (const auto& [m, e] : rows) out += energy_csv_row(e, schedule_gamma(ur));
            return out;
        }
        io::Json results = io::Json::array();
        for (const auto& [m, e] : rows) results.push_back(project(e, m, schedule_gamma(ur)));
        return json_document(results);
    }

    std::vector<double> gamma_grid() const {
        const auto& spec = o_.text("gamma");
        std::vector<std::string> parts;
        std::stringstream ss(spec);
        std::string item;
        while (std::getline(ss, item, ':')) parts.push_back(item);
        if (parts.size() != 3) throw ConfigError("--gamma expects lo:hi:count (got '" + spec + "')");
        const double lo = limb::detail::parse_double(parts[0], "--gamma");
        const double hi = limb::detail::parse_double(parts[1], "--gamma");
        const double count = limb::detail::parse_double(parts[2], "--gamma");
        if (!(lo > 0.0) || !(hi >= lo) || !(count >= 1.0) || count != std::floor(count)) {
            throw ConfigError("--gamma needs 0 < lo <= hi and an integer count >= 1");
        }
        const bool log_scale = o_.choice("gamma-scale", {"linear", "log"}) == "log";
        const auto n = static_cast<int>(count);
        std::vector<double> g;
        for (int i = 0; i < n; ++i) {
            const double f = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
            g.push_back(log_scale ? std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo)))
                                  : lo + f * (hi - lo));
        }
        g.back() = hi;
        return g;
    }

    std::string sweep() {
        const auto w = workload();
        const auto base = UpdateRateSchedule::parse(o_.text("schedule"));
        if (base.family() != RateFamily::polynomial && base.family() != RateFamily::exponential) {
            throw ConfigError("sweep needs a poly:GAMMA or exp:GAMMA schedule family");
        }
        const auto ms = methods();
        std::string csv = csv_preamble() + energy_csv_header();
        io::Json results = io::Json::array();
        for (double g : gamma_grid()) {
            const auto ur = base.family() == RateFamily::polynomial ? UpdateRateSchedule::polynomial(g)
                                                                   : UpdateRateSchedule::exponential(g);
            const auto s = setup(ur);
            for (const auto& m : ms) {
                const auto e = compute(m, w, s);
                csv += energy_csv_row(e, g);
                results.push_back(project(e, m, g));
            }
        }
        return format() == "csv" ? csv : json_document(results);
    }

    std::string trajectory_cmd() {
        const auto ur = UpdateRateSchedule::parse(o_.text("schedule"));
        const LearningRateSchedule lr(o_.non_negative("lr-offset"));
        const double c = calibration().c(delta());
        const auto t = limb::trajectory(lr, ur, c, o_.positive("r-max"), o_.integer("points", 1),
                                        o_.integer("n-max", 1), env_);
        const KeyValues summary{{"tilt_scale", io::format_number(c)},
                                {"infeasible_points", std::to_string(t.infeasible_points)},
                                {"monotonicity_violations", std::to_string(t.monotonicity_violations)}};
        if (format() == "csv") {
            std::ostringstream os;
            os << csv_preamble(summary) << "n,epsilon,r,tilt_kt,barrier_kt,power_w\n";
            for (const auto& p : t.points) {
                os << p.n << ',' << io::format_number(p.epsilon) << ',' << io::format_number(p.r) << ','
                   << io::format_number(p.tilt_kt) << ',' << io::format_number(p.barrier_kt) << ','
                   << io::format_number(p.power_watts) << '\n';
            }
            return os.str();
        }
        io::Json pts = io::Json::array();
        for (const auto& p : t.points) {
            pts.push_back({{"n", p.n},
                           {"epsilon", p.epsilon},
                           {"r", p.r},
                           {"tilt_kt", p.tilt_kt},
                           {"barrier_kt", p.barrier_kt},
                           {"power_w", p.power_watts},
                           {"feasible", p.feasible}});
        }
        io::Json extra;
        extra["summary"] = {{"tilt_scale", c},
                            {"infeasible_points", t.infeasible_points},
                            {"monotonicity_violations", t.monotonicity_violations}};
        return json_document(pts, false, extra);
    }

    std::string fit() {
        if (format() != "json") throw ConfigError("fit writes JSON only");
        if (!o_.has("workloads")) throw ConfigError("fit needs --workloads FILE");
        const auto records = load_model_csv(o_.text("workloads"));
        TrendFitOptions opt;
        opt.breakpoint_params = o_.positive("breakpoint");
        if (o_.flag("pin-slopes")) {
            opt.pinned_slope_low = o_.number("slope-low");
            opt.pinned_slope_high = o_.number("slope-high");
        }
        opt.continuity = o_.flag("continuity");
        const auto m = fit_trend(records, opt);
        const double q = o_.positive("query");
        io::Json r;
        r["records"] = records.size();
        r["points_low"] = m.points_low;
        r["points_high"] = m.points_high;
        r["single_segment"] = m.single_segment;
        r["continuity"] = m.continuity;
        r["breakpoint_params"] = m.breakpoint_params;
        r["slope_low"] = m.slope_low;
        r["intercept_low"] = m.intercept_low;
        r["slope_high"] = m.slope_high;
        r["intercept_high"] = m.intercept_high;
        r["query_params"] = q;
        r["projected_flops"] = project_flops(m, q);
        return json_document(r);
    }

    std::string compare() {
        const auto w = workload();
        std::vector<BaselineSpec> baselines;
        if (o_.has("baselines")) baselines = load_baselines(o_.text("baselines"));
        LimConfig cfg;
        cfg.setup = setup(UpdateRateSchedule::parse(o_.text("schedule")));
        const auto table = compare_workload(w, baselines, cfg, env_);
        const bool watts = o_.has("gpu-watts");
        const double gpu_w = watts ? o_.positive("gpu-watts") : 0.0;
        const bool kt = kt_units();
        if (format() == "csv") {
            std::ostringstream os;
            os << csv_preamble() << "name," << (kt ? "total_kt" : "total_j") << ",per_op_kt,ratio_to_lim_b"
               << (watts ? ",gpu_hours" : "") << ",notes\n";
            for (const auto& r : table.rows) {
                os << io::csv_cell(r.name) << ',' << io::format_number(kt ? to_kt(r.total_joules, env_) : r.total_joules)
                   << ',' << io::format_number(r.per_op_kt) << ',' << io::format_number(r.ratio_to_lim_b);
                if (watts) os << ',' << io::format_number(gpu_hours_equivalent(r.total_joules, gpu_w));
                os << ',' << io::csv_cell(r.notes) << '\n';
            }
            return os.str();
        }
        io::Json rows = io::Json::array();
        for (const auto& r : table.rows) {
            io::Json j;
            j["name"] = r.name;
            j[kt ? "total_kt" : "total_joules"] = kt ? to_kt(r.total_joules, env_) : r.total_joules;
            j["per_op_kt"] = r.per_op_kt;
            j["ratio_to_lim_b"] = r.ratio_to_lim_b;
            if (watts) j["gpu_hours"] = gpu_hours_equivalent(r.total_joules, gpu_w);
            j["baseline"] = r.baseline;
            if (!r.notes.empty()) j["notes"] = r.notes;
            rows.push_back(j);
        }
        return json_document(rows);
    }

    DescentWalkConfig walk_config() const {
        DescentWalkConfig c;
        c.grid_step = o_.positive("grid-step");
        const auto loss = o_.list("loss");
        if (loss.size() != 3) throw ConfigError("--loss expects a,b,c");
        c.loss = {limb::detail::parse_double(loss[0], "--loss"), limb::detail::parse_double(loss[1], "--loss"),
                  limb::detail::parse_double(loss[2], "--loss")};
        c.beta = o_.positive("beta");
        const auto& wb = o_.text("walk-barrier");
        if (wb == "profile") {
            c.barrier = ProfileBarrier{LearningRateSchedule(o_.non_negative("lr-offset")),
                                       UpdateRateSchedule::parse(o_.text("schedule")), 1.0 / delta()};
        } else {
            c.barrier = ConstantBarrier{limb::detail::parse_double(wb, "--walk-barrier")};
        }
        c.attempt_scale = o_.positive("attempt-scale");
        const auto start = o_.list("start");
        if (start.size() != 2) throw ConfigError("--start expects ix,iy");
        for (int i = 0; i < 2; ++i) {
            const double v = limb::detail::parse_double(start[i], "--start");
            if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError("--start expects integer grid cells");
            c.start[i] = static_cast<std::int64_t>(v);
        }
        c.steps = o_.integer("steps", 1);
        c.trials = o_.integer("trials", 1);
        c.seed = o_.seed();
        c.tolerance = o_.non_negative("tolerance");
        return c;
    }

    std::string mc() {
        if (format() != "json") throw ConfigError("mc writes JSON only (use --dump for per-step CSV)");
        const auto& mode = o_.context();
        if (mode == "kinetics") {
            KineticsExperiment e;
            e.cell = BistableCellParams(o_.non_negative("barrier"), o_.non_negative("tilt"), o_.positive("r-max"));
            e.dt = o_.positive("dt");
            e.steps = o_.integer("steps", 1);
            e.seed = o_.seed();
            e.scheme = o_.choice("scheme", {"linear", "first-event"}) == "linear" ? HopScheme::linear
                                                                                 : HopScheme::first_event;
            const auto r = mc_estimate_net_rate(e);
            const auto p = e.probabilities();
            io::Json j;
            j["rate"] = r.rate;
            j["standard_error"] = r.standard_error;
            j["analytic_rate"] = r.analytic;
            j["z_score"] = r.z_score();
            j["forward_hops"] = r.forward_hops;
            j["backward_hops"] = r.backward_hops;
            j["p_forward"] = p.forward;
            j["p_backward"] = p.backward;
            return json_document(j, true);
        }
        auto cfg = walk_config();
        if (mode == "audit") {
            const auto a = mc_energy_audit(cfg);
            io::Json j;
            j["trials"] = cfg.trials;
            j["total_hops"] = a.total_hops;
            j["lim_a_kt"] = {{"mean", a.lim_a.mean}, {"standard_error", a.lim_a.standard_error}};
            j["lim_b_kt"] = {{"mean", a.lim_b.mean}, {"standard_error", a.lim_b.standard_error}};
            j["lim_b_per_hop_kt"] = a.lim_b_per_hop;
            j["lim_b_hop_weighted_profile_kt"] = a.lim_b_hop_weighted_profile;
            return json_document(j, true);
        }
        cfg.record_trajectories = o_.has("dump");
        const auto w = mc_descent_walk(cfg);
        if (cfg.record_trajectories) write_dump(o_.text("dump"), w);
        io::Json j;
        j["trials"] = cfg.trials;
        j["steps"] = cfg.steps;
        j["initial_distance"] = w.initial_distance;
        j["within_tolerance"] = w.within_tolerance;
        j["fraction_within_tolerance"] = w.fraction_within_tolerance();
        j["total_hops"] = w.total_hops();
        j["mean_loss_increases"] = w.mean_loss_increases();
        double mean_final = 0.0;
        for (const auto& t : w.trials) mean_final += t.final_distance;
        j["mean_final_distance"] = mean_final / static_cast<double>(w.trials.size());
        io::Json curve = io::Json::array();
        curve.push_back({{"step", 0}, {"mean_loss", w.mean_loss[0]}});
        for (Step n : log_spaced_steps(std::min<Step>(cfg.steps, 60), cfg.steps)) {
            curve.push_back({{"step", n}, {"mean_loss", w.mean_loss[static_cast<std::size_t>(n)]}});
        }
        j["mean_loss"] = curve;
        return json_document(j, true);
    }

    void write_dump(const std::string& path, const WalkEnsemble& w) const {
        std::ofstream f(path);
        if (!f) throw ConfigError("cannot write dump file '" + path + "'");
        f << "trial,step,wx,wy,loss,hop\n";
        const double h = o_.positive("grid-step");
        for (const auto& r : w.records) {
            f << r.trial << ',' << r.step << ',' << io::format_number(h * static_cast<double>(r.ix)) << ','
              << io::format_number(h * static_cast<double>(r.iy)) << ',' << io::format_number(r.loss) << ','
              << (r.hop ? 1 : 0) << '\n';
        }
        if (!f) throw ConfigError("failed writing dump file '" + path + "'");
    }
};

// ------------------------------------------------------------------- entry

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Lower-bound energy estimates for learning-in-memory training", "limb"};
    app.set_version_flag("--version", kVersion);
    std::string command;
    std::string config_path;
    app.add_option("command", command, "estimate, sweep, trajectory, fit, compare or mc");
    app.add_option("--config", config_path, "key = value file, or a previous JSON/CSV output");
    std::map<std::string, std::string> values;
    std::map<std::string, bool> flags;
    for (const auto& d : option_table()) {
        if (d.flag) {
            app.add_flag("--" + d.name, flags[d.name], d.help);
        } else {
            app.add_option("--" + d.name, values[d.name], d.help);
        }
    }

    std::vector<const char*> argv{"limb"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << "limb " << kVersion << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    }

    try {
        std::map<std::string, std::string> given;
        for (const auto& d : option_table()) {
            if (app.count("--" + d.name) == 0) continue;
            given[d.name] = d.flag ? (flags[d.name] ? "true" : "false") : values[d.name];
        }
        KeyValues file;
        if (!config_path.empty()) file = load_config(config_path);
        const auto options = resolve(command, given, file);
        Runner runner(options);
        const auto text = runner.execute();
        if (options.has("output")) {
            std::ofstream f(options.text("output"));
            if (!f) throw ConfigError("cannot write output file '" + options.text("output") + "'");
            f << text;
            if (!f) throw ConfigError("failed writing output file '" + options.text("output") + "'");
        } else {
            out << text;
        }
        return kExitOk;
    } catch (const ConvergenceError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConvergence;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    }
}

inline int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, out, err);
}

}  // namespace limb::cli
