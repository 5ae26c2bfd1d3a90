#pragma once
// Model records, the two-segment FLOPs-vs-parameters trend, and baseline
// comparisons against the LIM estimators.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "limb/errors.hpp"
#include "limb/estimators.hpp"

namespace limb {

struct ModelRecord {
    std::string name;
    double params = 0.0;
    double flops = 0.0;
    std::optional<double> reported_energy_j;

    void validate() const {
        if (!(params > 0.0)) throw DomainError("model '" + name + "': params must be > 0");
        if (!(flops > 0.0)) throw DomainError("model '" + name + "': flops must be > 0");
        if (reported_energy_j && !(*reported_energy_j > 0.0)) {
            throw DomainError("model '" + name + "': reported energy must be > 0 when present");
        }
    }
};

/// log10(flops) = intercept + slope * log10(params), split at the breakpoint.
struct TrendModel {
    double breakpoint_params = 1e9;
    double slope_low = 2.0;
    double slope_high = 1.0;
    double intercept_low = 0.0;
    double intercept_high = 0.0;
    bool continuity = false;
    bool single_segment = false;
    int points_low = 0;
    int points_high = 0;
};

struct TrendFitOptions {
    double breakpoint_params = 1e9;
    std::optional<double> pinned_slope_low;
    std::optional<double> pinned_slope_high;
    /// Force the segments to meet at the breakpoint (hinge fit).
    bool continuity = false;

    static TrendFitOptions pinned(double low = 2.0, double high = 1.0) {
        TrendFitOptions o;
        o.pinned_slope_low = low;
        o.pinned_slope_high = high;
        return o;
    }
};

namespace detail {

struct LineFit {
    double slope;
    double intercept;
};

inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y,
                             std::optional<double> pinned_slope) {
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    if (pinned_slope) return {*pinned_slope, my - *pinned_slope * mx};
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw FitError("cannot fit a slope: all parameter counts are identical");
    const double slope = sxy / sxx;
    return {slope, my - slope * mx};
}

// Solve the 2x2 or 3x3 normal equations by Gaussian elimination.
template <std::size_t K>
std::array<double, K> solve_normal(std::array<std::array<double, K>, K> a, std::array<double, K> b) {
    for (std::size_t c = 0; c < K; ++c) {
        std::size_t pivot = c;
        for (std::size_t r = c + 1; r < K; ++r) {
            if (std::abs(a[r][c]) > std::abs(a[pivot][c])) pivot = r;
        }
        if (!(std::abs(a[pivot][c]) > 1e-300)) throw FitError("hinge fit is degenerate");
        std::swap(a[c], a[pivot]);
        std::swap(b[c], b[pivot]);
        for (std::size_t r = c + 1; r < K; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < K; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    std::array<double, K> x{};
    for (std::size_t i = K; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < K; ++k) s -= a[i][k] * x[k];
        x[i] = s / a[i][i];
    }
    return x;
}

}  // namespace detail

/// Fits the two-segment trend. Records with params < breakpoint go to the low
/// segment. With fewer than two points on a side (one if that slope is
/// pinned) a single segment is fitted through all records instead.
inline TrendModel fit_trend(const std::vector<ModelRecord>& records, const TrendFitOptions& opt = {}) {
    if (!(opt.breakpoint_params > 0.0)) throw FitError("breakpoint must be > 0 parameters");
    std::vector<double> xl, yl, xh, yh;
    for (const auto& r : records) {
        r.validate();
        const double x = std::log10(r.params);
        const double y = std::log10(r.flops);
        if (r.params < opt.breakpoint_params) {
            xl.push_back(x);
            yl.push_back(y);
        } else {
            xh.push_back(x);
            yh.push_back(y);
        }
    }

    TrendModel m;
    m.breakpoint_params = opt.breakpoint_params;
    m.points_low = static_cast<int>(xl.size());
    m.points_high = static_cast<int>(xh.size());
    const std::size_t need_low = opt.pinned_slope_low ? 1 : 2;
    const std::size_t need_high = opt.pinned_slope_high ? 1 : 2;

    if (xl.size() < need_low || xh.size() < need_high) {
        std::vector<double> x = xl, y = yl;
        x.insert(x.end(), xh.begin(), xh.end());
        y.insert(y.end(), yh.begin(), yh.end());
        if (x.size() < 2) {
            std::string side;
            if (xl.size() < need_low) side = "low (params < breakpoint)";
            if (xh.size() < need_high) side += std::string(side.empty() ? "" : " and ") + "high (params >= breakpoint)";
            throw FitError("insufficient data: the " + side +
                           " segment lacks records, and fewer than two records remain for a single-segment fit");
        }
        const auto fit = detail::least_squares(x, y, std::nullopt);
        m.single_segment = true;
        m.slope_low = m.slope_high = fit.slope;
        m.intercept_low = m.intercept_high = fit.intercept;
        m.continuity = true;
        return m;
    }

    if (!opt.continuity) {
        const auto lo = detail::least_squares(xl, yl, opt.pinned_slope_low);
        const auto hi = detail::least_squares(xh, yh, opt.pinned_slope_high);
        m.slope_low = lo.slope;
        m.intercept_low = lo.intercept;
        m.slope_high = hi.slope;
        m.intercept_high = hi.intercept;
        return m;
    }

    // Hinge: y = a + s_l min(x - xb, 0) + s_h max(x - xb, 0)
    const double xb = std::log10(opt.breakpoint_params);
    struct Row {
        double lo, hi, y;
    };
    std::vector<Row> rows;
    for (std::size_t i = 0; i < xl.size(); ++i) rows.push_back({xl[i] - xb, 0.0, yl[i]});
    for (std::size_t i = 0; i < xh.size(); ++i) rows.push_back({0.0, xh[i] - xb, yh[i]});

    // free unknowns: a always, plus each unpinned slope
    std::vector<int> which{0};
    if (!opt.pinned_slope_low) which.push_back(1);
    if (!opt.pinned_slope_high) which.push_back(2);
    auto feature = [&](const Row& r, int k) { return k == 0 ? 1.0 : (k == 1 ? r.lo : r.hi); };
    auto residual_y = [&](const Row& r) {
        double y = r.y;
        if (opt.pinned_slope_low) y -= *opt.pinned_slope_low * r.lo;
        if (opt.pinned_slope_high) y -= *opt.pinned_slope_high * r.hi;
        return y;
    };
    std::array<std::array<double, 3>, 3> ata{};
    std::array<double, 3> atb{};
    const std::size_t k = which.size();
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) ata[i][j] += feature(r, which[i]) * feature(r, which[j]);
            atb[i] += feature(r, which[i]) * residual_y(r);
        }
    }
    for (std::size_t i = k; i < 3; ++i) {
        ata[i][i] = 1.0;  // pad unused unknowns
    }
    const auto sol = detail::solve_normal<3>(ata, atb);
    double a = 0.0;
    double sl = opt.pinned_slope_low.value_or(0.0);
    double sh = opt.pinned_slope_high.value_or(0.0);
    for (std::size_t i = 0; i < k; ++i) {
        if (which[i] == 0) a = sol[i];
        if (which[i] == 1) sl = sol[i];
        if (which[i] == 2) sh = sol[i];
    }
    m.continuity = true;
    m.slope_low = sl;
    m.slope_high = sh;
    m.intercept_low = a - sl * xb;
    m.intercept_high = a - sh * xb;
    return m;
}

inline double project_flops(const TrendModel& m, double params) {
    if (!(params > 0.0)) throw DomainError("project_flops: params must be > 0");
    const double x = std::log10(params);
    const bool low = params < m.breakpoint_params;
    const double y = low ? m.intercept_low + m.slope_low * x : m.intercept_high + m.slope_high * x;
    return std::pow(10.0, y);
}

/// Trend model anchored through a single point per segment.
inline TrendModel anchored_trend(double breakpoint, double slope_low, double low_params, double low_flops,
                                 double slope_high, double high_params, double high_flops) {
    TrendModel m;
    m.breakpoint_params = breakpoint;
    m.slope_low = slope_low;
    m.slope_high = slope_high;
    m.intercept_low = std::log10(low_flops) - slope_low * std::log10(low_params);
    m.intercept_high = std::log10(high_flops) - slope_high * std::log10(high_params);
    return m;
}

struct BaselineSpec {
    std::string name;
    double joules_per_flop = 0.0;
    std::string notes;

    void validate() const {
        if (name.empty()) throw ConfigError("baseline entry without a name");
        if (!(joules_per_flop > 0.0)) throw ConfigError("baseline '" + name + "': joules_per_flop must be > 0");
    }
};

inline double gpu_hours_equivalent(double energy_j, double gpu_watts) {
    if (!(energy_j >= 0.0)) throw DomainError("gpu_hours_equivalent: energy must be >= 0");
    if (!(gpu_watts > 0.0)) throw DomainError("gpu_hours_equivalent: GPU power must be > 0 W");
    return energy_j / gpu_watts / 3600.0;
}

// ---------------------------------------------------------------- ingestion

namespace detail {

inline std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
        } else if (c == ',' && !quoted) {
            out.push_back(trim(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    out.push_back(trim(field));
    return out;
}

}  // namespace detail

/// CSV with header `name,params,flops,reported_energy_j`; `#` lines skipped.
inline std::vector<ModelRecord> parse_model_csv(std::istream& in, const std::string& source = "<stream>") {
    std::vector<ModelRecord> records;
    std::string line;
    bool header_seen = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto fields = detail::split_csv_line(t);
        if (!header_seen) {
            if (fields.size() < 3 || fields[0] != "name" || fields[1] != "params" || fields[2] != "flops" ||
                (fields.size() > 3 && fields[3] != "reported_energy_j")) {
                throw ParseError(source + ":" + std::to_string(lineno) +
                                 ": expected header name,params,flops,reported_energy_j");
            }
            header_seen = true;
            continue;
        }
        if (fields.size() < 3 || fields.size() > 4) {
            throw ParseError(source + ":" + std::to_string(lineno) + ": expected 3 or 4 fields");
        }
        const std::string where = source + ":" + std::to_string(lineno);
        ModelRecord r;
        r.name = fields[0];
        r.params = detail::parse_double(fields[1], where);
        r.flops = detail::parse_double(fields[2], where);
        if (fields.size() == 4 && !fields[3].empty()) r.reported_energy_j = detail::parse_double(fields[3], where);
        try {
            r.validate();
        } catch (const DomainError& e) {
            throw ParseError(where + ": " + e.what());
        }
        records.push_back(std::move(r));
    }
    if (!header_seen) throw ParseError(source + ": empty workload file");
    return records;
}

inline std::vector<ModelRecord> load_model_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open workload file '" + path + "'");
    return parse_model_csv(in, path);
}

/// Key-value blocks; each `name = ...` line starts a new entry.
inline std::vector<BaselineSpec> parse_baselines(std::istream& in, const std::string& source = "<stream>") {
    std::vector<BaselineSpec> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto t = detail::trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        const std::string where = source + ":" + std::to_string(lineno);
        if (eq == std::string::npos) throw ParseError(where + ": expected key = value");
        const auto key = detail::trim(t.substr(0, eq));
        const auto value = detail::trim(t.substr(eq + 1));
        if (key == "name") {
            out.push_back({value, 0.0, {}});
        } else if (out.empty()) {
            throw ParseError(where + ": '" + key + "' before the first name entry");
        } else if (key == "joules_per_flop") {
            out.back().joules_per_flop = detail::parse_double(value, where);
        } else if (key == "notes") {
            out.back().notes = value;
        } else {
            throw ParseError(where + ": unknown baseline key '" + key + "'");
        }
    }
    for (const auto& b : out) b.validate();
    return out;
}

inline std::vector<BaselineSpec> load_baselines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open baseline file '" + path + "'");
    return parse_baselines(in, path);
}

// --------------------------------------------------------------- comparison

struct ComparisonRow {
    std::string name;
    double total_joules = 0.0;
    double per_op_kt = 0.0;
    double ratio_to_lim_b = 0.0;
    bool baseline = false;
    std::string notes;
};

struct ComparisonTable {
    std::vector<ComparisonRow> rows;
    double temperature = kDefaultTemperature;

    const ComparisonRow* find(const std::string& name) const {
        for (const auto& r : rows) {
            if (r.name == name) return &r;
        }
        return nullptr;
    }
};

struct LimConfig {
    LimSetup setup{};
};

inline ComparisonTable compare_workload(const Workload& w, const std::vector<BaselineSpec>& baselines,
                                        const LimConfig& cfg = {}, const ThermalEnvironment& env = {}) {
    ComparisonTable t;
    t.temperature = env.temperature();
    for (const auto& b : baselines) {
        b.validate();
        ComparisonRow row;
        row.name = b.name;
        row.total_joules = w.flops() * b.joules_per_flop;
        row.per_op_kt = b.joules_per_flop / env.kt();
        row.baseline = true;
        row.notes = b.notes.empty() ? "assumption" : "assumption; " + b.notes;
        t.rows.push_back(row);
    }

    std::vector<EnergyEstimate> estimates;
    estimates.push_back(ceb_energy(w, env));
    estimates.push_back(landauer_measurement_total(w, env));
    estimates.push_back(lim_a_numeric(w, cfg.setup, env));
    const auto lim_b = lim_b_numeric(w, cfg.setup, env);
    estimates.push_back(lim_b);
    estimates.push_back(lim_b_upper(w, env));
    if (cfg.setup.ur.family() == RateFamily::polynomial) {
        estimates.push_back(lim_b_lower_closed(w, cfg.setup.ur.gamma(), env));
        estimates.push_back(lim_b_lower_finite(w, cfg.setup.ur.gamma(), env));
    }
    for (const auto& e : estimates) {
        ComparisonRow row;
        row.name = method_tag(e.method);
        row.total_joules = e.total_joules;
        row.per_op_kt = e.dynamic_kt_per_op;
        t.rows.push_back(row);
    }
    for (auto& r : t.rows) r.ratio_to_lim_b = r.total_joules / lim_b.total_joules;
    return t;
}

}  // namespace limb
