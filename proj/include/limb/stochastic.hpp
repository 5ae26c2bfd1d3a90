#pragma once
// Monte Carlo checks: hop counting for a single driven cell, and a directed
// random walk on a 2-D parameter grid whose hops follow the bistable kinetics.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "limb/errors.hpp"
#include "limb/estimators.hpp"
#include "limb/schedules.hpp"
#include "limb/thermo.hpp"

namespace limb {

inline constexpr const char* kRngName = "mt19937_64/seed_seq";

/// Generator for stream `stream` of experiment `seed`; streams are
/// independent of the order in which they are consumed.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

/// Uniform on [0, 1) from the top 53 bits; identical on every platform.
inline double uniform01(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

// ------------------------------------------------------------------ kinetics

enum class HopScheme {
    /// p = k dt, the first-order discretisation
    linear,
    /// p = 1 - exp(-K dt) split in proportion to the rates
    first_event,
};

struct KineticsExperiment {
    BistableCellParams cell{};
    std::int64_t steps = 10'000'000;
    double dt = 1e-8;
    std::uint64_t seed = 1;
    HopScheme scheme = HopScheme::linear;

    struct Probabilities {
        double forward;
        double backward;
    };

    Probabilities probabilities() const {
        const auto k = hop_rates(cell);
        if (scheme == HopScheme::linear) return {k.forward * dt, k.backward * dt};
        const double total = k.forward + k.backward;
        if (total == 0.0) return {0.0, 0.0};
        const double fire = -std::expm1(-total * dt);
        return {fire * k.forward / total, fire * k.backward / total};
    }

    void validate() const {
        cell.validate();
        if (steps < 1) throw ConfigError("kinetics: steps must be >= 1");
        if (!(dt > 0.0)) throw ConfigError("kinetics: dt must be > 0");
        if (cell.r_max * dt > 0.1) throw ConfigError("kinetics: r_max * dt must be <= 0.1");
        const auto p = probabilities();
        if (p.forward > 0.05 || p.backward > 0.05) {
            throw ConfigError("kinetics: per-step hop probability exceeds 0.05; reduce dt");
        }
    }
};

struct RateEstimate {
    double rate = 0.0;
    double standard_error = 0.0;
    std::int64_t forward_hops = 0;
    std::int64_t backward_hops = 0;
    double analytic = 0.0;

    double z_score() const {
        return standard_error > 0.0 ? (rate - analytic) / standard_error : (rate == analytic ? 0.0 : INFINITY);
    }
};

inline RateEstimate mc_estimate_net_rate(const KineticsExperiment& exp) {
    exp.validate();
    const auto p = exp.probabilities();
    const double p_any = p.forward + p.backward;
    auto gen = make_stream(exp.seed, 0);
    RateEstimate out;
    for (std::int64_t i = 0; i < exp.steps; ++i) {
        const double u = uniform01(gen);
        if (u < p.forward) {
            ++out.forward_hops;
        } else if (u < p_any) {
            ++out.backward_hops;
        }
    }
    const double n = static_cast<double>(exp.steps);
    const double elapsed = n * exp.dt;
    out.rate = static_cast<double>(out.forward_hops - out.backward_hops) / elapsed;
    const double drift = p.forward - p.backward;
    const double per_step_variance = p_any - drift * drift;
    out.standard_error = std::sqrt(n * per_step_variance) / elapsed;
    out.analytic = net_update_rate(exp.cell);
    return out;
}

// ------------------------------------------------------------- descent walk

struct QuadraticLoss {
    // L(w) = (a w_x^2 + 2 b w_x w_y + c w_y^2) / 2, minimum at the origin
    double a = 1.0;
    double b = 0.0;
    double c = 1.0;

    bool positive_definite() const noexcept { return a > 0.0 && a * c - b * b > 0.0; }
    double operator()(double x, double y) const noexcept { return 0.5 * (a * x * x + 2.0 * b * x * y + c * y * y); }
};

struct ProfileBarrier {
    LearningRateSchedule lr{};
    UpdateRateSchedule ur = UpdateRateSchedule::polynomial(0.3);
    double tilt_scale = 16.0;  // C = 1/delta
};

struct ConstantBarrier {
    double kt = 50.0;
};

using BarrierSchedule = std::variant<ProfileBarrier, ConstantBarrier>;

struct DescentWalkConfig {
    double grid_step = 1.0;
    QuadraticLoss loss{};
    double beta = 10.0;
    BarrierSchedule barrier = ProfileBarrier{};
    /// r_max dt: attempt scale per step, at most 0.5 so that p <= 1
    double attempt_scale = 0.5;
    std::array<std::int64_t, 2> start{10, 10};
    std::int64_t steps = 10'000;
    std::int64_t trials = 200;
    std::uint64_t seed = 1;
    double tolerance = 2.0;  // grid steps, Euclidean
    bool record_trajectories = false;

    void validate() const {
        if (!loss.positive_definite()) throw ConfigError("descent walk: loss matrix must be positive definite");
        if (!(grid_step > 0.0)) throw ConfigError("descent walk: grid step must be > 0");
        if (!(beta > 0.0)) throw ConfigError("descent walk: beta must be > 0");
        if (!(attempt_scale > 0.0 && attempt_scale <= 0.5)) {
            throw ConfigError("descent walk: r_max * dt must lie in (0, 0.5]");
        }
        if (steps < 1 || trials < 1) throw ConfigError("descent walk: steps and trials must be >= 1");
        if (!(tolerance >= 0.0)) throw ConfigError("descent walk: tolerance must be >= 0");
        if (const auto* c = std::get_if<ConstantBarrier>(&barrier); c && !(c->kt >= 0.0)) {
            throw ConfigError("descent walk: constant barrier must be >= 0 kT");
        }
        if (const auto* p = std::get_if<ProfileBarrier>(&barrier); p && !(p->tilt_scale > 0.0)) {
            throw ConfigError("descent walk: tilt scale must be > 0");
        }
    }

    double barrier_at(Step n) const {
        if (const auto* c = std::get_if<ConstantBarrier>(&barrier)) return c->kt;
        const auto& p = std::get<ProfileBarrier>(barrier);
        return std::max(0.0, barrier_profile(p.lr, p.ur, p.tilt_scale, n));
    }
};

struct WalkRecord {
    std::int64_t trial;
    std::int64_t step;
    std::int64_t ix, iy;
    double loss;
    bool hop;
};

struct TrialOutcome {
    std::int64_t hops = 0;
    double lim_a_kt = 0.0;  // sum of tilts over realised hops
    double lim_b_kt = 0.0;  // sum of barriers over realised hops
    std::array<std::int64_t, 2> final_position{};
    double final_distance = 0.0;  // grid steps
};

struct WalkEnsemble {
    std::vector<double> mean_loss;  // index 0 is the start, index n after step n
    std::vector<TrialOutcome> trials;
    std::vector<std::int64_t> hops_per_step;  // index n-1 for step n
    std::vector<WalkRecord> records;
    double initial_distance = 0.0;
    std::int64_t within_tolerance = 0;

    double fraction_within_tolerance() const {
        return trials.empty() ? 0.0 : static_cast<double>(within_tolerance) / static_cast<double>(trials.size());
    }
    std::int64_t total_hops() const {
        std::int64_t h = 0;
        for (const auto& t : trials) h += t.hops;
        return h;
    }
    /// Adjacent pairs where the ensemble mean loss rose.
    std::int64_t mean_loss_increases() const {
        std::int64_t k = 0;
        for (std::size_t i = 1; i < mean_loss.size(); ++i) k += mean_loss[i] > mean_loss[i - 1];
        return k;
    }
};

inline WalkEnsemble mc_descent_walk(const DescentWalkConfig& cfg) {
    cfg.validate();
    const double h = cfg.grid_step;
    auto loss_at = [&](std::int64_t ix, std::int64_t iy) {
        return cfg.loss(h * static_cast<double>(ix), h * static_cast<double>(iy));
    };

    // the barrier depends only on n, so tabulate it once
    std::vector<double> boltzmann(static_cast<std::size_t>(cfg.steps));
    std::vector<double> barrier(static_cast<std::size_t>(cfg.steps));
    for (Step n = 1; n <= cfg.steps; ++n) {
        barrier[n - 1] = cfg.barrier_at(n);
        boltzmann[n - 1] = 2.0 * cfg.attempt_scale * std::exp(-barrier[n - 1]);
    }

    WalkEnsemble out;
    out.mean_loss.assign(static_cast<std::size_t>(cfg.steps) + 1, 0.0);
    out.hops_per_step.assign(static_cast<std::size_t>(cfg.steps), 0);
    out.initial_distance = std::hypot(static_cast<double>(cfg.start[0]), static_cast<double>(cfg.start[1]));

    for (std::int64_t t = 0; t < cfg.trials; ++t) {
        auto gen = make_stream(cfg.seed, static_cast<std::uint64_t>(t));
        std::array<std::int64_t, 2> w = cfg.start;
        TrialOutcome trial;
        double current = loss_at(w[0], w[1]);
        out.mean_loss[0] += current;
        for (Step n = 1; n <= cfg.steps; ++n) {
            bool hopped = false;
            for (int axis = 0; axis < 2; ++axis) {
                const double u = uniform01(gen);  // drawn unconditionally to keep streams aligned
                auto moved = w;
                moved[axis] += 1;
                const double up = loss_at(moved[0], moved[1]) - current;
                moved[axis] -= 2;
                const double down = loss_at(moved[0], moved[1]) - current;
                const int dir = up < down ? 1 : -1;
                const double delta_loss = std::min(up, down);
                if (!(delta_loss < 0.0)) continue;
                const double tilt = cfg.beta * -delta_loss;
                const double p = boltzmann[n - 1] * std::tanh(0.5 * tilt);
                if (u < p) {
                    w[axis] += dir;
                    current = loss_at(w[0], w[1]);
                    ++trial.hops;
                    trial.lim_a_kt += tilt;
                    trial.lim_b_kt += barrier[n - 1];
                    ++out.hops_per_step[n - 1];
                    hopped = true;
                }
            }
            out.mean_loss[n] += current;
            if (cfg.record_trajectories) out.records.push_back({t, n, w[0], w[1], current, hopped});
        }
        trial.final_position = w;
        trial.final_distance = std::hypot(static_cast<double>(w[0]), static_cast<double>(w[1]));
        if (trial.final_distance <= cfg.tolerance) ++out.within_tolerance;
        out.trials.push_back(trial);
    }
    for (auto& m : out.mean_loss) m /= static_cast<double>(cfg.trials);
    return out;
}

struct AuditSummary {
    double mean = 0.0;
    double standard_error = 0.0;
};

struct EnergyAudit {
    std::vector<double> lim_a_kt;  // per trial
    std::vector<double> lim_b_kt;
    AuditSummary lim_a;
    AuditSummary lim_b;
    std::int64_t total_hops = 0;
    /// Realised dissipation per hop under LIM_B accounting.
    double lim_b_per_hop = 0.0;
    /// Barrier profile averaged with the empirical hop-count weights.
    double lim_b_hop_weighted_profile = 0.0;
};

namespace detail {
inline AuditSummary summarise(const std::vector<double>& v) {
    AuditSummary s;
    if (v.empty()) return s;
    const double n = static_cast<double>(v.size());
    for (double x : v) s.mean += x;
    s.mean /= n;
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.standard_error = std::sqrt(ss / (n - 1.0) / n);
    }
    return s;
}
}  // namespace detail

inline EnergyAudit mc_energy_audit(const DescentWalkConfig& cfg) {
    const auto walk = mc_descent_walk(cfg);
    EnergyAudit a;
    for (const auto& t : walk.trials) {
        a.lim_a_kt.push_back(t.lim_a_kt);
        a.lim_b_kt.push_back(t.lim_b_kt);
    }
    a.lim_a = detail::summarise(a.lim_a_kt);
    a.lim_b = detail::summarise(a.lim_b_kt);
    a.total_hops = walk.total_hops();
    if (a.total_hops > 0) {
        double realised = 0.0;
        for (double x : a.lim_b_kt) realised += x;
        a.lim_b_per_hop = realised / static_cast<double>(a.total_hops);
        NeumaierSum weighted;
        for (Step n = 1; n <= cfg.steps; ++n) {
            const auto hops = walk.hops_per_step[n - 1];
            if (hops) weighted.add(static_cast<double>(hops) * cfg.barrier_at(n));
        }
        a.lim_b_hop_weighted_profile = weighted.value() / static_cast<double>(a.total_hops);
    }
    return a;
}

}  // namespace limb
