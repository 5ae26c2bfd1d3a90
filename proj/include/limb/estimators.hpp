#pragma once
// Energy-dissipation estimators for training under learning-in-memory (LIM)
// and the constant-barrier / Landauer baselines they are compared with.
//
// Totals follow the rate-eliminated form
//
//     E_total = #FLOPs * [sum w_n r(n) / sum r(n)] * kT + M * log(1/delta) * kT
//
// where w_n is the per-update dissipation in kT: C eps_n for LIM_A (energy
// harvested from the gradient) and the barrier height E0_n for LIM_B. The
// retention term charges the final barrier floor log(1/delta) once.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "limb/errors.hpp"
#include "limb/schedules.hpp"
#include "limb/series.hpp"
#include "limb/thermo.hpp"
#include "limb/zeta.hpp"

namespace limb {

inline constexpr double kDefaultRMax = 1e12;  // ~1 THz switching ceiling
inline constexpr double kDefaultBits = 16.0;

class Workload {
public:
    Workload(double flops, double params, double delta, std::string label = {})
        : flops_(flops), params_(params), delta_(delta), label_(std::move(label)) {
        if (!(flops >= 0.0) || !std::isfinite(flops)) throw DomainError("workload flops must be finite and >= 0");
        if (!(params >= 0.0) || !std::isfinite(params)) throw DomainError("workload params must be finite and >= 0");
        if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("workload precision delta must lie in (0, 1]");
    }

    static Workload from_bits(double flops, double params, double bits, std::string label = {}) {
        if (!(bits >= 0.0) || !std::isfinite(bits)) throw DomainError("workload bits must be finite and >= 0");
        return Workload(flops, params, std::exp2(-bits), std::move(label));
    }

    double flops() const noexcept { return flops_; }
    double params() const noexcept { return params_; }
    double delta() const noexcept { return delta_; }
    double bits() const noexcept { return -std::log2(delta_); }
    /// log(1/delta)
    double retention_barrier() const noexcept { return -std::log(delta_); }
    const std::string& label() const noexcept { return label_; }

    Workload with_flops(double f) const { return Workload(f, params_, delta_, label_); }
    Workload with_params(double m) const { return Workload(flops_, m, delta_, label_); }

private:
    double flops_;
    double params_;
    double delta_;
    std::string label_;
};

/// Maps algorithmic learning rate to physical tilt: dE_n = C eps_n kT.
class LimCalibration {
public:
    /// C = 1/delta (the model-agnostic default).
    static LimCalibration asymptotic() { return LimCalibration(); }

    /// C = beta * lambda_min * 2^{-2P}.
    static LimCalibration manual(double beta, double lambda_min, double precision_bits) {
        if (!(beta > 0.0)) throw DomainError("calibration beta must be > 0");
        if (!(lambda_min > 0.0)) throw DomainError("calibration lambda_min must be > 0");
        if (!(precision_bits > 0.0)) throw DomainError("calibration precision bits must be > 0");
        LimCalibration c;
        c.manual_ = true;
        c.beta_ = beta;
        c.lambda_min_ = lambda_min;
        c.precision_bits_ = precision_bits;
        return c;
    }

    bool is_manual() const noexcept { return manual_; }
    double beta() const noexcept { return beta_; }
    double lambda_min() const noexcept { return lambda_min_; }
    double precision_bits() const noexcept { return precision_bits_; }

    double c(double delta) const {
        if (!manual_) return 1.0 / delta;
        const double value = beta_ * lambda_min_ * std::exp2(-2.0 * precision_bits_);
        if (!(value > 0.0) || !std::isfinite(value)) throw DomainError("calibration constant C underflowed or overflowed");
        return value;
    }

private:
    bool manual_ = false;
    double beta_ = 0.0;
    double lambda_min_ = 0.0;
    double precision_bits_ = 0.0;
};

enum class Method {
    lim_a_numeric,
    lim_a_closed,
    lim_b_numeric,
    lim_b_upper,
    lim_b_lower_finite,
    lim_b_lower_closed,
    lim_a_exp_closed,
    lim_b_exp_closed,
    ceb,
    landauer_measurement,
};

inline const char* method_tag(Method m) {
    switch (m) {
        case Method::lim_a_numeric: return "LIM_A_NUM";
        case Method::lim_a_closed: return "LIM_A_CLOSED";
        case Method::lim_b_numeric: return "LIM_B_NUM";
        case Method::lim_b_upper: return "LIM_B_UB";
        case Method::lim_b_lower_finite: return "LIM_B_LB_FINITE";
        case Method::lim_b_lower_closed: return "LIM_B_LB_CLOSED";
        case Method::lim_a_exp_closed: return "LIM_A_EXP_CLOSED";
        case Method::lim_b_exp_closed: return "LIM_B_EXP_CLOSED";
        case Method::ceb: return "CEB";
        case Method::landauer_measurement: return "LANDAUER_MEAS";
    }
    return "?";
}

struct NamedSeries {
    std::string name;
    SeriesResult series;
};

struct EnergyEstimate {
    Method method{};
    double flops = 0.0;
    double temperature = kDefaultTemperature;
    double dynamic_kt_per_op = 0.0;
    double retention_kt = 0.0;
    double total_joules = 0.0;
    std::vector<NamedSeries> diagnostics;
    std::vector<std::string> notes;

    double kt() const noexcept { return kBoltzmann * temperature; }
    double dynamic_joules() const noexcept { return flops * dynamic_kt_per_op * kt(); }
    double retention_joules() const noexcept { return retention_kt * kt(); }
    double total_kt() const noexcept { return flops * dynamic_kt_per_op + retention_kt; }

    /// Propagated bound on dynamic_kt_per_op from the series tails (0 for
    /// closed forms).
    double per_op_error_bound() const noexcept {
        double rel = 0.0;
        for (const auto& d : diagnostics) {
            if (d.series.value != 0.0) rel += d.series.tail_bound / std::abs(d.series.value);
        }
        return rel * std::abs(dynamic_kt_per_op);
    }
    std::int64_t terms_used() const noexcept {
        std::int64_t n = 0;
        for (const auto& d : diagnostics) n = std::max(n, d.series.terms_used);
        return n;
    }
};

namespace detail {

inline EnergyEstimate make_estimate(Method m, const Workload& w, const ThermalEnvironment& env, double per_op,
                                    double retention_kt) {
    EnergyEstimate e;
    e.method = m;
    e.flops = w.flops();
    e.temperature = env.temperature();
    e.dynamic_kt_per_op = per_op;
    e.retention_kt = retention_kt;
    e.total_joules = (w.flops() * per_op + retention_kt) * env.kt();
    return e;
}

inline EnergyEstimate make_lim_estimate(Method m, const Workload& w, const ThermalEnvironment& env, double per_op) {
    return make_estimate(m, w, env, per_op, w.params() * w.retention_barrier());
}

inline void require_gamma(double gamma, const char* fn) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError(std::string(fn) + ": gamma must be > 0");
}

}  // namespace detail

/// E0_inf floor log(1/delta) in kT.
inline double asymptotic_barrier(double delta) {
    if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("asymptotic_barrier: delta must lie in (0, 1]");
    return -std::log(delta);
}

/// Barrier at step n at equality of the learning-rate bound; negative values
/// mark infeasible points.
inline double barrier_profile(const LearningRateSchedule& lr, const UpdateRateSchedule& ur, double tilt_scale,
                              Step n) {
    detail::require_step(n, "barrier_profile");
    const double x = static_cast<double>(n);
    return std::numbers::ln2 + ur.neg_log_rate(x) + log_tanh_half(tilt_scale * lr(n));
}

/// Convenience overload with the asymptotic calibration C = 1/delta.
inline double barrier_profile_for_precision(const LearningRateSchedule& lr, const UpdateRateSchedule& ur,
                                            double delta, Step n) {
    return barrier_profile(lr, ur, LimCalibration::asymptotic().c(delta), n);
}

struct LimSetup {
    LearningRateSchedule lr{};
    UpdateRateSchedule ur = UpdateRateSchedule::polynomial(2.0);
    LimCalibration calibration = LimCalibration::asymptotic();
    SeriesOptions series{};
};

inline EnergyEstimate lim_a_numeric(const Workload& w, const LimSetup& setup, const ThermalEnvironment& env = {}) {
    const double c = setup.calibration.c(w.delta());
    const TermContext ctx{setup.lr, c};
    auto num = sum_weighted(setup.ur, Integrand::learning_rate, ctx, setup.series);
    auto den = sum_weighted(setup.ur, Integrand::unit, ctx, setup.series);
    auto e = detail::make_lim_estimate(Method::lim_a_numeric, w, env, c * num.value / den.value);
    e.diagnostics = {{"sum_eps_r", num}, {"sum_r", den}};
    return e;
}

inline EnergyEstimate lim_a_closed_poly(const Workload& w, double gamma, const ThermalEnvironment& env = {},
                                        const LimCalibration& cal = LimCalibration::asymptotic()) {
    detail::require_gamma(gamma, "lim_a_closed_poly");
    const double c = cal.c(w.delta());
    auto e = detail::make_lim_estimate(Method::lim_a_closed, w, env, c * zeta(2.0 + gamma) / zeta(1.0 + gamma));
    e.notes.push_back("assumes eps_n = 1/n and r(n) = n^-(1+gamma)");
    return e;
}

inline EnergyEstimate lim_b_numeric(const Workload& w, const LimSetup& setup, const ThermalEnvironment& env = {}) {
    const double c = setup.calibration.c(w.delta());
    const TermContext ctx{setup.lr, c};
    auto num = sum_weighted(setup.ur, Integrand::lim_b_barrier, ctx, setup.series);
    auto den = sum_weighted(setup.ur, Integrand::unit, ctx, setup.series);
    auto e = detail::make_lim_estimate(Method::lim_b_numeric, w, env, num.value / den.value);
    e.diagnostics = {{"sum_barrier_r", num}, {"sum_r", den}};
    if (barrier_profile(setup.lr, setup.ur, c, 1) < 0.0) {
        e.notes.push_back("barrier profile is negative at n = 1 (infeasible head)");
    }
    return e;
}

inline EnergyEstimate lim_b_upper(const Workload& w, const ThermalEnvironment& env = {}) {
    return detail::make_lim_estimate(Method::lim_b_upper, w, env, w.retention_barrier());
}

inline EnergyEstimate lim_b_lower_closed(const Workload& w, double gamma, const ThermalEnvironment& env = {}) {
    detail::require_gamma(gamma, "lim_b_lower_closed");
    const double s = 1.0 + gamma;
    auto e = detail::make_lim_estimate(Method::lim_b_lower_closed, w, env,
                                       std::numbers::ln2 - gamma * zeta_prime(s) / zeta(s));
    if (gamma < 1.0) e.notes.push_back("gamma < 1 is outside the gamma >> 1 derivation regime");
    return e;
}

/// sum_{n<=N} log(n) / n^s, exact up to 1e6 terms and Euler-Maclaurin beyond.
inline double truncated_log_zeta_sum(double s, std::int64_t N) {
    constexpr std::int64_t direct_limit = 1'000'000;
    const std::int64_t direct = std::min(N, direct_limit);
    NeumaierSum acc;
    for (std::int64_t n = 2; n <= direct; ++n) {
        const double x = static_cast<double>(n);
        acc.add(std::log(x) * std::pow(x, -s));
    }
    if (N <= direct_limit) return acc.value();

    // sum_{n=M+1}^{N} f = int_M^N f + (f(N) - f(M))/2 + (f'(N) - f'(M))/12
    const double M = static_cast<double>(direct);
    const double top = static_cast<double>(N);
    const double sm1 = s - 1.0;
    auto antiderivative = [&](double x) { return -std::pow(x, -sm1) * (std::log(x) / sm1 + 1.0 / (sm1 * sm1)); };
    auto f = [&](double x) { return std::log(x) * std::pow(x, -s); };
    auto fprime = [&](double x) { return std::pow(x, -s - 1.0) * (1.0 - s * std::log(x)); };
    acc.add(antiderivative(top) - antiderivative(M));
    acc.add(0.5 * (f(top) - f(M)));
    acc.add((fprime(top) - fprime(M)) / 12.0);
    return acc.value();
}

/// Finite-N lower-bound form carrying the (1+gamma) prefactor; N defaults to
/// floor(1/delta).
inline EnergyEstimate lim_b_lower_finite(const Workload& w, double gamma, const ThermalEnvironment& env = {},
                                         std::optional<std::int64_t> truncation = std::nullopt) {
    detail::require_gamma(gamma, "lim_b_lower_finite");
    const double s = 1.0 + gamma;
    double n_default = std::floor(1.0 / w.delta());
    n_default = std::min(n_default, 9.0e18);
    const std::int64_t N = truncation.value_or(static_cast<std::int64_t>(n_default));
    if (N < 1) throw DomainError("lim_b_lower_finite: truncation N must be >= 1");
    const double per_op = std::numbers::ln2 + s * truncated_log_zeta_sum(s, N) / zeta(s);
    auto e = detail::make_lim_estimate(Method::lim_b_lower_finite, w, env, per_op);
    e.notes.push_back("truncation N = " + std::to_string(N));
    return e;
}

namespace detail {
// -log(1 - e^{-g}) accurately for all g > 0
inline double neg_log_one_minus_exp(double g) {
    return g > 1.0 ? -std::log1p(-std::exp(-g)) : -std::log(-std::expm1(-g));
}
}  // namespace detail

inline EnergyEstimate lim_a_exp_closed(const Workload& w, double gamma, const ThermalEnvironment& env = {},
                                       const LimCalibration& cal = LimCalibration::asymptotic()) {
    detail::require_gamma(gamma, "lim_a_exp_closed");
    const double c = cal.c(w.delta());
    const double per_op = c * std::expm1(gamma) * detail::neg_log_one_minus_exp(gamma);
    auto e = detail::make_lim_estimate(Method::lim_a_exp_closed, w, env, per_op);
    e.notes.push_back("assumes eps_n = 1/n and r(n) = exp(-gamma n)");
    return e;
}

inline EnergyEstimate lim_b_exp_closed(const Workload& w, double gamma, const ThermalEnvironment& env = {}) {
    detail::require_gamma(gamma, "lim_b_exp_closed");
    const double per_op = std::numbers::ln2 + gamma / -std::expm1(-gamma);
    auto e = detail::make_lim_estimate(Method::lim_b_exp_closed, w, env, per_op);
    e.notes.push_back("drops the tanh factor (saturated-tilt approximation)");
    return e;
}

/// Constant energy barrier: (#FLOPs + M) * bits * e_bit. Without an explicit
/// per-bit energy each bit costs kT log 2, so a word costs kT log(1/delta).
inline EnergyEstimate ceb_energy(const Workload& w, const ThermalEnvironment& env = {},
                                 std::optional<double> e_bit_joules = std::nullopt) {
    const double bits = w.bits();
    if (!(bits > 0.0)) throw DomainError("ceb_energy: bits must be > 0");
    double e_bit_kt = std::numbers::ln2;
    if (e_bit_joules) {
        if (!(*e_bit_joules > 0.0)) throw DomainError("ceb_energy: e_bit must be > 0 J");
        e_bit_kt = *e_bit_joules / env.kt();
    }
    const double per_word = bits * e_bit_kt;
    auto e = detail::make_estimate(Method::ceb, w, env, per_word, w.params() * per_word);
    if (e_bit_joules) {
        // keep the joule total exact rather than round-tripping through kT
        e.total_joules = (w.flops() + w.params()) * bits * *e_bit_joules;
        e.notes.push_back("device e_bit = " + std::to_string(*e_bit_joules) + " J");
    }
    return e;
}

/// Shannon capacity f_c [1 + p log2 p + (1-p) log2(1-p)] of a binary channel.
inline double shannon_capacity(double p, double clock_hz) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("shannon_capacity: p must lie in [0, 1]");
    auto plogp = [](double q) { return q > 0.0 ? q * std::log2(q) : 0.0; };
    return clock_hz * (1.0 + plogp(p) + plogp(1.0 - p));
}

/// Energy per measured bit (joules) near p = 0.5: switching power
/// f_c C W^2 / 2 over the small-signal capacity W^2 f_c / (4 pi ln2 kT / C).
inline double measurement_energy_per_bit(double c_meas, double w_meas, double clock_hz,
                                         const ThermalEnvironment& env) {
    if (!(c_meas > 0.0 && w_meas > 0.0 && clock_hz > 0.0)) {
        throw DomainError("measurement_energy_per_bit: capacitance, swing and clock must be > 0");
    }
    const double power = clock_hz * 0.5 * c_meas * w_meas * w_meas;
    const double noise_variance = env.kt() / c_meas;
    const double capacity = w_meas * w_meas / (4.0 * std::numbers::pi * std::numbers::ln2 * noise_variance) * clock_hz;
    return power / capacity;
}

/// 2 pi ln 2 ~ 4.3552 kT per bit.
inline constexpr double measurement_limit_per_bit() { return 2.0 * std::numbers::pi * std::numbers::ln2; }

/// Landauer erasure plus measurement, ~5.0483 kT per bit.
inline constexpr double landauer_measurement_per_bit() { return std::numbers::ln2 + measurement_limit_per_bit(); }

inline EnergyEstimate landauer_measurement_total(const Workload& w, const ThermalEnvironment& env = {}) {
    const double per_word = w.bits() * landauer_measurement_per_bit();
    return detail::make_estimate(Method::landauer_measurement, w, env, per_word, w.params() * per_word);
}

struct TrajectoryPoint {
    Step n = 1;
    double epsilon = 0.0;
    double r = 0.0;
    double tilt_kt = 0.0;
    double barrier_kt = 0.0;
    double power_watts = 0.0;
    bool feasible = true;
};

struct Trajectory {
    std::vector<TrajectoryPoint> points;
    Step infeasible_points = 0;
    /// Adjacent pairs where the barrier decreased (checked for polynomial
    /// schedules only).
    Step monotonicity_violations = 0;
};

/// Up to `count` distinct integers log-spaced over [1, last].
inline std::vector<Step> log_spaced_steps(Step count, Step last) {
    if (count < 1) throw DomainError("need at least one trajectory point");
    if (last < 1) throw DomainError("n_max must be >= 1");
    std::vector<Step> steps;
    const double top = std::log(static_cast<double>(last));
    for (Step k = 0; k < count; ++k) {
        const double frac = count == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(count - 1);
        auto n = static_cast<Step>(std::llround(std::exp(frac * top)));
        n = std::clamp<Step>(n, 1, last);
        if (steps.empty() || n > steps.back()) steps.push_back(n);
    }
    if (steps.back() != last) steps.push_back(last);
    return steps;
}

inline Trajectory trajectory(const LearningRateSchedule& lr, const UpdateRateSchedule& ur, double tilt_scale,
                             double r_max, Step n_points, Step n_max, const ThermalEnvironment& env = {}) {
    if (!(r_max > 0.0)) throw DomainError("trajectory: r_max must be > 0");
    Trajectory out;
    for (Step n : log_spaced_steps(n_points, n_max)) {
        TrajectoryPoint p;
        p.n = n;
        p.epsilon = lr(n);
        p.r = ur(n);
        p.tilt_kt = tilt_scale * p.epsilon;
        p.barrier_kt = barrier_profile(lr, ur, tilt_scale, n);
        p.power_watts = p.barrier_kt * env.kt() * r_max * p.r;
        p.feasible = p.barrier_kt >= 0.0;
        if (!p.feasible) ++out.infeasible_points;
        if (ur.family() == RateFamily::polynomial && !out.points.empty() &&
            p.barrier_kt < out.points.back().barrier_kt) {
            ++out.monotonicity_violations;
        }
        out.points.push_back(p);
    }
    return out;
}

}  // namespace limb
