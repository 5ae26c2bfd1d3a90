#pragma once
// Certified evaluation of the weighted infinite sums sum_{n>=1} r(n) w(n)
// that every LIM estimator reduces to.
//
// Exponential and log-polynomial schedules are summed term by term until a
// rigorous family-specific tail bound drops below rel_tol * |value|.
//
// Polynomial schedules decay too slowly for that (gamma = 0.01 would need
// ~1e900 terms), so after an explicit prefix of N terms the remainder is
// bracketed with the convexity inequalities
//
//     int_N^inf f - f(N)/2  <=  sum_{n>N} f(n)  <=  int_{N+1/2}^inf f,
//
// the integral being evaluated by Gauss-Kronrod quadrature in log x up to
// X >> max(N, C, n0) and by an asymptotic closed form beyond X. The midpoint
// of the bracket is added to the prefix; half its width plus the quadrature
// and far-field errors becomes tail_bound.
//
// Summation order is fixed: ascending n, Neumaier-compensated, so results do
// not depend on how the caller schedules work.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "limb/errors.hpp"
#include "limb/schedules.hpp"
#include "limb/thermo.hpp"

namespace limb {

/// Compensated (Neumaier) running sum.
class NeumaierSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            carry_ += (sum_ - t) + x;
        } else {
            carry_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const noexcept { return sum_ + carry_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

/// Registered summands w(n) multiplying r(n).
enum class Integrand {
    unit,           // 1
    learning_rate,  // eps_n
    lim_b_barrier,  // log(2 / r(n)) + log tanh(C eps_n / 2)
};

inline const char* to_string(Integrand i) {
    switch (i) {
        case Integrand::unit: return "unit";
        case Integrand::learning_rate: return "learning_rate";
        case Integrand::lim_b_barrier: return "lim_b_barrier";
    }
    return "?";
}

struct TermContext {
    LearningRateSchedule lr{};
    /// Calibration constant C; the tilt at step n is C * eps_n (kT).
    double tilt_scale = 1.0;
};

struct SeriesOptions {
    double rel_tol = 1e-9;
    /// Explicit terms to sum at least (before any tail treatment).
    std::int64_t min_terms = 0;
    std::int64_t max_terms = 100'000'000;
};

struct SeriesResult {
    double value = 0.0;
    std::int64_t terms_used = 0;
    /// Upper bound on |true sum - value|.
    double tail_bound = std::numeric_limits<double>::infinity();
    bool converged = false;
    /// Analytic remainder already folded into value (0 for direct summation).
    double tail_estimate = 0.0;
};

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, SeriesResult partial)
        : std::runtime_error(what), partial_(partial) {}
    const SeriesResult& partial() const noexcept { return partial_; }

private:
    SeriesResult partial_;
};

namespace detail {
inline ConvergenceError convergence_failure(const UpdateRateSchedule& ur, Integrand kind, const SeriesOptions& opt,
                                            const SeriesResult& partial) {
    char tol[32];
    std::snprintf(tol, sizeof tol, "%g", opt.rel_tol);
    return ConvergenceError("series over " + ur.to_string() + " with weight " + to_string(kind) +
                                " did not certify rel_tol " + tol + " within " + std::to_string(opt.max_terms) +
                                " terms",
                            partial);
}
}  // namespace detail

namespace detail {

inline constexpr std::int64_t kChunk = 4096;
inline constexpr double kLogTanhOneBound = 0.27175;  // > -log tanh(1)

/// Barrier weight log(2/r) + log tanh(C eps / 2) at continuous x.
inline double barrier_weight(const UpdateRateSchedule& ur, const TermContext& ctx, double x) {
    return std::numbers::ln2 + ur.neg_log_rate(x) + log_tanh_half(ctx.tilt_scale * ctx.lr.at(x));
}

inline double summand(const UpdateRateSchedule& ur, Integrand kind, const TermContext& ctx, double x) {
    const double nlr = ur.neg_log_rate(x);
    const double r = std::exp(-nlr);
    switch (kind) {
        case Integrand::unit: return r;
        case Integrand::learning_rate: return r * ctx.lr.at(x);
        case Integrand::lim_b_barrier:
            if (r == 0.0) return 0.0;
            return r * (std::numbers::ln2 + nlr + log_tanh_half(ctx.tilt_scale * ctx.lr.at(x)));
    }
    return 0.0;
}

/// Rigorous bound on |sum_{n>N} r(n) w(n)| for the term-by-term families.
inline double direct_tail_bound(const UpdateRateSchedule& ur, Integrand kind, const TermContext& ctx,
                                std::int64_t N) {
    const double unit = ur.tail_bound(N);
    switch (kind) {
        case Integrand::unit: return unit;
        case Integrand::learning_rate: return ctx.lr(N + 1) * unit;
        case Integrand::lim_b_barrier: {
            // |w(n)| <= a0 + log n - log r(n)
            const double a0 = 2.0 * std::numbers::ln2 + kLogTanhOneBound + std::log1p(ctx.lr.offset()) +
                              std::abs(std::log(ctx.tilt_scale));
            return a0 * unit + ur.log_weighted_tail_bound(N) + ur.entropy_tail_bound(N);
        }
    }
    return std::numeric_limits<double>::infinity();
}

struct Integral {
    double value = 0.0;
    double error = 0.0;
};

template <class F>
Integral gauss_kronrod(F&& f, double a, double b) {
    double err = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 12, 1e-14, &err);
    return {v, err};
}

/// int_lower^inf x^{-(1+gamma)} w(x) dx for the polynomial family.
inline Integral polynomial_tail_integral(const UpdateRateSchedule& ur, Integrand kind, const TermContext& ctx,
                                         double lower) {
    const double g = ur.gamma();
    const double a = 1.0 + g;
    const double n0 = ctx.lr.offset();
    if (kind == Integrand::unit) return {std::pow(lower, -g) / g, 0.0};
    if (kind == Integrand::learning_rate && n0 == 0.0) return {std::pow(lower, -a) / a, 0.0};

    const double c = ctx.tilt_scale;
    const double scale = kind == Integrand::lim_b_barrier ? std::max({lower, c, n0 + 1.0}) : std::max(lower, n0 + 1.0);
    const double far_x = 1e6 * scale;

    // middle range [lower, far_x] in t = log x, pieces of unit width
    auto integrand = [&](double t) {
        const double x = std::exp(t);
        const double damp = std::exp(-g * t);  // x * x^{-a}
        if (damp == 0.0) return 0.0;
        if (kind == Integrand::learning_rate) return damp * ctx.lr.at(x);
        return damp * barrier_weight(ur, ctx, x);
    };
    Integral total;
    const double t0 = std::log(lower);
    const double t1 = std::log(far_x);
    const int pieces = std::max(1, static_cast<int>(std::ceil(t1 - t0)));
    const double width = (t1 - t0) / pieces;
    for (int i = 0; i < pieces; ++i) {
        const double lo = t0 + i * width;
        const double hi = (i + 1 == pieces) ? t1 : lo + width;
        const auto piece = gauss_kronrod(integrand, lo, hi);
        total.value += piece.value;
        total.error += piece.error;
    }

    // far field, x >= X >> max(C, n0)
    const double X = far_x;
    const double x_pow_a = std::pow(X, -a);
    if (kind == Integrand::learning_rate) {
        // 1/(x+n0) = 1/x - n0/x^2 + O(n0^2/x^3)
        total.value += x_pow_a / a - n0 * x_pow_a / X / (a + 1.0);
        total.error += n0 * n0 * x_pow_a / (X * X) / (a + 2.0);
    } else {
        // w(x) = gamma log x + log C - log(1 + n0/x) + psi, psi in [-(C/x)^2/12, 0]
        total.value += std::pow(X, -g) * (std::log(X) + (1.0 + std::log(c)) / g) - n0 * x_pow_a / a;
        total.error += (0.5 * n0 * n0 + c * c / 12.0) * x_pow_a / X / (a + 1.0);
    }
    return total;
}

// Second differences of f on a log grid over [lower, upper]; true if none is
// clearly negative.
template <class F>
bool looks_convex(F&& f, double lower, double upper) {
    constexpr int samples = 256;
    constexpr double eta = 1e-2;
    const double step = std::log(upper / lower) / samples;
    for (int k = 0; k <= samples; ++k) {
        const double x = lower * std::exp(k * step) * (1.0 + eta);
        const double h = x * eta;
        const double fm = f(x - h), f0 = f(x), fp = f(x + h);
        const double second = fm - 2.0 * f0 + fp;
        const double noise = 64.0 * std::numeric_limits<double>::epsilon() * (std::abs(fm) + 2 * std::abs(f0) + std::abs(fp));
        if (second < -noise) return false;
    }
    return true;
}

struct TailBracket {
    double estimate = 0.0;
    double half_width = std::numeric_limits<double>::infinity();
};

inline TailBracket polynomial_tail(const UpdateRateSchedule& ur, Integrand kind, const TermContext& ctx,
                                   std::int64_t N) {
    const double n = static_cast<double>(N);
    auto f = [&](double x) { return summand(ur, kind, ctx, x); };
    const auto from_n = polynomial_tail_integral(ur, kind, ctx, n);
    const auto first_half = gauss_kronrod(f, n, n + 0.5);
    const double upper_x = 1e6 * std::max({n, ctx.tilt_scale, ctx.lr.offset() + 1.0});

    double lo = 0.0, hi = 0.0;
    if (looks_convex(f, n, upper_x)) {
        lo = from_n.value - 0.5 * f(n);
        hi = from_n.value - first_half.value;
    } else {
        // decreasing f only: int_{N+1}^inf f <= tail <= int_N^inf f
        const auto first = gauss_kronrod(f, n, n + 1.0);
        lo = from_n.value - first.value;
        hi = from_n.value;
    }
    const double quad_error = from_n.error + first_half.error;
    return {0.5 * (lo + hi), 0.5 * std::abs(hi - lo) + quad_error};
}

inline SeriesResult sum_polynomial(const UpdateRateSchedule& ur, Integrand kind, const TermContext& ctx,
                                   const SeriesOptions& opt) {
    NeumaierSum prefix;
    std::int64_t done = 0;
    std::int64_t target = std::max<std::int64_t>(opt.min_terms, kChunk);
    SeriesResult result;
    while (true) {
        for (std::int64_t k = done + 1; k <= target; ++k) prefix.add(summand(ur, kind, ctx, static_cast<double>(k)));
        done = target;
        const auto tail = polynomial_tail(ur, kind, ctx, done);
        result.tail_estimate = tail.estimate;
        result.value = prefix.value() + tail.estimate;
        result.terms_used = done;
        result.tail_bound = tail.half_width;
        result.converged = std::isfinite(result.value) && result.tail_bound <= opt.rel_tol * std::abs(result.value);
        if (result.converged) return result;
        if (done >= opt.max_terms) break;
        target = std::min(opt.max_terms, done * 8);
    }
    throw convergence_failure(ur, kind, opt, result);
}

inline SeriesResult sum_direct(const UpdateRateSchedule& ur, Integrand kind, const TermContext& ctx,
                               const SeriesOptions& opt) {
    NeumaierSum acc;
    SeriesResult result;
    std::int64_t n = 0;
    while (n < opt.max_terms) {
        const std::int64_t end = std::min(opt.max_terms, n + kChunk);
        for (std::int64_t k = n + 1; k <= end; ++k) acc.add(summand(ur, kind, ctx, static_cast<double>(k)));
        n = end;
        result.value = acc.value();
        result.terms_used = n;
        result.tail_bound = direct_tail_bound(ur, kind, ctx, n);
        result.converged = n >= opt.min_terms && result.tail_bound <= opt.rel_tol * std::abs(result.value);
        if (result.converged) return result;
    }
    result.converged = false;
    throw convergence_failure(ur, kind, opt, result);
}

}  // namespace detail

/// sum_{n>=1} r(n) w(n) for the registered weight `kind`.
inline SeriesResult sum_weighted(const UpdateRateSchedule& ur, Integrand kind, const TermContext& ctx = {},
                                 const SeriesOptions& opt = {}) {
    if (!(opt.rel_tol > 1e-14 && opt.rel_tol < 1e-3)) {
        throw DomainError("sum_weighted: rel_tol must lie in (1e-14, 1e-3)");
    }
    if (!(ctx.tilt_scale > 0.0) || !std::isfinite(ctx.tilt_scale)) {
        throw DomainError("sum_weighted: tilt scale C must be positive and finite");
    }
    if (opt.max_terms < detail::kChunk) throw DomainError("sum_weighted: max_terms must be >= 4096");
    if (ur.family() == RateFamily::polynomial) return detail::sum_polynomial(ur, kind, ctx, opt);
    return detail::sum_direct(ur, kind, ctx, opt);
}

}  // namespace limb
