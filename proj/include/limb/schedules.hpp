#pragma once
// Learning-rate and update-rate schedules. Steps are indexed from n = 1.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "limb/errors.hpp"

namespace limb {

using Step = std::int64_t;

namespace detail {

inline void require_step(Step n, const char* what) {
    if (n < 1) throw DomainError(std::string(what) + ": step index must be >= 1");
}

inline double parse_double(std::string_view text, std::string_view context) {
    std::string s(text);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ParseError("cannot parse number '" + s + "' in " + std::string(context));
    }
    if (used != s.size()) throw ParseError("trailing characters in number '" + s + "' in " + std::string(context));
    return v;
}

}  // namespace detail

/// Harmonic learning rate eps_n = 1 / (n + n0).
class LearningRateSchedule {
public:
    explicit LearningRateSchedule(double offset = 0.0) : offset_(offset) {
        if (!(offset >= 0.0) || !std::isfinite(offset)) {
            throw DomainError("learning-rate offset n0 must be finite and >= 0");
        }
    }

    static LearningRateSchedule harmonic(double offset = 0.0) { return LearningRateSchedule(offset); }

    double offset() const noexcept { return offset_; }

    double operator()(Step n) const {
        detail::require_step(n, "eval_learning_rate");
        return 1.0 / (static_cast<double>(n) + offset_);
    }

    /// Continuous extension used by the tail integrals.
    double at(double x) const noexcept { return 1.0 / (x + offset_); }

    friend bool operator==(const LearningRateSchedule&, const LearningRateSchedule&) = default;

private:
    double offset_;
};

inline double eval_learning_rate(const LearningRateSchedule& s, Step n) { return s(n); }

enum class RateFamily { polynomial, exponential, exp_unit, log_poly };

/// Normalised update-rate profile r(n) = R_n / R_max.
class UpdateRateSchedule {
public:
    static UpdateRateSchedule polynomial(double gamma) {
        require_gamma(gamma, "polynomial");
        return UpdateRateSchedule(RateFamily::polynomial, gamma);
    }
    static UpdateRateSchedule exponential(double gamma) {
        require_gamma(gamma, "exponential");
        return UpdateRateSchedule(RateFamily::exponential, gamma);
    }
    static UpdateRateSchedule exp_unit() { return UpdateRateSchedule(RateFamily::exp_unit, 1.0); }
    static UpdateRateSchedule log_poly() { return UpdateRateSchedule(RateFamily::log_poly, 0.0); }

    /// Parses `poly:GAMMA`, `exp:GAMMA`, `expunit` or `logpoly`.
    static UpdateRateSchedule parse(std::string_view spec) {
        const auto colon = spec.find(':');
        const auto head = spec.substr(0, colon);
        const bool has_arg = colon != std::string_view::npos;
        const auto arg = has_arg ? spec.substr(colon + 1) : std::string_view{};
        if (head == "poly" && has_arg) return polynomial(detail::parse_double(arg, "schedule spec"));
        if (head == "exp" && has_arg) return exponential(detail::parse_double(arg, "schedule spec"));
        if (head == "expunit" && !has_arg) return exp_unit();
        if (head == "logpoly" && !has_arg) return log_poly();
        throw ParseError("unknown schedule '" + std::string(spec) +
                         "' (expected poly:GAMMA, exp:GAMMA, expunit or logpoly)");
    }

    RateFamily family() const noexcept { return family_; }
    double gamma() const noexcept { return gamma_; }

    /// Decay rate per step for the exponential families (1 for exp_unit).
    bool is_exponential() const noexcept {
        return family_ == RateFamily::exponential || family_ == RateFamily::exp_unit;
    }

    std::string to_string() const {
        switch (family_) {
            case RateFamily::polynomial: return "poly:" + format_gamma();
            case RateFamily::exponential: return "exp:" + format_gamma();
            case RateFamily::exp_unit: return "expunit";
            case RateFamily::log_poly: return "logpoly";
        }
        return {};
    }

    /// -log r(x); finite where r(x) itself underflows.
    double neg_log_rate(double x) const noexcept {
        switch (family_) {
            case RateFamily::polynomial: return (1.0 + gamma_) * std::log(x);
            case RateFamily::exponential:
            case RateFamily::exp_unit: return gamma_ * x;
            case RateFamily::log_poly: {
                const double l = std::log(x);
                return l * l;
            }
        }
        return 0.0;
    }

    double at(double x) const noexcept { return std::exp(-neg_log_rate(x)); }

    double operator()(Step n) const {
        detail::require_step(n, "eval_update_rate");
        return at(static_cast<double>(n));
    }

    /// Rigorous upper bound on sum_{n > N} r(n).
    double tail_bound(Step N) const;
    /// Rigorous upper bound on sum_{n > N} r(n) log n.
    double log_weighted_tail_bound(Step N) const;
    /// Rigorous upper bound on sum_{n > N} r(n) (-log r(n)).
    double entropy_tail_bound(Step N) const;

    friend bool operator==(const UpdateRateSchedule&, const UpdateRateSchedule&) = default;

private:
    UpdateRateSchedule(RateFamily f, double g) : family_(f), gamma_(g) {}

    static void require_gamma(double gamma, const char* family) {
        if (!(gamma > 0.0) || !std::isfinite(gamma)) {
            throw DomainError(std::string(family) +
                              " update-rate schedule needs gamma > 0 (r(n) must decay faster than 1/n)");
        }
    }

    std::string format_gamma() const {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", gamma_);
        return buf;
    }

    RateFamily family_;
    double gamma_;
};

inline double eval_update_rate(const UpdateRateSchedule& s, Step n) { return s(n); }

namespace detail {

// Moments of exp(u - u^2) over [log N, inf), i.e. integrals of
// exp(-(log x)^2) (log x)^k dx over [N, inf), k = 0, 1, 2.
struct LogPolyMoments {
    double m0, m1, m2;
};

inline LogPolyMoments log_poly_moments(double N) {
    const double v0 = std::log(N) - 0.5;
    const double scale = std::exp(0.25);
    const double i0 = 0.5 * std::sqrt(std::numbers::pi) * std::erfc(v0);
    const double g = std::exp(-v0 * v0);
    const double i1 = 0.5 * g;
    const double i2 = 0.5 * v0 * g + 0.5 * i0;
    return {scale * i0, scale * (i1 + 0.5 * i0), scale * (i2 + i1 + 0.25 * i0)};
}

// sum_{n >= m} n q^n
inline double geometric_first_moment(double q, double m) {
    const double one_minus_q = 1.0 - q;
    return std::pow(q, m) * (m * one_minus_q + q) / (one_minus_q * one_minus_q);
}

}  // namespace detail

// The integral comparisons below need the summand to be decreasing on
// [N, inf); N >= 3 covers every family and weight used here. The geometric
// bounds are exact sums, so they are padded against rounding.
inline constexpr double kRoundingPad = 1.0 + 1e-12;
inline double UpdateRateSchedule::tail_bound(Step N) const {
    const double n = static_cast<double>(std::max<Step>(N, 3));
    switch (family_) {
        case RateFamily::polynomial: return std::pow(n, -gamma_) / gamma_;
        case RateFamily::exponential:
        case RateFamily::exp_unit: return kRoundingPad * std::exp(-gamma_ * (n + 1.0)) / -std::expm1(-gamma_);
        case RateFamily::log_poly: return detail::log_poly_moments(n).m0;
    }
    return std::numeric_limits<double>::infinity();
}

inline double UpdateRateSchedule::log_weighted_tail_bound(Step N) const {
    const double n = static_cast<double>(std::max<Step>(N, 3));
    switch (family_) {
        case RateFamily::polynomial:
            return std::pow(n, -gamma_) * (std::log(n) / gamma_ + 1.0 / (gamma_ * gamma_));
        case RateFamily::exponential:
        case RateFamily::exp_unit:
            // log n <= n
            return kRoundingPad * detail::geometric_first_moment(std::exp(-gamma_), n + 1.0);
        case RateFamily::log_poly: return detail::log_poly_moments(n).m1;
    }
    return std::numeric_limits<double>::infinity();
}

inline double UpdateRateSchedule::entropy_tail_bound(Step N) const {
    const double n = static_cast<double>(std::max<Step>(N, 3));
    switch (family_) {
        case RateFamily::polynomial: return (1.0 + gamma_) * log_weighted_tail_bound(N);
        case RateFamily::exponential:
        case RateFamily::exp_unit:
            return kRoundingPad * gamma_ * detail::geometric_first_moment(std::exp(-gamma_), n + 1.0);
        case RateFamily::log_poly: return detail::log_poly_moments(n).m2;
    }
    return std::numeric_limits<double>::infinity();
}

/// Outcome of validate_schedules(); every flag must hold for a usable pair.
struct ScheduleReport {
    bool rate_bounded = true;          // 0 < r(n) <= 1 on the grid
    bool rate_monotone = true;         // r non-increasing on the grid
    bool learning_rate_monotone = true;
    bool learning_rate_divergent = true;  // sum eps_n keeps growing
    bool rate_summable = true;            // finite tail bound for sum r(n)
    Step grid_points = 0;
    Step divergence_horizon = 0;
    double learning_rate_partial_sum = 0.0;
    double divergence_floor = 0.0;
    double summability_tail = 0.0;

    bool ok() const noexcept {
        return rate_bounded && rate_monotone && learning_rate_monotone && learning_rate_divergent && rate_summable;
    }
};

/// Every integer up to 1000, then ~100 log-spaced points per decade to `last`.
inline std::vector<Step> validation_grid(Step last = 1'000'000) {
    std::vector<Step> grid;
    for (Step n = 1; n <= std::min<Step>(last, 1000); ++n) grid.push_back(n);
    for (int k = 300; ; ++k) {
        const auto n = static_cast<Step>(std::llround(std::pow(10.0, k / 100.0)));
        if (n > last) break;
        if (n > grid.back()) grid.push_back(n);
    }
    if (grid.back() != last) grid.push_back(last);
    return grid;
}

inline ScheduleReport validate_schedules(const LearningRateSchedule& lr, const UpdateRateSchedule& ur) {
    constexpr Step horizon = 1'000'000;
    ScheduleReport report;
    const auto grid = validation_grid(horizon);
    report.grid_points = static_cast<Step>(grid.size());

    double prev_r = std::numeric_limits<double>::infinity();
    double prev_eps = std::numeric_limits<double>::infinity();
    for (Step n : grid) {
        const double r = ur(n);
        const double eps = lr(n);
        // r may underflow to 0 for fast families; the bound is on the exact value
        if (!(r <= 1.0) || !(ur.neg_log_rate(static_cast<double>(n)) >= 0.0)) report.rate_bounded = false;
        if (r > prev_r) report.rate_monotone = false;
        if (!(eps > 0.0) || eps >= prev_eps) report.learning_rate_monotone = false;
        prev_r = r;
        prev_eps = eps;
    }

    double partial = 0.0;
    for (Step n = horizon; n >= 1; --n) partial += lr(n);
    report.divergence_horizon = horizon;
    report.learning_rate_partial_sum = partial;
    report.divergence_floor = std::log(static_cast<double>(horizon) + 1.0) - std::log1p(lr.offset());
    report.learning_rate_divergent = partial >= report.divergence_floor;

    report.summability_tail = ur.tail_bound(horizon);
    report.rate_summable = std::isfinite(report.summability_tail);
    return report;
}

}  // namespace limb
