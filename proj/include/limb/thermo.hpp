#pragma once
// Bistable-well kinetics. Every energy in this header is a dimensionless
// multiple of kT; joules appear only through to_joules().

#include <cmath>
#include <numbers>
#include <string>

#include "limb/errors.hpp"

namespace limb {

/// Boltzmann constant in J/K (exact, SI 2019).
inline constexpr double kBoltzmann = 1.380649e-23;

inline constexpr double kDefaultTemperature = 300.0;

class ThermalEnvironment {
public:
    ThermalEnvironment() : ThermalEnvironment(kDefaultTemperature) {}
    explicit ThermalEnvironment(double temperature_k)
        : temperature_(temperature_k) {
        if (!(temperature_k > 0.0) || !std::isfinite(temperature_k)) {
            throw DomainError("temperature must be a positive finite number of kelvin, got " +
                              std::to_string(temperature_k));
        }
    }

    double temperature() const noexcept { return temperature_; }
    double kt() const noexcept { return kBoltzmann * temperature_; }

private:
    double temperature_;
};

/// One bistable memory cell: barrier E0/kT, tilt dE/kT and the device ceiling
/// on the transition rate.
struct BistableCellParams {
    double barrier = 0.0;
    double tilt = 0.0;
    double r_max = 1.0;

    BistableCellParams() = default;
    BistableCellParams(double barrier_kt, double tilt_kt, double max_rate)
        : barrier(barrier_kt), tilt(tilt_kt), r_max(max_rate) {
        validate();
    }

    void validate() const {
        if (!(barrier >= 0.0)) throw DomainError("cell barrier must be >= 0 kT");
        if (!(tilt >= 0.0)) throw DomainError("cell tilt must be >= 0 kT");
        if (!(r_max > 0.0)) throw DomainError("cell r_max must be > 0");
    }
};

/// log(tanh(x/2)) for x > 0 without overflow or cancellation.
inline double log_tanh_half(double x) {
    if (!(x > 0.0)) throw DomainError("log_tanh_half requires a positive argument");
    if (x >= 1.0) {
        const double e = std::exp(-x);
        return std::log1p(-e) - std::log1p(e);
    }
    if (x <= 1e-8) return std::log(0.5 * x) - x * x / 12.0;
    return std::log(std::tanh(0.5 * x));
}

/// Boltzmann transition probability exp(-barrier) = R0 / R_max.
inline double p_transition(double barrier) {
    if (!(barrier >= 0.0)) throw DomainError("p_transition: barrier must be >= 0 kT");
    return std::exp(-barrier);
}

/// Net forward rate 2 r_max exp(-barrier) tanh(tilt/2). The barrier is not
/// range checked here so that infeasible (negative) barriers round-trip.
inline double net_update_rate(double barrier, double tilt, double r_max) {
    return 2.0 * r_max * std::exp(-barrier) * std::tanh(0.5 * tilt);
}

inline double net_update_rate(const BistableCellParams& cell) {
    cell.validate();
    return net_update_rate(cell.barrier, cell.tilt, cell.r_max);
}

/// Forward and backward hop rates R0 +- R/2 for a tilted cell.
struct HopRates {
    double forward;
    double backward;
};

inline HopRates hop_rates(const BistableCellParams& cell) {
    cell.validate();
    const double base = cell.r_max * std::exp(-cell.barrier);
    const double t = std::tanh(0.5 * cell.tilt);
    return {base * (1.0 + t), base * (1.0 - t)};
}

/// Barrier needed for net rate `rate` under `tilt`. Negative results mark
/// infeasible operating points.
inline double barrier_for_rate(double rate, double tilt, double r_max) {
    if (!(rate > 0.0)) throw DomainError("barrier_for_rate: rate must be > 0 (log singularity)");
    if (!(tilt > 0.0)) throw DomainError("barrier_for_rate: tilt must be > 0 (log singularity)");
    if (!(r_max > 0.0)) throw DomainError("barrier_for_rate: r_max must be > 0");
    return std::log(2.0 * r_max / rate) + log_tanh_half(tilt);
}

inline bool is_feasible(double rate, double r_max) noexcept { return rate <= r_max; }

inline double to_joules(double value_kt, const ThermalEnvironment& env) noexcept {
    return value_kt * env.kt();
}

inline double to_kt(double joules, const ThermalEnvironment& env) noexcept {
    return joules / env.kt();
}

}  // namespace limb
