// Brain-scale training energy under the LIM estimators versus the constant
// barrier and Landauer-plus-measurement baselines, across gamma.
#include <cstdio>

#include "limb/estimators.hpp"

int main() {
    using namespace limb;
    const auto w = Workload::from_bits(1e28, 1e15, 16, "brain-scale");
    const ThermalEnvironment env;

    std::printf("%-8s %14s %14s %14s %14s\n", "gamma", "LIM_A [J]", "LIM_B [J]", "LB closed", "UB [J]");
    for (double g : {0.5, 1.0, 2.0, 5.0, 10.0}) {
        LimSetup s;
        s.ur = UpdateRateSchedule::polynomial(g);
        const auto a = lim_a_numeric(w, s, env);
        const auto b = lim_b_numeric(w, s, env);
        const auto lb = lim_b_lower_closed(w, g, env);
        const auto ub = lim_b_upper(w, env);
        std::printf("%-8.2f %14.4e %14.4e %14.4e %14.4e\n", g, a.total_joules, b.total_joules, lb.total_joules,
                    ub.total_joules);
    }

    std::printf("\nCEB at kT log 2 per bit: %.4e J\n", ceb_energy(w, env).total_joules);
    for (double e_bit : {1e-15, 1e-12}) {
        std::printf("CEB at %.0e J per bit:   %.4e J\n", e_bit, ceb_energy(w, env, e_bit).total_joules);
    }
    std::printf("Landauer + measurement:  %.4e J (%.4f kT/bit)\n", landauer_measurement_total(w, env).total_joules,
                landauer_measurement_per_bit());
}
