#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "limb/estimators.hpp"

using namespace limb;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const double kLn2 = std::numbers::ln2;
const double kDelta16 = std::exp2(-16.0);

Workload brain(double delta = kDelta16) { return Workload(1e28, 1e15, delta, "brain"); }
Workload per_op(double delta) { return Workload(1.0, 0.0, delta); }

LimSetup poly_setup(double gamma) {
    LimSetup s;
    s.ur = UpdateRateSchedule::polynomial(gamma);
    return s;
}

}  // namespace

TEST_CASE("workload validation", "[estimators]") {
    CHECK(Workload::from_bits(1.0, 1.0, 16.0).delta() == kDelta16);
    CHECK(Workload::from_bits(1.0, 1.0, 16.0).bits() == 16.0);
    CHECK_THROWS_AS(Workload(1.0, 1.0, 0.0), DomainError);
    CHECK_THROWS_AS(Workload(1.0, 1.0, 1.5), DomainError);
    CHECK_THROWS_AS(Workload(-1.0, 1.0, 0.5), DomainError);
    CHECK_THROWS_AS(Workload(1.0, NAN, 0.5), DomainError);
}

TEST_CASE("calibration", "[estimators]") {
    CHECK(LimCalibration::asymptotic().c(kDelta16) == 65536.0);
    CHECK(LimCalibration::manual(1e6, 1.0, 4.0).c(0.5) == 3906.25);
    CHECK_THROWS_AS(LimCalibration::manual(0.0, 1.0, 4.0), DomainError);
    CHECK_THROWS_AS(LimCalibration::manual(1.0, 1.0, 0.0), DomainError);
}

TEST_CASE("asymptotic barrier", "[estimators]") {
    CHECK_THAT(asymptotic_barrier(0.5), WithinRel(kLn2, 1e-15));
    CHECK_THAT(asymptotic_barrier(kDelta16), WithinRel(11.090354888959125, 1e-15));
    CHECK(asymptotic_barrier(1.0) == 0.0);
    CHECK_THROWS_AS(asymptotic_barrier(0.0), DomainError);
    CHECK_THROWS_AS(asymptotic_barrier(2.0), DomainError);
}

TEST_CASE("barrier profile", "[estimators]") {
    const LearningRateSchedule h;
    CHECK_THAT(barrier_profile_for_precision(h, UpdateRateSchedule::polynomial(10.0), kDelta16, 1),
               WithinRel(kLn2, 1e-15));
    // mpmath: log 2 + 40 log 2 + log tanh(2^-5)
    CHECK_THAT(barrier_profile_for_precision(h, UpdateRateSchedule::polynomial(1.0), kDelta16, 1 << 20),
               WithinRel(24.952973053479005, 1e-13));
    CHECK_THAT(barrier_profile_for_precision(h, UpdateRateSchedule::exp_unit(), kDelta16, 10),
               WithinRel(10.693147180559945, 1e-13));
    // saturated tilt recovers Landauer at n = 1 with r = 1
    CHECK_THAT(barrier_profile(h, UpdateRateSchedule::polynomial(1.0), 1e6, 1), WithinRel(kLn2, 1e-12));
    // small tilt scale gives an infeasible (negative) head
    CHECK(barrier_profile(h, UpdateRateSchedule::polynomial(1.0), 0.1, 1) < 0.0);
}

TEST_CASE("LIM_A numeric", "[estimators]") {
    const auto e = lim_a_numeric(per_op(kDelta16), poly_setup(1.0));
    CHECK_THAT(e.dynamic_kt_per_op, WithinRel(65536.0 * 0.73076296940143852, 1e-9));
    CHECK(e.terms_used() > 0);
    CHECK(e.per_op_error_bound() < 1e-8 * e.dynamic_kt_per_op);

    CHECK_THAT(lim_a_numeric(per_op(1.0), poly_setup(1.0)).dynamic_kt_per_op,
               WithinRel(0.73076296940143852, 1e-9));

    // brain scale, gamma = 1
    CHECK_THAT(lim_a_numeric(brain(), poly_setup(1.0)).total_joules, WithinRel(1.9836315165152903e12, 1e-8));

    LimSetup off = poly_setup(1.0);
    off.lr = LearningRateSchedule(4.0);
    CHECK_THAT(lim_a_numeric(per_op(kDelta16), off).dynamic_kt_per_op, WithinRel(11196.355397512306, 1e-9));
}

TEST_CASE("LIM_A closed form", "[estimators]") {
    CHECK_THAT(lim_a_closed_poly(per_op(1.0), 1.0).dynamic_kt_per_op, WithinRel(0.73076296940143852, 1e-10));
    CHECK_THAT(lim_a_closed_poly(per_op(1.0), 1e-3).dynamic_kt_per_op, WithinRel(0.0016430489989825, 1e-9));
    CHECK_THAT(lim_a_closed_poly(per_op(1.0), 10.0).dynamic_kt_per_op, WithinRel(0.9997520204978326, 1e-12));
    CHECK_THROWS_AS(lim_a_closed_poly(per_op(1.0), 0.0), DomainError);
    CHECK_THROWS_AS(lim_a_closed_poly(per_op(1.0), -1.0), DomainError);
}

TEST_CASE("closed forms agree with numerics", "[estimators]") {
    for (double delta : {std::exp2(-8.0), kDelta16}) {
        for (double g : {0.5, 1.0, 2.0, 5.0, 10.0}) {
            const double closed = lim_a_closed_poly(per_op(delta), g).dynamic_kt_per_op;
            const double num = lim_a_numeric(per_op(delta), poly_setup(g)).dynamic_kt_per_op;
            INFO("delta = " << delta << " gamma = " << g);
            CHECK(std::abs(closed - num) / closed < 1e-6);
        }
    }
    for (double g : {0.5, 1.0, 2.0}) {
        LimSetup s;
        s.ur = UpdateRateSchedule::exponential(g);
        INFO("gamma = " << g);
        const double a_closed = lim_a_exp_closed(per_op(kDelta16), g).dynamic_kt_per_op;
        const double a_num = lim_a_numeric(per_op(kDelta16), s).dynamic_kt_per_op;
        CHECK(std::abs(a_closed - a_num) / a_closed < 1e-6);
        const double b_closed = lim_b_exp_closed(per_op(kDelta16), g).dynamic_kt_per_op;
        const double b_num = lim_b_numeric(per_op(kDelta16), s).dynamic_kt_per_op;
        CHECK(std::abs(b_closed - b_num) / b_closed < 1e-6);
    }
}

TEST_CASE("LIM_B numeric", "[estimators]") {
    // mpmath summation oracles, delta = 2^-16
    CHECK_THAT(lim_b_numeric(per_op(kDelta16), poly_setup(10.0)).dynamic_kt_per_op,
               WithinRel(0.69694055036586801, 1e-9));
    CHECK_THAT(lim_b_numeric(per_op(kDelta16), poly_setup(2.0)).dynamic_kt_per_op,
               WithinRel(1.1876152266273234, 1e-9));
    CHECK_THAT(lim_b_numeric(brain(), poly_setup(10.0)).total_joules, WithinRel(28866908.217708495, 1e-8));
    CHECK_THAT(lim_b_numeric(brain(), poly_setup(2.0)).total_joules, WithinRel(49190393.250879558, 1e-8));

    // delta = 2^-8
    CHECK_THAT(lim_b_numeric(per_op(std::exp2(-8.0)), poly_setup(0.5)).dynamic_kt_per_op,
               WithinRel(2.8077756164613765, 1e-8));
    CHECK_THAT(lim_b_numeric(per_op(std::exp2(-8.0)), poly_setup(1.0)).dynamic_kt_per_op,
               WithinRel(1.8272097917490109, 1e-8));

    LimSetup off = poly_setup(2.0);
    off.lr = LearningRateSchedule(4.0);
    CHECK_THAT(lim_b_numeric(per_op(kDelta16), off).dynamic_kt_per_op, WithinRel(1.1876152266271794, 1e-9));

    LimSetup manual = poly_setup(2.0);
    manual.calibration = LimCalibration::manual(1e6, 1.0, 4.0);
    CHECK_THAT(lim_b_numeric(per_op(kDelta16), manual).dynamic_kt_per_op, WithinRel(1.187615112346777, 1e-9));

    LimSetup lp;
    lp.ur = UpdateRateSchedule::log_poly();
    CHECK_THAT(lim_b_numeric(per_op(kDelta16), lp).dynamic_kt_per_op, WithinRel(1.3803189001550705, 1e-9));
}

TEST_CASE("LIM_B approaches log(1/delta) from below as delta shrinks", "[estimators]") {
    const double delta = std::exp2(-64.0);
    const double v = lim_b_numeric(per_op(delta), poly_setup(0.01)).dynamic_kt_per_op;
    CHECK(v < 64.0 * kLn2);
    CHECK(v > 0.8 * 64.0 * kLn2);
}

TEST_CASE("infeasible head is flagged", "[estimators]") {
    LimSetup s = poly_setup(1.0);
    s.calibration = LimCalibration::manual(0.1, 1.0, 1.0);
    const auto e = lim_b_numeric(per_op(0.5), s);
    REQUIRE_FALSE(e.notes.empty());
    CHECK_THAT(e.notes.front(), Catch::Matchers::ContainsSubstring("infeasible"));
}

TEST_CASE("LIM_B upper bound", "[estimators]") {
    CHECK_THAT(lim_b_upper(per_op(kDelta16)).dynamic_kt_per_op, WithinRel(11.090354888959125, 1e-15));
    CHECK_THAT(lim_b_upper(per_op(0.5)).dynamic_kt_per_op, WithinRel(kLn2, 1e-15));
    const auto b = lim_b_upper(brain());
    CHECK_THAT(b.dynamic_joules(), WithinRel(4.593566216125958e8, 1e-12));
}

TEST_CASE("LIM_B lower bounds", "[estimators]") {
    CHECK_THAT(lim_b_lower_closed(per_op(kDelta16), 10.0).dynamic_kt_per_op, WithinRel(0.6965956985653296, 1e-10));
    CHECK_THAT(lim_b_lower_closed(per_op(kDelta16), 2.0).dynamic_kt_per_op, WithinRel(1.0227925448764998, 1e-10));
    CHECK_THAT(lim_b_lower_closed(per_op(kDelta16), 50.0).dynamic_kt_per_op, WithinAbs(kLn2, 1e-6));
    CHECK(lim_b_lower_closed(per_op(kDelta16), 0.5).notes.size() == 1);

    CHECK_THAT(lim_b_lower_finite(per_op(kDelta16), 10.0).dynamic_kt_per_op, WithinRel(0.69694055036586801, 1e-10));
    CHECK_THAT(lim_b_lower_finite(per_op(kDelta16), 10.0, {}, 1).dynamic_kt_per_op, WithinRel(kLn2, 1e-15));
    CHECK_THAT(lim_b_lower_finite(per_op(kDelta16), 2.0).dynamic_kt_per_op, WithinRel(1.1876152236673611, 1e-10));
    // Euler-Maclaurin branch; references from Hurwitz zeta derivatives
    CHECK_THAT(lim_b_lower_finite(per_op(std::exp2(-24.0)), 2.0).dynamic_kt_per_op,
               WithinRel(1.1876152270347016, 1e-10));
    CHECK_THAT(lim_b_lower_finite(per_op(kDelta16), 0.5, {}, 1 << 24).dynamic_kt_per_op,
               WithinRel(2.9457754400311722, 1e-9));
    CHECK_THAT(lim_b_lower_finite(per_op(kDelta16), 0.5, {}, 1'000'000).dynamic_kt_per_op,
               WithinRel(2.9328379997902254, 1e-10));
    CHECK_THROWS_AS(lim_b_lower_finite(per_op(kDelta16), 2.0, {}, 0), DomainError);
}

TEST_CASE("sandwich", "[estimators]") {
    for (double g : {2.0, 5.0, 10.0}) {
        const double lo = lim_b_lower_closed(per_op(kDelta16), g).dynamic_kt_per_op;
        const double mid = lim_b_numeric(per_op(kDelta16), poly_setup(g)).dynamic_kt_per_op;
        const double hi = lim_b_upper(per_op(kDelta16)).dynamic_kt_per_op;
        INFO("gamma = " << g);
        CHECK(lo <= mid);
        CHECK(mid <= hi);
    }
}

TEST_CASE("exponential closed forms", "[estimators]") {
    CHECK_THAT(lim_a_exp_closed(per_op(1.0), 1.0).dynamic_kt_per_op, WithinRel(0.7881331674844335, 1e-13));
    CHECK_THAT(lim_a_exp_closed(per_op(1.0), 5.0).dynamic_kt_per_op, WithinRel(0.996623434250114, 1e-13));
    CHECK_THAT(lim_a_exp_closed(per_op(1.0), 30.0).dynamic_kt_per_op, WithinRel(1.0, 1e-12));
    CHECK_THAT(lim_a_exp_closed(per_op(kDelta16), 0.5).dynamic_kt_per_op, WithinRel(39655.58107282323, 1e-12));

    CHECK_THAT(lim_b_exp_closed(per_op(1.0), 1.0).dynamic_kt_per_op, WithinRel(2.2751238874292717, 1e-14));
    CHECK_THAT(lim_b_exp_closed(per_op(1.0), 1e-6).dynamic_kt_per_op, WithinRel(1.6931476805600286, 1e-14));
    CHECK_THAT(lim_b_exp_closed(per_op(1.0), 10.0).dynamic_kt_per_op, WithinRel(10.693601200470042, 1e-14));
    CHECK_THROWS_AS(lim_b_exp_closed(per_op(1.0), 0.0), DomainError);
}

TEST_CASE("gamma trade-off", "[estimators]") {
    double prev_a = 0.0, prev_b = INFINITY;
    for (double g : {0.01, 0.1, 1.0, 10.0}) {
        const double a = lim_a_numeric(per_op(kDelta16), poly_setup(g)).dynamic_kt_per_op;
        const double b = lim_b_numeric(per_op(kDelta16), poly_setup(g)).dynamic_kt_per_op;
        CHECK(a > prev_a);
        CHECK(b < prev_b);
        prev_a = a;
        prev_b = b;
    }
    // LIM_A vanishes as gamma -> 0
    CHECK(lim_a_closed_poly(per_op(1.0), 1e-4).dynamic_kt_per_op < 2e-4);
}

TEST_CASE("CEB", "[estimators]") {
    const auto w = Workload::from_bits(1e28, 1e15, 16.0);
    CHECK_THAT(ceb_energy(w, {}, 1e-15).total_joules, WithinRel(1.60000000000016e14, 1e-15));
    CHECK_THAT(ceb_energy(w, {}, 1e-12).total_joules, WithinRel(1.60000000000016e17, 1e-15));
    CHECK_THAT(ceb_energy(Workload::from_bits(0.0, 1.0, 1.0)).total_joules, WithinRel(2.8709788850787238e-21, 1e-12));
    // default e_bit makes CEB per-op equal the LIM_B upper bound
    CHECK_THAT(ceb_energy(w).dynamic_kt_per_op, WithinRel(lim_b_upper(w).dynamic_kt_per_op, 1e-15));
    CHECK_THROWS_AS(ceb_energy(w, {}, 0.0), DomainError);
    CHECK_THROWS_AS(ceb_energy(Workload(1.0, 1.0, 1.0)), DomainError);
}

TEST_CASE("measurement limit", "[estimators]") {
    CHECK_THAT(measurement_limit_per_bit(), WithinRel(4.355172180607204, 1e-15));
    CHECK_THAT(landauer_measurement_per_bit(), WithinRel(5.04831936116715, 1e-14));
    const ThermalEnvironment env;
    const double a = measurement_energy_per_bit(1e-15, 1.0, 1e9, env);
    const double b = measurement_energy_per_bit(1e-12, 0.1, 1e6, env);
    const double c = measurement_energy_per_bit(3e-14, 2.5, 4e7, env);
    CHECK_THAT(a, WithinRel(b, 1e-14));
    CHECK_THAT(a, WithinRel(c, 1e-14));
    CHECK_THAT(to_kt(a, env), WithinRel(measurement_limit_per_bit(), 1e-14));
    CHECK(shannon_capacity(0.5, 1e9) == 0.0);
    CHECK(shannon_capacity(0.0, 1e9) == 1e9);
    CHECK(shannon_capacity(1.0, 1e9) == 1e9);

    CHECK_THAT(landauer_measurement_total(Workload::from_bits(1e28, 1e15, 16.0)).total_joules,
               WithinRel(3.345579397284845e9, 1e-10));
    CHECK(landauer_measurement_total(Workload::from_bits(0.0, 0.0, 16.0)).total_joules == 0.0);
}

TEST_CASE("trajectory", "[estimators]") {
    const LearningRateSchedule h;
    const auto t = trajectory(h, UpdateRateSchedule::polynomial(10.0), 65536.0, 1e12, 50, 1'000'000);
    REQUIRE(t.points.front().n == 1);
    CHECK(t.points.back().n == 1'000'000);
    CHECK_THAT(t.points.front().power_watts, WithinRel(2.8709788850787238e-9, 1e-12));
    CHECK(t.infeasible_points == 0);
    CHECK(t.monotonicity_violations == 0);

    // barrier(n) - barrier(1) -> (1 + gamma) log n once tanh saturates
    const auto s = trajectory(h, UpdateRateSchedule::polynomial(2.0), 1e12, 1e12, 10, 1000);
    const auto& last = s.points.back();
    CHECK_THAT(last.barrier_kt - s.points.front().barrier_kt, WithinRel(3.0 * std::log(1000.0), 1e-6));

    const auto u = trajectory(h, UpdateRateSchedule::exp_unit(), 65536.0, 1e12, 10, 10);
    CHECK_THAT(u.points.back().barrier_kt, WithinRel(kLn2 + 10.0 + log_tanh_half(6553.6), 1e-14));
    CHECK_THROWS_AS(trajectory(h, UpdateRateSchedule::exp_unit(), 1.0, 0.0, 10, 10), DomainError);
}

TEST_CASE("log-spaced steps", "[estimators]") {
    const auto s = log_spaced_steps(100, 1000);
    CHECK(s.front() == 1);
    CHECK(s.back() == 1000);
    for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i] > s[i - 1]);
    CHECK(log_spaced_steps(1, 7) == std::vector<Step>{1, 7});
}

TEST_CASE("property: estimate invariants", "[estimators][property]") {
    const ThermalEnvironment env(310.0);
    const auto w = Workload(3.7e20, 2.1e11, std::exp2(-12.0));
    std::vector<EnergyEstimate> all{
        lim_a_numeric(w, poly_setup(1.5), env), lim_a_closed_poly(w, 1.5, env),
        lim_b_numeric(w, poly_setup(1.5), env), lim_b_upper(w, env),
        lim_b_lower_closed(w, 1.5, env),        lim_b_lower_finite(w, 1.5, env),
        lim_a_exp_closed(w, 1.5, env),          lim_b_exp_closed(w, 1.5, env),
        ceb_energy(w, env),                     landauer_measurement_total(w, env),
    };
    for (const auto& e : all) {
        INFO(method_tag(e.method));
        CHECK_THAT(e.total_joules,
                   WithinRel((w.flops() * e.dynamic_kt_per_op + e.retention_kt) * env.kt(), 1e-14));
        CHECK(e.temperature == 310.0);
        if (e.method != Method::landauer_measurement) {
            CHECK_THAT(e.retention_kt, WithinRel(w.params() * w.retention_barrier(), 1e-14));
        }
    }
}

TEST_CASE("property: LIM_B never below Landauer", "[estimators][property]") {
    const LearningRateSchedule h;
    for (double g : {0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0}) {
        for (double bits : {8.0, 12.0, 16.0, 32.0}) {
            const double v = lim_b_numeric(Workload::from_bits(1.0, 0.0, bits), poly_setup(g)).dynamic_kt_per_op;
            INFO("gamma = " << g << " bits = " << bits);
            CHECK(v >= kLn2);
        }
        // with few bits the tilt at n = 1 is not saturated and the floor
        // drops to the head barrier log 2 + log tanh(C/2)
        for (double bits : {1.0, 2.0, 4.0}) {
            const auto ur = UpdateRateSchedule::polynomial(g);
            const double v = lim_b_numeric(Workload::from_bits(1.0, 0.0, bits), poly_setup(g)).dynamic_kt_per_op;
            INFO("gamma = " << g << " bits = " << bits);
            CHECK(v >= barrier_profile(h, ur, std::exp2(bits), 1) * (1.0 - 1e-12));
            CHECK(v < kLn2 + (1.0 + g) * 30.0);
        }
    }
}

TEST_CASE("property: linear in scale and temperature", "[estimators][property]") {
    const auto w = Workload(1e24, 1e12, kDelta16);
    const auto base = lim_b_numeric(w, poly_setup(3.0));
    const auto twice = lim_b_numeric(w.with_flops(2e24).with_params(2e12), poly_setup(3.0));
    CHECK_THAT(twice.total_joules, WithinRel(2.0 * base.total_joules, 1e-14));
    const auto hot = lim_b_numeric(w, poly_setup(3.0), ThermalEnvironment(600.0));
    CHECK_THAT(hot.total_joules, WithinRel(2.0 * base.total_joules, 1e-14));
    CHECK(hot.total_kt() == base.total_kt());
}
