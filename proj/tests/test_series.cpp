#include <catch_amalgamated.hpp>

#include <cmath>

#include "limb/series.hpp"
#include "limb/zeta.hpp"

using namespace limb;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("identities", "[series]") {
    const auto z2 = sum_weighted(UpdateRateSchedule::polynomial(1.0), Integrand::unit);
    CHECK(z2.converged);
    CHECK_THAT(z2.value, WithinRel(1.6449340668482264, 1e-9));

    const auto geo = sum_weighted(UpdateRateSchedule::exponential(1.0), Integrand::unit);
    CHECK(geo.converged);
    CHECK_THAT(geo.value, WithinRel(1.0 / std::expm1(1.0), 1e-9));

    const auto z3 = sum_weighted(UpdateRateSchedule::polynomial(1.0), Integrand::learning_rate);
    CHECK_THAT(z3.value, WithinRel(1.2020569031595943, 1e-9));
}

TEST_CASE("unit sums match zeta", "[series]") {
    for (double g : {0.5, 1.0, 2.0, 5.0, 10.0, 0.01}) {
        const auto r = sum_weighted(UpdateRateSchedule::polynomial(g), Integrand::unit);
        INFO("gamma = " << g);
        CHECK(r.converged);
        CHECK(r.tail_bound <= 1e-9 * r.value);
        CHECK_THAT(r.value, WithinRel(zeta(1.0 + g), 2e-9));
    }
    for (double g : {0.01, 0.5, 2.0}) {
        const auto r = sum_weighted(UpdateRateSchedule::exponential(g), Integrand::unit);
        CHECK_THAT(r.value, WithinRel(1.0 / std::expm1(g), 2e-9));
    }
}

TEST_CASE("learning-rate weights with an offset", "[series]") {
    // sum 1/((n+4) n^2), mpmath
    TermContext ctx{LearningRateSchedule(4.0), 1.0};
    const auto r = sum_weighted(UpdateRateSchedule::polynomial(1.0), Integrand::learning_rate, ctx);
    CHECK(r.converged);
    CHECK_THAT(r.value * 65536.0 / zeta(2.0), WithinRel(11196.355397512306, 1e-9));
}

TEST_CASE("LIM_B barrier sums", "[series]") {
    const double C = 65536.0;
    struct Case {
        double gamma;
        double per_op;
    };
    // mpmath: explicit prefix plus quadrature tail at 40 digits
    for (const auto& c : {Case{0.01, 11.502660825253055}, Case{0.1, 7.7298383342093998},
                          Case{1.0, 1.8330462785654172}, Case{2.0, 1.1876152266273234},
                          Case{5.0, 0.76894559475501167}, Case{10.0, 0.69694055036586801}}) {
        const auto ur = UpdateRateSchedule::polynomial(c.gamma);
        TermContext ctx{LearningRateSchedule{}, C};
        const auto num = sum_weighted(ur, Integrand::lim_b_barrier, ctx);
        const auto den = sum_weighted(ur, Integrand::unit, ctx);
        INFO("gamma = " << c.gamma);
        CHECK(num.converged);
        CHECK_THAT(num.value / den.value, WithinRel(c.per_op, 1e-8));
    }
}

TEST_CASE("direct families", "[series]") {
    TermContext ctx{LearningRateSchedule{}, 65536.0};
    const auto ur = UpdateRateSchedule::log_poly();
    const auto num = sum_weighted(ur, Integrand::lim_b_barrier, ctx);
    const auto den = sum_weighted(ur, Integrand::unit, ctx);
    CHECK_THAT(den.value, WithinRel(2.238181306796693, 1e-9));
    CHECK_THAT(num.value / den.value, WithinRel(1.3803189001550705, 1e-9));

    const auto e = UpdateRateSchedule::exponential(0.5);
    const auto en = sum_weighted(e, Integrand::lim_b_barrier, ctx);
    const auto ed = sum_weighted(e, Integrand::unit, ctx);
    CHECK_THAT(en.value / ed.value, WithinRel(1.9638942218283445, 1e-10));
}

TEST_CASE("option validation", "[series]") {
    const auto ur = UpdateRateSchedule::polynomial(1.0);
    SeriesOptions bad;
    bad.rel_tol = 1e-15;
    CHECK_THROWS_AS(sum_weighted(ur, Integrand::unit, {}, bad), DomainError);
    bad.rel_tol = 1e-2;
    CHECK_THROWS_AS(sum_weighted(ur, Integrand::unit, {}, bad), DomainError);
    CHECK_THROWS_AS(sum_weighted(ur, Integrand::unit, TermContext{LearningRateSchedule{}, 0.0}), DomainError);
}

TEST_CASE("convergence failure carries the partial result", "[series]") {
    SeriesOptions opt;
    opt.rel_tol = 1e-13;
    opt.max_terms = 4096;
    try {
        (void)sum_weighted(UpdateRateSchedule::exponential(1e-4), Integrand::unit, {}, opt);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.partial().terms_used == 4096);
        CHECK_FALSE(e.partial().converged);
        CHECK(e.partial().value > 0.0);
    }
}

TEST_CASE("property: tail bound soundness under doubling", "[series][property]") {
    struct Probe {
        UpdateRateSchedule ur;
        Integrand kind;
        double C;
    };
    const std::vector<Probe> probes{
        {UpdateRateSchedule::polynomial(0.3), Integrand::unit, 1.0},
        {UpdateRateSchedule::polynomial(1.0), Integrand::learning_rate, 1.0},
        {UpdateRateSchedule::polynomial(0.05), Integrand::lim_b_barrier, 65536.0},
        {UpdateRateSchedule::polynomial(2.0), Integrand::lim_b_barrier, 256.0},
        {UpdateRateSchedule::exponential(0.01), Integrand::unit, 1.0},
        {UpdateRateSchedule::exponential(0.02), Integrand::lim_b_barrier, 65536.0},
        {UpdateRateSchedule::log_poly(), Integrand::lim_b_barrier, 65536.0},
    };
    for (const auto& p : probes) {
        TermContext ctx{LearningRateSchedule{}, p.C};
        SeriesOptions loose;
        loose.rel_tol = 1e-6;
        const auto first = sum_weighted(p.ur, p.kind, ctx, loose);
        SeriesOptions more = loose;
        more.rel_tol = 1e-12;
        more.min_terms = 2 * first.terms_used;
        const auto second = sum_weighted(p.ur, p.kind, ctx, more);
        INFO(p.ur.to_string() << " " << to_string(p.kind));
        CHECK(second.terms_used >= 2 * first.terms_used);
        CHECK(std::abs(second.value - first.value) <= first.tail_bound + second.tail_bound);
    }
}

TEST_CASE("summation order is fixed", "[series]") {
    TermContext ctx{LearningRateSchedule{}, 65536.0};
    const auto ur = UpdateRateSchedule::polynomial(0.5);
    const auto a = sum_weighted(ur, Integrand::lim_b_barrier, ctx);
    const auto b = sum_weighted(ur, Integrand::lim_b_barrier, ctx);
    CHECK(a.value == b.value);
    CHECK(a.terms_used == b.terms_used);
}
