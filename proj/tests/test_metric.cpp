// Metric-theory toolkit: certified region measures, Monte-Carlo runs with
// Paley-Zygmund floors, and the log-weighted series bookkeeping.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "twistlab/metric.hpp"

using namespace twistlab;

namespace {

// frozen 30-digit quadrature oracle for area{ (u,v) in T^2 : |u v| <= t },
// computed independently as 4 * int_0^(1/2) min(1/2, t/u) du
struct MultOracle {
    Rat t;
    double area;
};
const MultOracle MULT_ORACLE[] = {
    {Rat(1, 10000), 0.00352961840434251684689500063033},
    {Rat(1, 1000), 0.0260858436714489857328780404845},
    {Rat(1, 100), 0.168755032994728029968060746658},
    {Rat(1, 4), 1.0},
};

// frozen harmonic number H_1000
const double H1000 = 7.48547086055034491265651820433;

}  // namespace

TEST_CASE("region_measure closed forms", "[metric]") {
    // interval: 2 psi, capped at 1
    auto f = RegionFamily::interval(make_psi(ApproxFunction::constant(Rat(1, 8))));
    Cert m = region_measure(f, BigInt(5));
    CHECK(m.lo() == Rat(1, 4));
    CHECK(m.hi() == Rat(1, 4));
    auto fcap = RegionFamily::interval(make_psi(ApproxFunction::constant(Rat(3, 4))));
    CHECK(region_measure(fcap, BigInt(1)).lo() == 1);

    // sup-norm with equal weights telescopes to 4 psi exactly
    Weights w(Rat(1, 2), Rat(1, 2));
    auto g = RegionFamily::sup_norm(w, make_psi(ApproxFunction::constant(Rat(1, 25))));
    Cert mg = region_measure(g, BigInt(1));
    CHECK(mg.lo() == Rat(4, 25));
    CHECK(mg.hi() == Rat(4, 25));

    // same for asymmetric weights: sides (2 psi^i)(2 psi^j) = 4 psi
    Weights wa(Rat(3, 10), Rat(7, 10));
    auto ga = RegionFamily::sup_norm(wa, make_psi(ApproxFunction::constant(Rat(1, 100))));
    Cert ma = region_measure(ga, BigInt(1));
    CHECK(ma.lo() <= Rat(4, 100));
    CHECK(ma.hi() >= Rat(4, 100));
    CHECK(ma.hi() - ma.lo() < Rat(1, BigInt(1) << 60));

    // a capped side keeps the measure certified and <= 1
    auto gc = RegionFamily::sup_norm(w, make_psi(ApproxFunction::constant(Rat(1, 2))));
    Cert mc = region_measure(gc, BigInt(1));
    CHECK(mc.hi() <= 1);
    CHECK(mc.lo() > Rat(9, 10));

    CHECK_THROWS_AS(region_measure(f, BigInt(0)), invalid_parameter);
}

TEST_CASE("multiplicative area matches the quadrature oracle", "[metric]") {
    for (const auto& o : MULT_ORACLE) {
        auto f = RegionFamily::multiplicative(make_psi(ApproxFunction::constant(o.t)));
        Cert m = region_measure(f, BigInt(1));
        CHECK(to_double(m.lo()) <= o.area + 1e-6);
        CHECK(to_double(m.hi()) >= o.area - 1e-6);
        CHECK(to_double(m.hi()) - to_double(m.lo()) < 1e-9);
    }
    // t = 1/4 fills the torus exactly
    auto ffull = RegionFamily::multiplicative(make_psi(ApproxFunction::constant(Rat(1, 4))));
    CHECK(region_measure(ffull, BigInt(1)).lo() == 1);

    // the formula's domain ends at t = 1/4
    auto fbad = RegionFamily::multiplicative(make_psi(ApproxFunction::constant(Rat(1, 3))));
    CHECK_THROWS_AS(region_measure(fbad, BigInt(1)), out_of_domain);
}

TEST_CASE("monte carlo: harmonic interval family", "[metric]") {
    // psi(q) = 1/(4q): E[A_Q] = sum 2 psi = H_Q / 2
    auto f = RegionFamily::interval(make_psi(ApproxFunction::power(Rat(1, 4), Rat(1))));
    McRun run = run_mc(f, 20000, 1000, 7, 1, 900);

    CHECK(run.rng == "splitmix64");
    CHECK(to_double(run.expectation.v) == Catch::Approx(H1000 / 2).margin(1e-9));
    CHECK(run.expectation.hi() - run.expectation.lo() < Rat(1, 1000000));
    CHECK(run.expectation_ok);  // |mean - E| <= 4 SE
    CHECK(run.std_err > 0);
    REQUIRE(run.pz.size() == 3);
    for (const auto& row : run.pz) {
        CHECK(row.ok);
        CHECK(row.floor_bound > 0);
        CHECK(row.empirical >= 0);
    }
    // Borel-Cantelli style tail: hit fraction bounded by the tail mass
    CHECK(run.tail_q0 == 900);
    CHECK(run.tail_ok);
    CHECK(to_double(run.tail_sum.v) == Catch::Approx(std::log(1000.0 / 899) / 2).margin(1e-3));

    // determinism and seed sensitivity
    McRun again = run_mc(f, 20000, 1000, 7, 1, 900);
    CHECK(again.counts == run.counts);
    McRun other = run_mc(f, 20000, 1000, 8);
    CHECK(other.counts != run.counts);

    CHECK_THROWS_AS(run_mc(f, 0, 10, 1), invalid_parameter);
    CHECK_THROWS_AS(run_mc(f, 10, 10, 1, 1, 11), invalid_parameter);
}

TEST_CASE("monte carlo results do not depend on the thread count", "[metric]") {
    Weights w(Rat(1, 2), Rat(1, 2));
    auto f = RegionFamily::sup_norm(w, make_psi(ApproxFunction::power(Rat(1, 10), Rat(1))));
    McRun a = run_mc(f, 4000, 500, 99, 1);
    McRun b = run_mc(f, 4000, 500, 99, 3);
    CHECK(a.counts == b.counts);
    CHECK(a.mean == b.mean);

    // two-dimensional sup-norm family with constant psi: E = Q * 4 psi exactly
    auto g = RegionFamily::sup_norm(w, make_psi(ApproxFunction::constant(Rat(1, 10))));
    McRun c = run_mc(g, 2000, 10, 3);
    CHECK(c.expectation.lo() == 4);
    CHECK(c.expectation.hi() == 4);
    CHECK(c.expectation_ok);
}

TEST_CASE("gallagher tags follow the analytic families", "[metric]") {
    CHECK(gallagher_tag(ApproxFunction::power(Rat(1), Rat(2))) == Divergence::converges);
    CHECK(gallagher_tag(ApproxFunction::power(Rat(1, 4), Rat(1))) == Divergence::diverges);
    CHECK(gallagher_tag(ApproxFunction::constant(Rat(9, 25))) == Divergence::diverges);
    CHECK(gallagher_tag(ApproxFunction::constant(Rat(1))) == Divergence::unknown);
    CHECK(gallagher_tag(ApproxFunction::log_harmonic(Rat(1))) == Divergence::diverges);
}

TEST_CASE("gallagher partial sums carry certified error bars", "[metric]") {
    // sum_{r<=N} (1/r^2) ln(r^2) = -2 zeta'(2) + o(1) = 1.8785... in the limit
    ApproxFunction psi = ApproxFunction::power(Rat(1), Rat(2));
    GallagherReport r1 = gallagher_sum(psi, BigInt(10000));
    GallagherReport r2 = gallagher_sum(psi, BigInt(100000));
    CHECK(r1.tag == Divergence::converges);
    CHECK(to_double(r2.sum.lo()) > to_double(r1.sum.lo()));  // partial sums increase
    CHECK(to_double(r2.sum.lo()) <= 1.87484625);             // frozen N=1e5 enclosure
    CHECK(to_double(r2.sum.hi()) >= 1.87484624);
    CHECK(to_double(r2.sum.hi()) < 1.8786);                  // below the limit value

    // a divergent family grows past any fixed partial sum
    ApproxFunction c = ApproxFunction::constant(Rat(9, 25));
    GallagherReport d1 = gallagher_sum(c, BigInt(100));
    CHECK(d1.tag == Divergence::diverges);
    CHECK(to_double(d1.sum.lo()) == Catch::Approx(100 * 0.36 * std::log(1 / 0.36)).margin(1e-6));

    CHECK_THROWS_AS(gallagher_sum(ApproxFunction::constant(Rat(2)), BigInt(10)),
                    invalid_parameter);
    CHECK_THROWS_AS(gallagher_sum(psi, BigInt(1) << 40), budget_exhausted);
    CHECK_THROWS_AS(gallagher_sum(psi, BigInt(0)), invalid_parameter);
}
