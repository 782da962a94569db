#include <catch2/catch_amalgamated.hpp>

#include "twistlab/psi.hpp"

using namespace twistlab;

namespace {

// H_1000 / 4 truncated at 36 digits, from an exact rational oracle.
const char* HARMONIC_QUARTER = "1.871367715137586228164129551083475044";

Rat rat_of_decimal(const std::string& s) {
    auto dot = s.find('.');
    std::string digits = s.substr(0, dot) + s.substr(dot + 1);
    digits.erase(0, std::min(digits.find_first_not_of('0'), digits.size() - 1));
    return Rat(BigInt(digits), pow_big(BigInt(10), unsigned(s.size() - dot - 1)));
}

Weights half() { return Weights(Rat(1, 2), Rat(1, 2)); }

}  // namespace

TEST_CASE("weights validate and expose the exact corner constants") {
    CHECK_THROWS_AS(Weights(Rat(1, 2), Rat(1, 3)), invalid_parameter);
    CHECK_THROWS_AS(Weights(Rat(0), Rat(1)), invalid_parameter);
    Weights w = half();
    CHECK(w.min() == Rat(1, 2));
    // 2^(-1/(1/2)) = 1/4 exactly
    CHECK(w.a_star().exact());
    CHECK(w.a_star().v == Rat(1, 4));
    Weights asym(Rat(3, 10), Rat(7, 10));
    CHECK(asym.max() == Rat(7, 10));
    Cert astar = asym.a_star();
    CHECK(astar.lo() > Rat(1, 3));  // 2^(-10/7) = 0.3715...
    CHECK(astar.hi() < Rat(2, 5));
}

TEST_CASE("engineered instance produces a certified witness") {
    EngineeredInstance inst = engineered_instance(half(), 3);
    REQUIRE(inst.witness.size() == 3);
    CHECK(inst.witness[0].q == 1);
    CHECK(inst.witness[0].m == 2);
    CHECK(inst.witness[1].q == 12);
    CHECK(inst.witness[1].m == 5);
    CHECK(inst.witness[2].q == 1860);
    CHECK(inst.witness[2].m == 11);
    inst.witness.check(half());
    Rat margin = inst.witness.certify(inst.x1, inst.x2, half());
    CHECK(margin > 0);
}

TEST_CASE("witness invariants reject tampered sequences") {
    WitnessSequence wit;
    wit.entries = {{BigInt(1), BigInt(2), BigInt(2)}, {BigInt(12), BigInt(5), BigInt(60)}};
    wit.check(half());
    // n != q*m
    WitnessSequence bad1 = wit;
    bad1.entries[1].n = 61;
    CHECK_THROWS_AS(bad1.check(half()), invalid_parameter);
    // separation ratio violated: c must shrink by more than 2^3
    WitnessSequence bad2 = wit;
    bad2.entries[1].m = 2;
    bad2.entries[1].n = 24;
    CHECK_THROWS_AS(bad2.check(half()), invalid_parameter);
    WitnessSequence tiny;
    tiny.entries = {wit.entries[0]};
    CHECK_THROWS_AS(tiny.check(half()), no_witness);
}

TEST_CASE("witness scan on a liouville pair finds the designed records") {
    LiouvillePair lp = liouville_vector(3, 4);
    WitnessSequence wit = extract_witness(lp.x1, lp.x2, half(), BigInt(513));
    REQUIRE(wit.size() >= 2);
    CHECK(wit[0].q == 8);
    CHECK(wit[0].m == 5);
    CHECK(wit[1].q == 512);
    CHECK(wit[1].m == 511);
    wit.check(half());
    CHECK(wit.certify(lp.x1, lp.x2, half()) > 0);
    // analytic route must agree on the shared prefix
    WitnessSequence wl = witness_from_liouville(lp, half());
    REQUIRE(wl.size() >= 2);
    wl.check(half());
}

TEST_CASE("generic quadratic pairs admit no deep witness") {
    RealSource s2 = RealSource::quadratic(0, 1, 2, 1);
    RealSource s3 = RealSource::quadratic(0, 1, 3, 1);
    CHECK_THROWS_AS(extract_witness(s2, s3, half(), BigInt(100), Rat(1, 1000)), no_witness);
}

TEST_CASE("psi0 block sums match the closed form and exceed one half") {
    EngineeredInstance inst = engineered_instance(half(), 3);
    const WitnessSequence& wit = inst.witness;
    ApproxFunction psi0 = build_psi0(wit);
    for (std::size_t k = 0; k + 1 < wit.size(); ++k) {
        Rat expect = 1 - Rat(wit[k].q * wit[k].m) / Rat(wit[k + 1].q * wit[k + 1].m);
        CHECK(psi0_block_sum(wit, k) == expect);
        CHECK(expect > Rat(1, 2));
        // the staircase really sums to the closed form, term by term
        Cert hi = partial_sum(psi0, wit[k + 1].n);
        Cert lo = partial_sum(psi0, wit[k].n);
        REQUIRE(hi.exact());
        REQUIRE(lo.exact());
        CHECK(hi.v - lo.v == expect);
    }
    // psi0 is 1 up to n_1
    CHECK(psi0.value(1).v == 1);
    CHECK(psi0.value(wit[0].n).v == 1);
    CHECK(psi0.value(wit[0].n + 1).v == Rat(1, wit[1].q * wit[1].m));
}

TEST_CASE("partial_sum encloses the harmonic oracle") {
    auto quarter = make_psi(ApproxFunction::power(Rat(1, 4), Rat(1)));
    Cert s = partial_sum(*quarter, 1000);
    Rat oracle = rat_of_decimal(HARMONIC_QUARTER);
    Rat slack(1, pow_big(BigInt(10), 30));
    CHECK(s.lo() <= oracle + slack);
    CHECK(s.hi() >= oracle - slack);
    CHECK(to_double(s.hi() - s.lo()) < 1e-20);
    // constant fast path is exact
    Cert c = partial_sum(*make_psi(ApproxFunction::constant(Rat(2, 7))), 1000);
    CHECK(c.exact());
    CHECK(c.v == Rat(2000, 7));
}

TEST_CASE("psi1 enforces the cap and the envelope") {
    Weights w = half();
    auto base = make_psi(ApproxFunction::constant(Rat(1)));
    auto psi1 = make_psi(refine_psi1(base, Rat(1, 100), w));
    // cap a*/2 = 1/8 binds at r = 1
    CHECK(psi1->value(1).hi() <= Rat(1, 8));
    // envelope a_* c / (2r) binds for large r: a_* = 1/4, so 1/(800 r)
    Cert far = psi1->value(1000000);
    CHECK(far.hi() <= Rat(1, 800) / 1000000 + Rat(1, BigInt(1) << 80));
    CHECK(far.lo() > 0);
    CHECK_THROWS_AS(refine_psi1(base, Rat(0), w), invalid_parameter);
}

TEST_CASE("psi2 is constant on powers-of-k blocks") {
    BigInt k(8);
    auto base = make_psi(ApproxFunction::power(Rat(1, 4), Rat(1)));
    auto psi1 = make_psi(refine_psi1(base, Rat(1, 10), half()));
    auto psi2 = make_psi(build_psi2(psi1, k));
    // value on (k, k^2] equals psi1(k^2)
    Cert inside = psi2->value(9), edge = psi2->value(64);
    CHECK(inside.v == edge.v);
    Cert next = psi2->value(65);
    CHECK(next.hi() < inside.lo());
    // below k the block is [1, k]
    CHECK(psi2->value(1).v == psi2->value(8).v);
    CHECK_THROWS_AS(build_psi2(psi1, BigInt(4)), invalid_parameter);
}

TEST_CASE("psi3 blocks certify divergence and scale by 1/sqrt(k)") {
    auto base = make_psi(ApproxFunction::constant(Rat(1, 2)));
    auto psi3 = make_psi(build_psi3(base, 12));
    auto* bs = std::get_if<ApproxFunction::BlockScale>(&psi3->kind());
    REQUIRE(bs != nullptr);
    REQUIRE(bs->rk.size() == 12);
    // block k needs ceil(2k) more terms of 1/2 each
    CHECK(bs->rk[0] == 2);
    for (std::size_t k = 1; k < bs->rk.size(); ++k) CHECK(bs->rk[k] - bs->rk[k - 1] == 2 * (k + 1));
    // scaling: value in block k is (1/2)/sqrt(k)
    Cert v4 = psi3->value(bs->rk[3]);  // fourth block -> 1/(2*2) = 1/4
    CHECK(v4.lo() <= Rat(1, 4));
    CHECK(v4.hi() >= Rat(1, 4));
    // queries past the materialized table refuse rather than guess
    CHECK_THROWS_AS(psi3->value(bs->rk.back() + 1), budget_exhausted);
    // convergent input is rejected
    CHECK_THROWS_AS(build_psi3(make_psi(ApproxFunction::power(Rat(1), Rat(2))), 3),
                    invalid_parameter);
}

TEST_CASE("psi4 dilation uses non-decreasing scale factors") {
    auto base = make_psi(ApproxFunction::constant(Rat(1, 2)));
    auto psi3 = make_psi(build_psi3(base, 40));
    auto psi4 = make_psi(build_psi4(psi3, 3));
    auto* dl = std::get_if<ApproxFunction::Dilate>(&psi4->kind());
    REQUIRE(dl != nullptr);
    REQUIRE(dl->ends.size() == 3);
    for (std::size_t m = 1; m < dl->ends.size(); ++m) CHECK(dl->ends[m] > dl->ends[m - 1]);
    // inside block m the value is psi3(m * r)
    BigInt r = dl->ends[0] + 1;  // block with s_r = 2
    Cert direct = psi3->value(2 * r);
    Cert via = psi4->value(r);
    CHECK(via.lo() == direct.lo());
    CHECK(via.hi() == direct.hi());
}

TEST_CASE("extend materializes further blocks without changing old ones") {
    auto base = make_psi(ApproxFunction::constant(Rat(1, 2)));
    auto psi3 = make_psi(build_psi3(base, 5));
    auto more = make_psi(extend(*psi3, 3));
    auto* a = std::get_if<ApproxFunction::BlockScale>(&psi3->kind());
    auto* b = std::get_if<ApproxFunction::BlockScale>(&more->kind());
    REQUIRE(b->rk.size() == a->rk.size() + 3);
    for (std::size_t k = 0; k < a->rk.size(); ++k) CHECK(a->rk[k] == b->rk[k]);
}
