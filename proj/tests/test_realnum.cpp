#include <catch2/catch_amalgamated.hpp>

#include "twistlab/realnum.hpp"

using namespace twistlab;

namespace {

// Frozen 60-digit oracles computed independently.
const char* SQRT2 = "1.414213562373095048801688724209698078569671875376948073176679";
const char* GOLDEN = "1.618033988749894848204586834365638117720309179805762862135448";

Rat rat_of_decimal(const std::string& s) {
    auto dot = s.find('.');
    std::string digits = s.substr(0, dot) + s.substr(dot + 1);
    digits.erase(0, std::min(digits.find_first_not_of('0'), digits.size() - 1));
    return Rat(BigInt(digits), pow_big(BigInt(10), unsigned(s.size() - dot - 1)));
}

}  // namespace

TEST_CASE("quadratic evaluation encloses the frozen digits") {
    RealSource s2 = RealSource::quadratic(0, 1, 2, 1);
    Cert v = s2.eval(200);
    Rat oracle = rat_of_decimal(SQRT2);
    Rat slack(1, pow_big(BigInt(10), 58));
    CHECK(v.lo() <= oracle + slack);
    CHECK(v.hi() >= oracle - slack);
    CHECK(to_double(v.hi() - v.lo()) < 1e-55);

    RealSource gold = RealSource::quadratic(1, 1, 5, 2);
    Cert g = gold.eval(200);
    Rat og = rat_of_decimal(GOLDEN);
    CHECK(g.lo() <= og + slack);
    CHECK(g.hi() >= og - slack);
}

TEST_CASE("continued fractions match the classical expansions") {
    // sqrt(2) = [1; 2, 2, 2, ...]
    auto cf2 = RealSource::quadratic(0, 1, 2, 1).continued_fraction(10);
    REQUIRE(cf2.size() == 10);
    CHECK(cf2[0] == 1);
    for (std::size_t i = 1; i < cf2.size(); ++i) CHECK(cf2[i] == 2);
    // golden ratio = [1; 1, 1, 1, ...]
    auto cfg = RealSource::quadratic(1, 1, 5, 2).continued_fraction(12);
    for (const auto& t : cfg) CHECK(t == 1);
    // 355/113 = [3; 7, 16]
    auto cfr = RealSource::rational(BigInt(355), BigInt(113)).continued_fraction(10);
    REQUIRE(cfr.size() == 3);
    CHECK(cfr[0] == 3);
    CHECK(cfr[1] == 7);
    CHECK(cfr[2] == 16);
}

TEST_CASE("cf sources reproduce their convergents") {
    RealSource x = RealSource::cf({BigInt(1), BigInt(2), BigInt(2), BigInt(2), BigInt(2),
                                   BigInt(2), BigInt(2), BigInt(2)});
    Cert v = x.eval(12);
    // eighth convergent of sqrt(2) is 577/408
    Rat target(577, 408);
    CHECK(to_double(v.v - target) < 1e-3);
    // precision beyond the quotient list is refused, not silently fudged
    CHECK_THROWS_AS(x.eval(4096), insufficient_precision);
    auto back = x.continued_fraction(8);
    CHECK(back[0] == 1);
    CHECK(back[1] == 2);
}

TEST_CASE("serialize and parse round-trip every source kind") {
    std::vector<RealSource> xs = {
        RealSource::rational(BigInt(-3), BigInt(7)),
        RealSource::quadratic(1, -2, 3, 5),
        RealSource::cf({BigInt(0), BigInt(1), BigInt(4), BigInt(1)}),
        RealSource::decimal("0.1234567890123456789", 96),
    };
    for (const auto& x : xs) {
        RealSource y = RealSource::parse(x.serialize());
        CHECK(y.serialize() == x.serialize());
        Cert a = x.eval(3), b = y.eval(3);
        CHECK(a.lo() <= b.hi());
        CHECK(b.lo() <= a.hi());
    }
    CHECK_THROWS_AS(RealSource::parse("nonsense"), invalid_parameter);
    CHECK_THROWS_AS(RealSource::parse("quad:junk"), invalid_parameter);
}

TEST_CASE("dist_qx matches hand-checked orbit distances") {
    RealSource s2 = RealSource::quadratic(0, 1, 2, 1);
    // 5*sqrt(2) = 7.0710678...; distance to nearest integer = 0.0710678...
    Cert d5 = dist_qx(s2, 5, 96);
    CHECK(to_double(d5.v) == Catch::Approx(0.0710678118654755).epsilon(1e-12));
    // rational x is exact
    RealSource r = RealSource::rational(BigInt(2), BigInt(7));
    Cert d3 = dist_qx(r, 3, 64);
    CHECK(d3.exact());
    CHECK(d3.v == Rat(1, 7));
    Cert d7 = dist_qx(r, 7, 64);
    CHECK(d7.v == 0);
}

TEST_CASE("frac_mult stays inside the unit interval") {
    RealSource s3 = RealSource::quadratic(0, 1, 3, 1);
    for (int q = 1; q <= 50; ++q) {
        Cert f = frac_mult(s3, q, 96);
        CHECK(f.lo() >= -Rat(1, BigInt(1) << 60));
        CHECK(f.hi() <= Rat(1) + Rat(1, BigInt(1) << 60));
    }
}

TEST_CASE("liouville pair bounds are certified by direct evaluation") {
    LiouvillePair lp = liouville_vector(3, 4);
    REQUIRE(lp.q.size() == 4);
    REQUIRE(lp.bound.size() == 4);
    CHECK(lp.q[0] == BigInt(1) << 3);
    CHECK(lp.q[1] == BigInt(1) << 9);
    CHECK(lp.q[2] == BigInt(1) << 27);
    for (std::size_t k = 0; k < lp.q.size(); ++k) {
        unsigned bits = unsigned(bit_length(lp.q[k])) + 256;
        CHECK(dist_qx(lp.x1, lp.q[k], bits).hi() <= lp.bound[k]);
        CHECK(dist_qx(lp.x2, lp.q[k], bits).hi() <= lp.bound[k]);
        CHECK(lp.bound[k] > 0);
    }
    // bounds shrink super-exponentially
    for (std::size_t k = 1; k < lp.bound.size(); ++k)
        CHECK(lp.bound[k] < lp.bound[k - 1] * lp.bound[k - 1]);
    CHECK_THROWS_AS(liouville_vector(1, 4), invalid_parameter);
    CHECK_THROWS_AS(liouville_vector(2, 2), invalid_parameter);
}
