#pragma once

// Exact and certified scalar arithmetic used throughout the library.
//
// Two representations cover every need:
//   Rat  - arbitrary-precision rational, used wherever values are exact.
//   Cert - a rational midpoint plus a rational error radius, used for
//          quantities that are irrational (square roots, rational powers).
// All certified operations round outward, so an enclosure is never lost.

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace twistlab {

using BigInt = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

struct insufficient_precision : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct invalid_parameter : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline BigInt rat_num(const Rat& r) { return numerator(r); }
inline BigInt rat_den(const Rat& r) { return denominator(r); }

// floor(a / b) for arbitrary signs, b > 0.
inline BigInt floor_div(const BigInt& a, const BigInt& b) {
    BigInt q = a / b;
    if (a % b != 0 && ((a < 0) != (b < 0))) --q;
    return q;
}

inline BigInt floor_rat(const Rat& r) { return floor_div(rat_num(r), rat_den(r)); }

inline Rat frac_rat(const Rat& r) { return r - Rat(floor_rat(r)); }

inline BigInt abs_big(const BigInt& a) { return a < 0 ? BigInt(-a) : a; }

inline unsigned bit_length(const BigInt& a) {
    if (a == 0) return 0;
    return static_cast<unsigned>(boost::multiprecision::msb(abs_big(a))) + 1;
}

// floor(a^(1/n)) for a >= 0, n >= 1.  Newton iteration on big integers.
inline BigInt nth_root_floor(const BigInt& a, unsigned n) {
    if (a < 0) throw invalid_parameter("nth_root_floor: negative radicand");
    if (n == 0) throw invalid_parameter("nth_root_floor: zeroth root");
    if (a == 0 || a == 1 || n == 1) return a;
    if (n == 2) return boost::multiprecision::sqrt(a);
    BigInt x = BigInt(1) << (bit_length(a) / n + 1);
    while (true) {
        BigInt xp = boost::multiprecision::pow(x, n - 1);
        BigInt next = ((n - 1) * x + a / xp) / n;
        if (next >= x) break;
        x = next;
    }
    while (boost::multiprecision::pow(x, n) > a) --x;
    return x;
}

inline BigInt pow_big(const BigInt& b, unsigned e) {
    return boost::multiprecision::pow(b, e);
}

// Certified scalar: the true value lies in [v - e, v + e].
struct Cert {
    Rat v;
    Rat e;  // >= 0

    Cert() : v(0), e(0) {}
    explicit Cert(Rat value) : v(std::move(value)), e(0) {}
    Cert(Rat value, Rat err) : v(std::move(value)), e(std::move(err)) {}

    bool exact() const { return e == 0; }
    Rat lo() const { return v - e; }
    Rat hi() const { return v + e; }

    Cert operator+(const Cert& o) const { return {v + o.v, e + o.e}; }
    Cert operator-(const Cert& o) const { return {v - o.v, e + o.e}; }
    Cert operator*(const Cert& o) const {
        Rat av = v < 0 ? Rat(-v) : v;
        Rat bv = o.v < 0 ? Rat(-o.v) : o.v;
        return {v * o.v, av * o.e + bv * e + e * o.e};
    }
    Cert operator*(const Rat& s) const {
        Rat as = s < 0 ? Rat(-s) : s;
        return {v * s, as * e};
    }
};

inline Cert cert_from_bounds(const Rat& lo, const Rat& hi) {
    return {(lo + hi) / 2, (hi - lo) / 2};
}

// Floor of r * 2^bits, i.e. a directed dyadic rounding helper.
inline BigInt scaled_floor(const Rat& r, unsigned bits) {
    return floor_div(rat_num(r) << bits, rat_den(r));
}

inline Rat dyadic(const BigInt& m, unsigned bits) {
    return Rat(m) / Rat(BigInt(1) << bits);
}

// Round a rational down/up onto the 2^-bits grid.
inline Rat round_down(const Rat& r, unsigned bits) { return dyadic(scaled_floor(r, bits), bits); }
inline Rat round_up(const Rat& r, unsigned bits) {
    BigInt m = scaled_floor(r, bits);
    Rat d = dyadic(m, bits);
    return d == r ? d : dyadic(m + 1, bits);
}

// Enclosure of r^(1/n) for rational r >= 0, absolute width <= 2^(1-bits).
inline Cert root_cert(const Rat& r, unsigned n, unsigned bits) {
    if (r < 0) throw invalid_parameter("root_cert: negative base");
    if (r == 0) return Cert(Rat(0));
    BigInt t = floor_div(rat_num(r) << (static_cast<std::uint64_t>(n) * bits), rat_den(r));
    BigInt a = nth_root_floor(t, n);
    return cert_from_bounds(dyadic(a, bits), dyadic(a + 1, bits));
}

// Enclosure of base^expo for rational base > 0 and rational exponent.
inline Cert pow_cert(const Rat& base, const Rat& expo, unsigned bits) {
    if (base <= 0) throw invalid_parameter("pow_cert: base must be positive");
    BigInt p = rat_num(expo);
    BigInt qb = rat_den(expo);
    if (qb > 64) throw invalid_parameter("pow_cert: exponent denominator too large");
    unsigned q = static_cast<unsigned>(qb);
    bool neg = p < 0;
    BigInt pa = abs_big(p);
    if (pa > 4096) throw invalid_parameter("pow_cert: exponent numerator too large");
    Rat bp = Rat(pow_big(rat_num(base), static_cast<unsigned>(pa))) /
             Rat(pow_big(rat_den(base), static_cast<unsigned>(pa)));
    if (neg) bp = 1 / bp;
    if (q == 1) return Cert(bp);
    return root_cert(bp, q, bits);
}

// Enclosure of base^expo when the base itself is certified (base > 0).
inline Cert pow_cert(const Cert& base, const Rat& expo, unsigned bits) {
    if (base.exact()) return pow_cert(base.v, expo, bits);
    Rat lo = base.lo(), hi = base.hi();
    if (lo <= 0) throw invalid_parameter("pow_cert: certified base not strictly positive");
    Cert a = pow_cert(lo, expo, bits);
    Cert b = pow_cert(hi, expo, bits);
    Rat l = a.lo() < b.lo() ? a.lo() : b.lo();
    Rat h = a.hi() > b.hi() ? a.hi() : b.hi();
    return cert_from_bounds(l, h);
}

// Enclosure of ln(x) for rational x >= 1, via the atanh series after
// scaling into [1, 2).
inline Cert log_cert(const Rat& x) {
    if (x < 1) throw invalid_parameter("log_cert: x must be >= 1");
    if (x == 1) return Cert(Rat(0));
    Rat m = x;
    unsigned e = 0;
    while (m >= 2) {
        m /= 2;
        ++e;
    }
    static const Rat ln2_lo = Rat(BigInt("6931471805599453094"), BigInt("10000000000000000000"));
    static const Rat ln2_hi = Rat(BigInt("6931471805599453095"), BigInt("10000000000000000000"));
    Rat t = (m - 1) / (m + 1);  // in [0, 1/3)
    Rat sum = 0, term = t, t2 = t * t;
    for (unsigned n = 0; n < 24; ++n) {
        sum += term / Rat(2 * n + 1);
        term *= t2;
    }
    Rat lo = 2 * sum;
    Rat hi = 2 * (sum + term);  // geometric tail, ratio <= 1/9
    return cert_from_bounds(lo + e * ln2_lo, hi + e * ln2_hi);
}

// Distance from a certified real to the nearest integer, as an enclosure
// within [0, 1/2].
inline Cert dist_to_int(const Cert& y) {
    Rat lo = y.lo(), hi = y.hi();
    if (hi - lo >= 1) return cert_from_bounds(Rat(0), Rat(1, 2));
    Rat shift(floor_rat(lo));
    lo -= shift;
    hi -= shift;  // lo in [0,1), hi < 2
    auto dist = [](const Rat& t) {  // t in [0, 2)
        Rat f = t <= 1 ? t : Rat(t - 1);
        return f <= Rat(1, 2) ? f : Rat(1 - f);
    };
    Rat dl = dist(lo), dh = dist(hi);
    Rat dmin = dl < dh ? dl : dh;
    Rat dmax = dl > dh ? dl : dh;
    // interior extrema: integer -> 0, half-integer -> 1/2
    for (Rat crit : {Rat(1, 2), Rat(1), Rat(3, 2)}) {
        if (lo < crit && crit < hi) {
            if (crit == 1)
                dmin = 0;
            else
                dmax = Rat(1, 2);
        }
    }
    return cert_from_bounds(dmin, dmax);
}

inline double to_double(const Rat& r) { return r.convert_to<double>(); }

// Element a + b*sqrt(2) of the quadratic field Q(sqrt(2)), with exact
// ordering.  Lets geometry whose coordinates mix rationals with sqrt(2)
// multiples (half-widths like (2 psi)^(1/2) for dyadic-square psi) be
// computed with zero tolerance.
struct RootTwo {
    Rat a, b;

    RootTwo() : a(0), b(0) {}
    RootTwo(int v) : a(v), b(0) {}  // NOLINT: implicit by design, mirrors Rat
    explicit RootTwo(Rat r) : a(std::move(r)), b(0) {}
    RootTwo(Rat a_, Rat b_) : a(std::move(a_)), b(std::move(b_)) {}

    // sign of a + b*sqrt(2)
    int sign() const {
        int sa = a == 0 ? 0 : (a > 0 ? 1 : -1);
        int sb = b == 0 ? 0 : (b > 0 ? 1 : -1);
        if (sb == 0) return sa;
        if (sa == 0) return sb;
        if (sa == sb) return sa;
        // opposite signs: compare a^2 with 2 b^2
        Rat d = a * a - 2 * b * b;
        if (d == 0) return 0;  // unreachable for nonzero a, b; kept for safety
        return d > 0 ? sa : sb;
    }

    RootTwo operator+(const RootTwo& o) const { return {a + o.a, b + o.b}; }
    RootTwo operator-(const RootTwo& o) const { return {a - o.a, b - o.b}; }
    RootTwo operator*(const RootTwo& o) const {
        return {a * o.a + 2 * b * o.b, a * o.b + b * o.a};
    }
    bool operator==(const RootTwo& o) const { return a == o.a && b == o.b; }
    bool operator!=(const RootTwo& o) const { return !(*this == o); }
    bool operator<(const RootTwo& o) const { return (*this - o).sign() < 0; }
    bool operator<=(const RootTwo& o) const { return (*this - o).sign() <= 0; }
    bool operator>(const RootTwo& o) const { return (*this - o).sign() > 0; }
    bool operator>=(const RootTwo& o) const { return (*this - o).sign() >= 0; }
};

inline double to_double(const RootTwo& r) {
    return to_double(r.a) + to_double(r.b) * 1.41421356237309504880;
}

inline std::string rat_string(const Rat& r) {
    return rat_num(r).str() + "/" + rat_den(r).str();
}

// Fixed decimal rendering, enough for reports; not a round-trip format.
inline std::string decimal_string(const Rat& r, unsigned digits = 12) {
    BigInt scale = pow_big(BigInt(10), digits);
    BigInt n = floor_div(rat_num(r) * scale, rat_den(r));
    bool neg = n < 0;
    BigInt a = abs_big(n);
    BigInt ip = a / scale, fp = a % scale;
    std::string frac = fp.str();
    while (frac.size() < digits) frac.insert(frac.begin(), '0');
    return (neg ? "-" : "") + ip.str() + "." + frac;
}

}  // namespace twistlab
