#pragma once

// Exactly-evaluable real numbers.  Every source can produce a certified
// enclosure of its value at any requested precision, which is all the
// orbit machinery ever needs: fractional parts of q*x and distances to
// the nearest integer, with the error budget carried explicitly.

#include "twistlab/numeric.hpp"

#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace twistlab {

class RealSource {
public:
    struct Rational {
        Rat value;
    };
    struct Quadratic {  // (a + b*sqrt(d)) / c,  d > 0 non-square, c != 0
        BigInt a, b, d, c;
    };
    struct CfList {  // finite prefix of a continued fraction expansion
        std::vector<BigInt> terms;
    };
    struct Decimal {  // literal digits, certified to 2^-bits
        std::string digits;  // e.g. "0.41421356"
        unsigned bits;
        Rat value;
    };

    static RealSource rational(const BigInt& p, const BigInt& q) {
        if (q == 0) throw invalid_parameter("rational: zero denominator");
        return RealSource(Rational{Rat(p) / Rat(q)});
    }
    static RealSource rational(Rat r) { return RealSource(Rational{std::move(r)}); }

    static RealSource quadratic(BigInt a, BigInt b, BigInt d, BigInt c) {
        if (c == 0) throw invalid_parameter("quadratic: zero denominator");
        if (d <= 0) throw invalid_parameter("quadratic: d must be positive");
        BigInt s = boost::multiprecision::sqrt(d);
        if (s * s == d) throw invalid_parameter("quadratic: d must be non-square");
        return RealSource(Quadratic{std::move(a), std::move(b), std::move(d), std::move(c)});
    }

    static RealSource cf(std::vector<BigInt> terms) {
        if (terms.empty()) throw invalid_parameter("cf: empty quotient list");
        for (std::size_t i = 1; i < terms.size(); ++i)
            if (terms[i] < 1) throw invalid_parameter("cf: partial quotients must be >= 1");
        return RealSource(CfList{std::move(terms)});
    }

    static RealSource decimal(const std::string& digits, unsigned bits) {
        Rat v = parse_decimal(digits);
        return RealSource(Decimal{digits, bits, v});
    }

    // Certified enclosure of the value, width <= 2^(1-bits).
    Cert eval(unsigned bits) const {
        if (auto* r = std::get_if<Rational>(&kind_)) return Cert(r->value);
        if (auto* q = std::get_if<Quadratic>(&kind_)) {
            if (q->b == 0) return Cert(Rat(q->a) / Rat(q->c));
            unsigned w = bits + bit_length(q->b) + 8;
            Cert s = root_cert(Rat(q->d), 2, w);
            return (Cert(Rat(q->a)) + s * Rat(q->b)) * (Rat(1) / Rat(q->c));
        }
        if (auto* c = std::get_if<CfList>(&kind_)) return eval_cf(c->terms, bits);
        const auto& d = std::get<Decimal>(kind_);
        if (d.bits < bits)
            throw insufficient_precision("decimal source certified to fewer bits than requested");
        return {d.value, Rat(1) / Rat(BigInt(1) << d.bits)};
    }

    std::optional<Rat> as_rational() const {
        if (auto* r = std::get_if<Rational>(&kind_)) return r->value;
        if (auto* q = std::get_if<Quadratic>(&kind_))
            if (q->b == 0) return Rat(q->a) / Rat(q->c);
        return std::nullopt;
    }

    bool is_decimal() const { return std::holds_alternative<Decimal>(kind_); }

    // Canonical partial quotients; for rationals the expansion terminates
    // with final quotient >= 2.
    std::vector<BigInt> continued_fraction(std::size_t n) const;

    std::string serialize() const;
    static RealSource parse(const std::string& text);

private:
    using Kind = std::variant<Rational, Quadratic, CfList, Decimal>;
    explicit RealSource(Kind k) : kind_(std::move(k)) {}

    static Rat parse_decimal(const std::string& s) {
        bool neg = !s.empty() && s[0] == '-';
        std::string body = neg ? s.substr(1) : s;
        auto dot = body.find('.');
        std::string ip = dot == std::string::npos ? body : body.substr(0, dot);
        std::string fp = dot == std::string::npos ? "" : body.substr(dot + 1);
        if (ip.empty()) ip = "0";
        Rat v = Rat(BigInt(ip));
        if (!fp.empty()) v += Rat(BigInt(fp)) / Rat(pow_big(BigInt(10), static_cast<unsigned>(fp.size())));
        return neg ? Rat(-v) : v;
    }

    static Cert eval_cf(const std::vector<BigInt>& terms, unsigned bits) {
        // consecutive convergents bracket the value
        BigInt p0 = 1, q0 = 0, p1 = terms[0], q1 = 1;
        Rat target = Rat(1) / Rat(BigInt(1) << bits);
        if (terms.size() == 1) return Cert(Rat(p1));
        for (std::size_t n = 1; n < terms.size(); ++n) {
            BigInt p2 = terms[n] * p1 + p0;
            BigInt q2 = terms[n] * q1 + q0;
            p0 = p1; q0 = q1; p1 = p2; q1 = q2;
            Rat a = Rat(p0) / Rat(q0), b = Rat(p1) / Rat(q1);
            if (a > b) std::swap(a, b);
            if (b - a <= target) return cert_from_bounds(a, b);
        }
        throw insufficient_precision("cf source: quotient list exhausted before target precision");
    }

    Kind kind_;
};

// Fractional part of q*x in [0,1), certified to 2^-precision_bits
// (interpreted modulo one: the error radius may wrap across 0).
inline Cert frac_mult(const RealSource& x, const BigInt& q, unsigned precision_bits) {
    if (q == 0) return Cert(Rat(0));
    if (auto r = x.as_rational()) {
        Rat prod = *r * Rat(q);
        return Cert(frac_rat(prod));
    }
    unsigned w = precision_bits + bit_length(q) + 8;
    Cert v = x.eval(w);
    Cert prod = v * Rat(q);
    return {frac_rat(prod.v), prod.e};
}

// min(y, 1-y) for a certified value modulo one; result within [0, 1/2].
inline Cert dist_nearest_int(const Cert& y) { return dist_to_int(y); }

// ||q*x||, certified.
inline Cert dist_qx(const RealSource& x, const BigInt& q, unsigned precision_bits) {
    return dist_to_int(frac_mult(x, q, precision_bits));
}

inline std::vector<BigInt> RealSource::continued_fraction(std::size_t n) const {
    std::vector<BigInt> out;
    if (auto r = as_rational()) {
        BigInt p = rat_num(*r), q = rat_den(*r);
        while (q != 0 && out.size() < n + 1) {
            BigInt a = floor_div(p, q);
            out.push_back(a);
            BigInt rem = p - a * q;
            p = q;
            q = rem;
        }
        // canonical: final quotient >= 2 (merge a trailing 1)
        if (out.size() >= 2 && out.back() == 1) {
            out.pop_back();
            out.back() += 1;
        }
        if (out.size() > n) out.resize(n);
        return out;
    }
    if (auto* qd = std::get_if<Quadratic>(&kind_)) {
        (void)qd;
        // generic interval-driven expansion; terminates because the value
        // is irrational so every floor is eventually decided
        std::vector<BigInt> terms;
        unsigned bits = 64;
        while (terms.size() < n) {
            terms.clear();
            bool ok = true;
            Cert y = eval(bits);
            for (std::size_t i = 0; i < n; ++i) {
                BigInt fl = floor_rat(y.lo());
                if (fl != floor_rat(y.hi())) { ok = false; break; }
                terms.push_back(fl);
                Rat lo = y.lo() - Rat(fl), hi = y.hi() - Rat(fl);
                if (lo <= 0) { ok = false; break; }
                y = cert_from_bounds(1 / hi, 1 / lo);
            }
            if (ok) return terms;
            bits *= 2;
            if (bits > 1u << 20) throw insufficient_precision("continued_fraction: no convergence");
        }
        return terms;
    }
    if (auto* c = std::get_if<CfList>(&kind_)) {
        if (c->terms.size() < n)
            throw insufficient_precision("cf source holds fewer quotients than requested");
        return {c->terms.begin(), c->terms.begin() + static_cast<std::ptrdiff_t>(n)};
    }
    // decimal: expand the interval's common prefix
    const auto& d = std::get<Decimal>(kind_);
    std::vector<BigInt> terms;
    Cert y{d.value, Rat(1) / Rat(BigInt(1) << d.bits)};
    for (std::size_t i = 0; i < n; ++i) {
        BigInt fl = floor_rat(y.lo());
        if (fl != floor_rat(y.hi()))
            throw insufficient_precision("decimal source: digits exhausted during cf expansion");
        terms.push_back(fl);
        Rat lo = y.lo() - Rat(fl), hi = y.hi() - Rat(fl);
        if (lo <= 0)
            throw insufficient_precision("decimal source: digits exhausted during cf expansion");
        y = cert_from_bounds(1 / hi, 1 / lo);
    }
    return terms;
}

inline std::string RealSource::serialize() const {
    std::ostringstream os;
    if (auto* r = std::get_if<Rational>(&kind_)) {
        os << "rational:" << rat_num(r->value) << "/" << rat_den(r->value);
    } else if (auto* q = std::get_if<Quadratic>(&kind_)) {
        os << "quad:(" << q->a << "+" << q->b << "*sqrt(" << q->d << "))/" << q->c;
    } else if (auto* c = std::get_if<CfList>(&kind_)) {
        os << "cf:[" << c->terms[0];
        for (std::size_t i = 1; i < c->terms.size(); ++i) os << (i == 1 ? ";" : ",") << c->terms[i];
        os << "]";
    } else {
        const auto& d = std::get<Decimal>(kind_);
        os << "dec:" << d.digits << "@" << d.bits;
    }
    return os.str();
}

inline RealSource RealSource::parse(const std::string& text) {
    auto fail = [&]() -> RealSource {
        throw invalid_parameter("RealSource::parse: bad source string: " + text);
    };
    auto colon = text.find(':');
    if (colon == std::string::npos) return fail();
    std::string tag = text.substr(0, colon);
    std::string body = text.substr(colon + 1);
    if (tag == "rational") {
        auto slash = body.find('/');
        if (slash == std::string::npos) return fail();
        return rational(BigInt(body.substr(0, slash)), BigInt(body.substr(slash + 1)));
    }
    if (tag == "quad") {
        // (a+b*sqrt(d))/c
        auto plus = body.find('+', 1);
        auto star = body.find("*sqrt(");
        auto close = body.find("))", star);
        if (body.empty() || body[0] != '(' || plus == std::string::npos ||
            star == std::string::npos || close == std::string::npos)
            return fail();
        BigInt a(body.substr(1, plus - 1));
        BigInt b(body.substr(plus + 1, star - plus - 1));
        BigInt d(body.substr(star + 6, close - star - 6));
        auto slash = body.find('/', close);
        if (slash == std::string::npos) return fail();
        BigInt c(body.substr(slash + 1));
        return quadratic(a, b, d, c);
    }
    if (tag == "cf") {
        if (body.size() < 3 || body.front() != '[' || body.back() != ']') return fail();
        std::string inner = body.substr(1, body.size() - 2);
        std::vector<BigInt> terms;
        std::string cur;
        for (char ch : inner) {
            if (ch == ';' || ch == ',') {
                terms.emplace_back(cur);
                cur.clear();
            } else {
                cur.push_back(ch);
            }
        }
        terms.emplace_back(cur);
        return cf(std::move(terms));
    }
    if (tag == "dec") {
        auto at = body.find('@');
        if (at == std::string::npos) return fail();
        return decimal(body.substr(0, at), static_cast<unsigned>(std::stoul(body.substr(at + 1))));
    }
    return fail();
}

// A lacunary dyadic pair with anomalously good approximations at the
// denominators q_k = 2^(g^k), together with the exact tail bounds.
struct LiouvillePair {
    RealSource x1, x2;
    std::vector<BigInt> q;     // q_k, k = 1..terms
    std::vector<Rat> bound;    // ||q_k * x_t|| <= bound[k-1] for t = 1,2
    unsigned growth;
};

inline LiouvillePair liouville_vector(unsigned growth, unsigned terms) {
    if (growth < 2) throw invalid_parameter("liouville_vector: growth must be >= 2");
    if (terms < 3) throw invalid_parameter("liouville_vector: need at least 3 terms");
    // digit positions g^1 .. g^(terms+1); second component alternates the
    // digit value so the pair is not rationally dependent
    std::vector<BigInt> pos;
    BigInt p = 1;
    for (unsigned k = 0; k <= terms; ++k) {
        p *= growth;
        pos.push_back(p);
    }
    Rat v1 = 0, v2 = 0;
    for (unsigned k = 0; k < pos.size(); ++k) {
        unsigned pk = static_cast<unsigned>(pos[k]);
        Rat digit = Rat(1) / Rat(BigInt(1) << pk);
        v1 += digit;
        v2 += digit * Rat(1 + (k % 2));
    }
    LiouvillePair out{RealSource::rational(v1), RealSource::rational(v2), {}, {}, growth};
    for (unsigned k = 0; k < terms; ++k) {
        unsigned pk = static_cast<unsigned>(pos[k]);
        BigInt qk = BigInt(1) << pk;
        // exact worst-component tail of q_k * x_t past position g^(k+1)
        Rat t1 = 0, t2 = 0;
        for (unsigned m = k + 1; m < pos.size(); ++m) {
            unsigned gap = static_cast<unsigned>(pos[m] - pos[k]);
            Rat digit = Rat(1) / Rat(BigInt(1) << gap);
            t1 += digit;
            t2 += digit * Rat(1 + (m % 2));
        }
        out.q.push_back(qk);
        out.bound.push_back(t1 > t2 ? t1 : t2);
    }
    return out;
}

}  // namespace twistlab
