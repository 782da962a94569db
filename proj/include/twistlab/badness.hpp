#pragma once

// Badness profiling: empirical weighted approximation constants from
// exhaustive certified scans, plus one-dimensional record sequences.

#include "twistlab/psi.hpp"

#include <future>
#include <optional>
#include <thread>
#include <vector>

namespace twistlab {

struct BadnessRecord {
    BigInt q;
    Cert v;  // q * max{||q x1||^(1/i), ||q x2||^(1/j)}
};

struct BadnessProfile {
    Weights w;
    BigInt Q;
    std::vector<BadnessRecord> records;  // running certified minima
    Rat c_lower;                         // certified lower bound of the scan minimum
    Rat c_upper;                         // certified upper bound of the scan minimum
    BigInt argmin;
    bool rational_degenerate = false;    // some ||q x_t|| is exactly 0
};

namespace detail {

// Certified v_q; exact zero distance marks rational degeneracy.
inline Cert badness_value(const RealSource& x1, const RealSource& x2, const Weights& w,
                          const BigInt& q, unsigned bits, bool& degenerate) {
    Cert d1 = dist_qx(x1, q, bits);
    Cert d2 = dist_qx(x2, q, bits);
    if ((d1.exact() && d1.v == 0) || (d2.exact() && d2.v == 0)) {
        degenerate = true;
        return Cert(Rat(0));
    }
    if (d1.lo() <= 0 || d2.lo() <= 0) {
        // retry at double the budget before giving up
        d1 = dist_qx(x1, q, 2 * bits);
        d2 = dist_qx(x2, q, 2 * bits);
        if ((d1.exact() && d1.v == 0) || (d2.exact() && d2.v == 0)) {
            degenerate = true;
            return Cert(Rat(0));
        }
        if (d1.lo() <= 0 || d2.lo() <= 0)
            throw insufficient_precision("badness scan: distance enclosure straddles 0");
    }
    Cert p1 = pow_cert(d1, 1 / w.i, bits);
    Cert p2 = pow_cert(d2, 1 / w.j, bits);
    Rat lo = p1.lo() > p2.lo() ? p1.lo() : p2.lo();
    Rat hi = p1.hi() > p2.hi() ? p1.hi() : p2.hi();
    return cert_from_bounds(lo * Rat(q), hi * Rat(q));
}

}  // namespace detail

inline BadnessProfile profile(const RealSource& x1, const RealSource& x2, const Weights& w,
                              const BigInt& Q, unsigned threads = 1) {
    if (Q < 1) throw invalid_parameter("profile: Q must be >= 1");
    unsigned bits = 64 + bit_length(Q);
    std::uint64_t qmax = Q.convert_to<std::uint64_t>();
    struct Chunk {
        std::vector<BadnessRecord> candidates;  // running minima within the chunk
        Rat min_lo;                             // min of v.lo over every scanned q
        bool have_lo = false;
        bool degenerate = false;
        BigInt degen_q = 0;
    };
    if (threads == 0) threads = 1;
    std::uint64_t per = (qmax + threads - 1) / threads;
    auto scan = [&](std::uint64_t lo, std::uint64_t hi) {
        Chunk ch;
        Rat best_hi;
        bool have = false;
        for (std::uint64_t qi = lo; qi <= hi && qi <= qmax; ++qi) {
            bool deg = false;
            Cert v = detail::badness_value(x1, x2, w, BigInt(qi), bits, deg);
            if (deg) {
                ch.degenerate = true;
                ch.degen_q = qi;
                ch.candidates.push_back({BigInt(qi), v});
                break;  // the minimum is 0; nothing below it
            }
            if (!ch.have_lo || v.lo() < ch.min_lo) {
                ch.min_lo = v.lo();
                ch.have_lo = true;
            }
            if (!have || v.hi() < best_hi) {
                ch.candidates.push_back({BigInt(qi), v});
                best_hi = v.hi();
                have = true;
            }
        }
        return ch;
    };
    std::vector<std::future<Chunk>> futs;
    for (unsigned t = 0; t < threads; ++t) {
        std::uint64_t lo = 1 + t * per, hi = lo + per - 1;
        if (lo > qmax) break;
        futs.push_back(std::async(std::launch::async, scan, lo, hi));
    }
    BadnessProfile out{w, Q, {}, Rat(0), Rat(0), BigInt(0), false};
    Rat best_hi;
    bool have = false;
    Rat global_lo;
    bool have_global_lo = false;
    for (auto& f : futs) {
        Chunk ch = f.get();
        if (ch.have_lo && (!have_global_lo || ch.min_lo < global_lo)) {
            global_lo = ch.min_lo;
            have_global_lo = true;
        }
        for (auto& rec : ch.candidates) {
            if (ch.degenerate && rec.v.exact() && rec.v.v == 0) {
                out.records.push_back(rec);
                out.rational_degenerate = true;
                out.c_lower = 0;
                out.c_upper = 0;
                out.argmin = rec.q;
                return out;
            }
            if (!have || rec.v.hi() < best_hi) {
                out.records.push_back(rec);
                best_hi = rec.v.hi();
                out.c_upper = rec.v.hi();
                out.argmin = rec.q;
                have = true;
            }
        }
    }
    out.c_lower = have_global_lo ? global_lo : Rat(0);
    return out;
}

struct OneDimRecord {
    BigInt q;
    Cert v;  // q * ||q x||
};

// Best-approximation records: q is kept when ||q x|| is certifiably smaller
// than at every earlier denominator, and v = q * ||q x|| is reported.  The
// liminf of q ||q x|| is attained along these records, so their tail is the
// natural estimator for the approximation constant.
inline std::vector<OneDimRecord> one_dim_profile(const RealSource& x, const BigInt& Q) {
    if (Q < 1) throw invalid_parameter("one_dim_profile: Q must be >= 1");
    unsigned bits = 64 + bit_length(Q);
    std::vector<OneDimRecord> out;
    std::uint64_t qmax = Q.convert_to<std::uint64_t>();
    // Evaluate x once as a scaled-integer bracket N_lo/2^B <= x <= N_hi/2^B;
    // the scan then runs on plain integers with no rational normalization.
    unsigned B = bits + bit_length(Q) + 8;
    BigInt nlo, nhi;
    if (auto xr = x.as_rational()) {
        nlo = scaled_floor(*xr, B);
        nhi = nlo;
        if (Rat(nlo, BigInt(1) << B) != *xr) ++nhi;  // strict dyadic bracket
    } else {
        Cert v = x.eval(B);
        nlo = scaled_floor(v.lo(), B);
        nhi = scaled_floor(v.hi(), B) + 1;
    }
    const BigInt M = BigInt(1) << B;
    const BigInt half = M >> 1;
    BigInt best_dlo = 0;
    bool have = false;
    for (std::uint64_t qi = 1; qi <= qmax; ++qi) {
        BigInt a = nlo * qi;
        BigInt r = a % M;
        if (r < 0) r += M;
        BigInt w = (nhi - nlo) * qi;
        BigInt rhi = r + w;  // interval [r, rhi] in units of 2^-B, rhi may exceed M
        BigInt d1 = r <= half ? r : M - r;
        BigInt r2 = rhi >= M ? rhi - M : rhi;
        BigInt d2 = r2 <= half ? r2 : M - r2;
        BigInt dlo, dhi;
        if (rhi >= M) {  // interval straddles an integer
            dlo = 0;
            dhi = d1 > d2 ? d1 : d2;
        } else if (r <= half && rhi >= half) {  // straddles a half-integer
            dlo = d1 < d2 ? d1 : d2;
            dhi = half;
        } else {  // distance is monotone across the interval
            dlo = d1 < d2 ? d1 : d2;
            dhi = d1 > d2 ? d1 : d2;
        }
        if (!have || dhi < best_dlo) {
            out.push_back({BigInt(qi),
                           cert_from_bounds(Rat(dlo * qi, M), Rat(dhi * qi, M))});
            best_dlo = dlo;
            have = true;
        }
    }
    return out;
}

// min_{1 <= q <= Q} q * ||q x - gamma||.
inline Cert inhomogeneous_min(const RealSource& x, const Rat& gamma, const BigInt& Q) {
    if (Q < 1) throw invalid_parameter("inhomogeneous_min: Q must be >= 1");
    if (gamma < 0 || gamma >= 1) throw invalid_parameter("inhomogeneous_min: gamma must be in [0,1)");
    unsigned bits = 64 + bit_length(Q);
    Rat best_lo, best_hi;
    bool have = false;
    std::uint64_t qmax = Q.convert_to<std::uint64_t>();
    for (std::uint64_t qi = 1; qi <= qmax; ++qi) {
        Cert f = frac_mult(x, BigInt(qi), bits);
        Cert d = dist_to_int(cert_from_bounds(f.lo() - gamma, f.hi() - gamma));
        Rat lo = d.lo() * Rat(qi), hi = d.hi() * Rat(qi);
        if (!have || hi < best_hi) best_hi = hi;
        if (!have || lo < best_lo) best_lo = lo;
        have = true;
    }
    return cert_from_bounds(best_lo, best_hi);
}

}  // namespace twistlab
