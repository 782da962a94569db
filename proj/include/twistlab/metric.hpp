#pragma once

// Doubly-metric Monte-Carlo laboratory: closed-form measures for the three
// region families (interval, weighted sup-norm rectangle, multiplicative
// hyperbola), sample statistics for the counting function A_Q, and the
// log-weighted partial sums that govern the multiplicative theory.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <string>
#include <vector>

#include "twistlab/psi.hpp"

namespace twistlab {

struct out_of_domain : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RegionFamily {
    enum class Shape { interval, sup_norm, multiplicative };

    Shape shape;
    unsigned d;   // ambient torus dimension, 1 or 2
    Weights w;    // sup-norm side exponents; unused otherwise
    PsiPtr psi;

    static RegionFamily interval(PsiPtr psi) {
        require(psi);
        return {Shape::interval, 1, Weights(Rat(1, 2), Rat(1, 2)), std::move(psi)};
    }
    static RegionFamily sup_norm(Weights w, PsiPtr psi) {
        require(psi);
        return {Shape::sup_norm, 2, std::move(w), std::move(psi)};
    }
    static RegionFamily multiplicative(PsiPtr psi) {
        require(psi);
        return {Shape::multiplicative, 2, Weights(Rat(1, 2), Rat(1, 2)), std::move(psi)};
    }

    const char* shape_name() const {
        switch (shape) {
            case Shape::interval: return "interval";
            case Shape::sup_norm: return "sup_norm";
            default: return "multiplicative";
        }
    }

private:
    static void require(const PsiPtr& psi) {
        if (!psi) throw invalid_parameter("region family needs an approximating function");
    }
};

// Closed-form measure of the target region at index q, certified:
//   interval         2*psi(q)                        (capped at 1)
//   sup_norm         (2*psi^i)(2*psi^j) = 4*psi      (each side capped at 1)
//   multiplicative   4t(1 + ln(1/(4t))), t = psi(q)  (valid only for t <= 1/4)
inline Cert region_measure(const RegionFamily& f, const BigInt& q, unsigned bits = 96) {
    if (q < 1) throw invalid_parameter("region_measure: q must be >= 1");
    Cert t = f.psi->value(q);
    if (t.lo() <= 0) throw insufficient_precision("region_measure: psi enclosure touches zero");
    auto cap1 = [](const Rat& r) { return r > 1 ? Rat(1) : r; };
    switch (f.shape) {
        case RegionFamily::Shape::interval:
            return cert_from_bounds(cap1(2 * t.lo()), cap1(2 * t.hi()));
        case RegionFamily::Shape::sup_norm: {
            Cert px = pow_cert(t, f.w.i, bits);
            Cert py = pow_cert(t, f.w.j, bits);
            // when neither side caps, the product telescopes: 4*psi^(i+j) = 4*psi
            if (px.hi() <= Rat(1, 2) && py.hi() <= Rat(1, 2))
                return cert_from_bounds(4 * t.lo(), 4 * t.hi());
            return cert_from_bounds(cap1(2 * px.lo()) * cap1(2 * py.lo()),
                                    cap1(2 * px.hi()) * cap1(2 * py.hi()));
        }
        default: {
            if (t.hi() > Rat(1, 4))
                throw out_of_domain("multiplicative measure formula needs psi(q) <= 1/4");
            // 4t(1 + ln(1/(4t))) is increasing in t on (0, 1/4].  The log
            // enclosures carry bulky denominators, so the result is rounded
            // to dyadics to keep downstream accumulation cheap.
            Cert llo = log_cert(Rat(1) / (4 * t.lo()));
            Cert lhi = log_cert(Rat(1) / (4 * t.hi()));
            return cert_from_bounds(round_down(4 * t.lo() * (1 + llo.lo()), 2 * bits),
                                    round_up(cap1(4 * t.hi() * (1 + lhi.hi())), 2 * bits));
        }
    }
}

struct PzRow {
    Rat eps;
    double threshold;  // eps * E, the hit-count cutoff
    double floor_bound;
    double empirical;
    double sigma;
    bool ok;
};

struct McRun {
    RegionFamily::Shape shape;
    unsigned d;
    std::uint64_t seed;
    std::size_t N;
    std::uint64_t Q;
    std::string rng = "splitmix64";

    Cert expectation;  // sum of region_measure over q <= Q
    double mean = 0, second_moment = 0, std_err = 0;
    bool expectation_ok = false;  // |mean - E| <= 4 * std_err

    std::vector<PzRow> pz;

    std::uint64_t tail_q0 = 0;  // 0 disables the tail check
    Cert tail_sum;              // sum of measures over tail_q0 <= q <= Q
    double tail_fraction = 0;   // samples with at least one hit at q >= tail_q0
    bool tail_ok = true;

    std::vector<std::uint32_t> counts;  // per-sample A_Q
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Distance to the nearest integer of the dyadic v / 2^64, in the same scale.
inline std::uint64_t torus_dist64(std::uint64_t v) {
    return std::min(v, std::uint64_t(0) - v);
}

struct McThresholds {
    // Fixed-point cutoffs per q; interval/sup_norm at scale 2^64, the
    // multiplicative product test at scale 2^128.
    std::vector<std::uint64_t> tx, ty;
    std::vector<unsigned __int128> prod;
};

inline std::uint64_t fixed64(const Rat& r) {
    if (r >= Rat(1, 2)) return ~std::uint64_t(0);  // covers the whole torus axis
    return scaled_floor(r, 64).convert_to<std::uint64_t>();
}

inline McThresholds mc_thresholds(const RegionFamily& f, std::uint64_t Q, unsigned bits) {
    McThresholds th;
    bool mult = f.shape == RegionFamily::Shape::multiplicative;
    if (mult)
        th.prod.resize(Q + 1);
    else {
        th.tx.resize(Q + 1);
        if (f.d == 2) th.ty.resize(Q + 1);
    }
    for (std::uint64_t q = 1; q <= Q; ++q) {
        Cert t = f.psi->value(BigInt(q));
        switch (f.shape) {
            case RegionFamily::Shape::interval:
                th.tx[q] = fixed64(t.v);
                break;
            case RegionFamily::Shape::sup_norm:
                th.tx[q] = fixed64(pow_cert(t, f.w.i, bits).v);
                th.ty[q] = fixed64(pow_cert(t, f.w.j, bits).v);
                break;
            default: {
                BigInt s = scaled_floor(t.v, 128);
                th.prod[q] = s.convert_to<unsigned __int128>();
                break;
            }
        }
    }
    return th;
}

}  // namespace detail

// Monte-Carlo run over N independent samples (x, gamma) uniform on
// [0,1)^d x [0,1)^d at 64-bit dyadic resolution.  Each sample counts the
// indices q <= Q whose orbit point q*x - gamma lands in the region A_q;
// the hit test is the exact inequality on the fixed-point distances, not
// the area formula used for the expectation.  Results are independent of
// the thread count: every sample's RNG stream is keyed by its global index.
inline McRun run_mc(const RegionFamily& f, std::size_t N, std::uint64_t Q, std::uint64_t seed,
                    unsigned threads = 1, std::uint64_t tail_q0 = 0, unsigned bits = 96) {
    if (N < 1) throw invalid_parameter("run_mc: need at least one sample");
    if (Q < 1) throw invalid_parameter("run_mc: need Q >= 1");
    if (tail_q0 > Q) throw invalid_parameter("run_mc: tail_q0 must be <= Q");

    McRun run;
    run.shape = f.shape;
    run.d = f.d;
    run.seed = seed;
    run.N = N;
    run.Q = Q;
    run.tail_q0 = tail_q0;

    run.expectation = Cert(Rat(0));
    for (std::uint64_t q = 1; q <= Q; ++q) {
        Cert m = region_measure(f, BigInt(q), bits);
        run.expectation = run.expectation + m;
        if (tail_q0 && q >= tail_q0) run.tail_sum = run.tail_sum + m;
    }

    detail::McThresholds th = detail::mc_thresholds(f, Q, bits);
    bool two_dim = f.d == 2;
    bool mult = f.shape == RegionFamily::Shape::multiplicative;

    run.counts.assign(N, 0);
    std::vector<std::uint8_t> tail_hit(tail_q0 ? N : 0, 0);

    auto worker = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t idx = lo; idx < hi; ++idx) {
            std::uint64_t state = seed + (std::uint64_t(idx) + 1) * 0x9e3779b97f4a7c15ULL;
            std::uint64_t x1 = detail::splitmix64(state);
            std::uint64_t g1 = detail::splitmix64(state);
            std::uint64_t x2 = 0, g2 = 0;
            if (two_dim) {
                x2 = detail::splitmix64(state);
                g2 = detail::splitmix64(state);
            }
            std::uint32_t hits = 0;
            std::uint64_t a1 = 0, a2 = 0;
            for (std::uint64_t q = 1; q <= Q; ++q) {
                a1 += x1;
                a2 += x2;
                std::uint64_t d1 = detail::torus_dist64(a1 - g1);
                bool hit;
                if (mult) {
                    std::uint64_t d2 = detail::torus_dist64(a2 - g2);
                    hit = (unsigned __int128)d1 * d2 <= th.prod[q];
                } else if (two_dim) {
                    hit = d1 <= th.tx[q] && detail::torus_dist64(a2 - g2) <= th.ty[q];
                } else {
                    hit = d1 <= th.tx[q];
                }
                if (hit) {
                    ++hits;
                    if (tail_q0 && q >= tail_q0) tail_hit[idx] = 1;
                }
            }
            run.counts[idx] = hits;
        }
    };

    if (threads <= 1) {
        worker(0, N);
    } else {
        std::size_t chunk = (N + threads - 1) / threads;
        std::vector<std::future<void>> fut;
        for (std::size_t lo = 0; lo < N; lo += chunk)
            fut.push_back(std::async(std::launch::async, worker, lo, std::min(lo + chunk, N)));
        for (auto& ft : fut) ft.get();
    }

    double s1 = 0, s2 = 0;
    for (std::uint32_t c : run.counts) {
        s1 += c;
        s2 += double(c) * c;
    }
    run.mean = s1 / double(N);
    run.second_moment = s2 / double(N);
    double var = run.second_moment - run.mean * run.mean;
    if (N > 1) var *= double(N) / double(N - 1);
    run.std_err = std::sqrt(std::max(var, 0.0) / double(N));

    double E = to_double(run.expectation.v);
    run.expectation_ok = std::abs(run.mean - E) <= 4 * run.std_err + 1e-12;

    // Paley-Zygmund: P(A >= eps*E) >= (1-eps)^2 E^2 / E[A^2], checked with
    // the empirical second moment and a 3-sigma binomial allowance.
    for (const Rat& eps : {Rat(1, 10), Rat(1, 4), Rat(1, 2)}) {
        PzRow row;
        row.eps = eps;
        row.threshold = to_double(eps) * E;
        std::size_t above = 0;
        for (std::uint32_t c : run.counts)
            if (double(c) >= row.threshold) ++above;
        row.empirical = double(above) / double(N);
        row.sigma = std::sqrt(std::max(row.empirical * (1 - row.empirical), 1e-12) / double(N));
        double one_minus = 1 - to_double(eps);
        row.floor_bound =
            run.second_moment > 0 ? one_minus * one_minus * E * E / run.second_moment : 0.0;
        row.ok = row.empirical >= row.floor_bound - 3 * row.sigma;
        run.pz.push_back(row);
    }

    if (tail_q0) {
        std::size_t nhit = 0;
        for (std::uint8_t h : tail_hit) nhit += h;
        run.tail_fraction = double(nhit) / double(N);
        double tail = to_double(run.tail_sum.hi());
        double sigma = std::sqrt(std::max(run.tail_fraction * (1 - run.tail_fraction), 1e-12) /
                                 double(N));
        run.tail_ok = run.tail_fraction <= tail + 3 * sigma;
    }
    return run;
}

struct GallagherReport {
    BigInt N;
    Cert sum;        // enclosure of sum_{r<=N} psi(r) * ln(1/psi(r))
    Divergence tag;  // analytic verdict for the family, unknown when budgeted
};

// Analytic divergence tag for the log-weighted series.  Note that this
// differs from the plain-series tag: psi(r) = C/(r log(r+1)) has a
// convergent plain sum but a divergent log-weighted one.
inline Divergence gallagher_tag(const ApproxFunction& psi) {
    if (auto* c = std::get_if<ApproxFunction::Constant>(&psi.kind()))
        return c->c < 1 ? Divergence::diverges : Divergence::unknown;
    if (auto* p = std::get_if<ApproxFunction::Power>(&psi.kind()))
        return p->s > 1 ? Divergence::converges : Divergence::diverges;
    if (std::get_if<ApproxFunction::LogHarmonic>(&psi.kind())) return Divergence::diverges;
    return Divergence::unknown;
}

// Partial sum of psi(r) * ln(1/psi(r)) with a certified error bar.  Terms
// are evaluated in floating point; the error accumulator charges each term
// its rounding slack of a few ULPs plus the derivative-weighted width of
// the psi enclosure, so the returned interval is a genuine enclosure.
inline GallagherReport gallagher_sum(const ApproxFunction& psi, const BigInt& N,
                                     std::uint64_t step_budget = std::uint64_t(1) << 22) {
    if (N < 1) throw invalid_parameter("gallagher_sum: N must be >= 1");
    if (N > BigInt(step_budget)) throw budget_exhausted("gallagher_sum: N exceeds step budget");
    GallagherReport rep;
    rep.N = N;
    rep.tag = gallagher_tag(psi);

    double sum = 0, err = 0;
    std::uint64_t n = N.convert_to<std::uint64_t>();
    for (std::uint64_t r = 1; r <= n; ++r) {
        Cert t = psi.value(BigInt(r));
        if (t.lo() <= 0 || t.hi() > 1)
            throw invalid_parameter("gallagher_sum: needs 0 < psi(r) <= 1 on the range");
        double mid = to_double(t.v);
        double width = to_double(t.e) + 1e-300;
        double lg = std::log(1.0 / mid);
        double term = mid * lg;
        sum += term;
        // |d/dt (t ln(1/t))| = |ln(1/t) - 1|; rounding slack covers log(),
        // the multiply, and the running addition.
        err += width * (std::abs(lg - 1.0) + 1.0) + (std::abs(term) + std::abs(sum)) * 1e-14;
    }
    rep.sum = cert_from_bounds(Rat(sum - err), Rat(sum + err));
    return rep;
}

}  // namespace twistlab
