#pragma once

// The two adversarial experiments: the covering/summability pipeline for
// psi0 (blocks R*(k), S*(k)) and the density-counting pipeline for psi2
// (levels R_t, 2R_t, J_{t+1}, L_{t+1}).

#include "twistlab/badness.hpp"
#include "twistlab/torusgeo.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace twistlab {

namespace detail {

// Cached orbit q x mod 1 for 1 <= q <= N: exact for rational sources,
// fixed-point dyadic enclosures (error N * 2^-B) otherwise.
class Orbit {
public:
    Orbit(const RealSource& x, std::uint64_t N, unsigned bits) : N_(N) {
        if (auto r = x.as_rational()) {
            exact_ = true;
            rat_ = *r;
            den_ = rat_den(rat_);
            num_ = rat_num(rat_) % den_;
            if (num_ < 0) num_ += den_;
        } else {
            B_ = bits + bit_length(BigInt(N)) + 8;
            Cert v = x.eval(B_ + 8);
            // dyadic floor of the lower bound; upper bound one ulp higher
            A_ = scaled_floor(v.lo(), B_);
            slack_ = scaled_floor(v.hi(), B_) - A_ + 1;
        }
    }

    // q x mod 1 for q >= 1 (enclosure may have width; bounds kept in [0, 2))
    Cert frac(std::uint64_t n) const {
        if (exact_) {
            BigInt r = (BigInt(n) * num_) % den_;
            return Cert(Rat(r) / Rat(den_));
        }
        BigInt lo_num = BigInt(n) * A_;
        BigInt hi_num = lo_num + BigInt(n) * slack_;
        BigInt whole = lo_num >> B_;
        lo_num -= whole << B_;
        hi_num -= whole << B_;
        return cert_from_bounds(dyadic(lo_num, B_), dyadic(hi_num, B_));
    }

    // center of q x mod 1 for signed q != 0
    Cert center(std::int64_t q) const {
        if (exact_) {
            std::uint64_t a = q > 0 ? std::uint64_t(q) : std::uint64_t(-q);
            BigInt r = (BigInt(a) * num_) % den_;
            if (q < 0 && r != 0) r = den_ - r;
            return Cert(Rat(r) / Rat(den_));
        }
        if (q > 0) return wrap(frac(static_cast<std::uint64_t>(q)));
        Cert f = frac(static_cast<std::uint64_t>(-q));
        return wrap(cert_from_bounds(1 - f.hi(), 1 - f.lo()));
    }

    Cert dist(std::uint64_t n) const { return dist_to_int(frac(n)); }

    std::uint64_t size() const { return N_; }

private:
    static Cert wrap(const Cert& v) {
        BigInt f = floor_rat(v.v);
        return cert_from_bounds(v.lo() - f, v.hi() - f);
    }
    bool exact_ = false;
    Rat rat_;
    BigInt num_, den_;
    BigInt A_, slack_;
    unsigned B_ = 0;
    std::uint64_t N_ = 0;
};

// dist table as directed-rounded doubles for fast pair scans
struct DistTable {
    std::vector<double> lo, hi;
    explicit DistTable(const Orbit& orb) {
        std::uint64_t N = orb.size();
        lo.resize(N + 1, 0.0);
        hi.resize(N + 1, 0.0);
        for (std::uint64_t n = 1; n <= N; ++n) {
            Cert d = orb.dist(n);
            double l = to_double(d.lo()), h = to_double(d.hi());
            lo[n] = l - std::abs(l) * 1e-14 - 1e-300;
            hi[n] = h + std::abs(h) * 1e-14 + 1e-300;
        }
    }
};

}  // namespace detail

// --- adversary pipeline (psi0 covering and summable bound) --------------

struct AdversaryBlock {
    std::size_t k;  // 0-based block index
    std::uint64_t r_count, s_count;
    Cert mu_R, mu_S;
    CoverReport cover;
    bool measure_ok;  // mu_R <= mu_S compatible with enclosures
};

struct AdversaryRun {
    Weights w;
    WitnessSequence wit;
    unsigned K;
    Cert bound;  // 64 c1^(2 min{i,j}/3)
    Cert sum_S;
    std::vector<AdversaryBlock> blocks;
    bool bound_ok;
    Rat bound_margin;  // bound.lo - sum_S.hi
    bool all_covered;
};

inline AdversaryRun run_adversary(const RealSource& x1, const RealSource& x2, const Weights& w,
                                  const WitnessSequence& wit, unsigned K, unsigned bits = 96) {
    if (K > wit.size()) throw invalid_parameter("run_adversary: K exceeds witness length");
    ApproxFunction psi0 = build_psi0(wit);
    AdversaryRun run{w, wit, K, Cert(Rat(0)), Cert(Rat(0)), {}, true, Rat(0), true};
    run.bound = Cert(Rat(64)) * pow_cert(wit[0].c(), 2 * w.min() / 3, bits);
    if (K == 0) {
        run.bound_margin = run.bound.lo();
        return run;
    }
    std::uint64_t nK = wit[K - 1].n.convert_to<std::uint64_t>();
    detail::Orbit o1(x1, nK, bits), o2(x2, nK, bits);
    for (std::size_t k = 0; k < K; ++k) {
        AdversaryBlock blk;
        blk.k = k;
        std::uint64_t qk = wit[k].q.convert_to<std::uint64_t>();
        std::uint64_t nk = wit[k].n.convert_to<std::uint64_t>();
        std::uint64_t nprev = k == 0 ? 0 : wit[k - 1].n.convert_to<std::uint64_t>();
        // S*(k): 2|q_k| enlarged rectangles around q x, |q| <= |q_k|
        Rat nq = Rat(wit[k].n) / Rat(wit[k].q);
        Rat cq = wit[k].c() / Rat(wit[k].q);
        Cert p0nk = psi0.value(wit[k].n);
        Cert H1 = pow_cert(cq, w.i, bits) * nq + pow_cert(p0nk, w.i, bits);
        Cert H2 = pow_cert(cq, w.j, bits) * nq + pow_cert(p0nk, w.j, bits);
        RectCollection S{{}, "S*"};
        for (std::uint64_t q = 1; q <= qk; ++q) {
            for (int sgn : {+1, -1}) {
                TorusRect r;
                r.c1 = o1.center(sgn * static_cast<std::int64_t>(q));
                r.c2 = o2.center(sgn * static_cast<std::int64_t>(q));
                r.h1 = H1;
                r.h2 = H2;
                r.label = BigInt(sgn * static_cast<std::int64_t>(q));
                S.rects.push_back(r);
            }
        }
        // R*(k): rectangles R_psi0(q) for n_{k-1} < |q| <= n_k
        RectCollection R{{}, "R*"};
        Cert pv = psi0.value(wit[k].n);  // psi0 is constant on the block
        Cert h1 = pow_cert(pv, w.i, bits);
        Cert h2 = pow_cert(pv, w.j, bits);
        for (std::uint64_t q = nprev + 1; q <= nk; ++q) {
            Cert qv = psi0.value(BigInt(q));
            Cert g1 = h1, g2 = h2;
            if (!(qv.lo() == pv.lo() && qv.hi() == pv.hi())) {
                g1 = pow_cert(qv, w.i, bits);
                g2 = pow_cert(qv, w.j, bits);
            }
            for (int sgn : {+1, -1}) {
                TorusRect r;
                r.c1 = o1.center(sgn * static_cast<std::int64_t>(q));
                r.c2 = o2.center(sgn * static_cast<std::int64_t>(q));
                r.h1 = g1;
                r.h2 = g2;
                r.label = BigInt(sgn * static_cast<std::int64_t>(q));
                R.rects.push_back(r);
            }
        }
        blk.s_count = S.rects.size();
        blk.r_count = R.rects.size();
        blk.mu_S = union_measure(S);
        blk.mu_R = union_measure(R);
        blk.cover = covering_check(S, wit, k, x1, x2, psi0, w, bits);
        blk.measure_ok = blk.mu_R.lo() <= blk.mu_S.hi();
        if (!blk.cover.covered) run.all_covered = false;
        run.sum_S = run.sum_S + blk.mu_S;
        run.blocks.push_back(std::move(blk));
    }
    run.bound_ok = run.sum_S.hi() <= run.bound.lo();
    run.bound_margin = run.bound.lo() - run.sum_S.hi();
    return run;
}

// --- density pipeline (psi2 counting and measure growth) ----------------

struct DensityLevel {
    unsigned t;               // the level being added produces R_{t+1}
    std::uint64_t j_total;    // 2(k^{t+1} - k^t)
    std::uint64_t hits1, hits2, hits_union;  // possible hits, conservative
    std::uint64_t l_count;                   // certain misses
    Cert mu_Rt, mu_Rt1;
    Cert sum_L_areas;         // 4 sum_{q in L} psi2(|q|)
    Rat count_bound;          // 2k^t + k^{t+1}/2
    Rat l_floor;              // k^{t+1}/2
    bool count_ok, l_ok, diff_ok, diff_strong, disjoint_ok;
};

struct DensityRun {
    Weights w;
    BigInt k;
    unsigned t0, T;
    Rat c;          // empirical badness constant (provenance recorded by caller)
    Cert threshold; // a_* c / 8
    std::vector<DensityLevel> levels;
    std::optional<unsigned> precondition_lost_at;
    PsiPtr psi2;
};

inline DensityRun run_density(const RealSource& x1, const RealSource& x2, const Weights& w,
                              PsiPtr psi, const BigInt& k, unsigned t0, unsigned T, const Rat& c,
                              unsigned bits = 96) {
    if (k <= 4) throw invalid_parameter("run_density: k must exceed 4");
    if (T <= t0) throw invalid_parameter("run_density: need T > t0");
    PsiPtr psi1 = make_psi(refine_psi1(std::move(psi), c, w));
    PsiPtr psi2 = make_psi(build_psi2(psi1, k));
    DensityRun run{w, k, t0, T, c, w.a_lower(bits) * (c / 8), {}, std::nullopt, psi2};
    std::uint64_t ku = k.convert_to<std::uint64_t>();
    auto kpow = [&](unsigned e) {
        std::uint64_t v = 1;
        for (unsigned s = 0; s < e; ++s) v *= ku;
        return v;
    };
    std::uint64_t Nmax = 2 * kpow(T);
    detail::Orbit o1(x1, Nmax, bits), o2(x2, Nmax, bits);
    detail::DistTable d1(o1), d2(o2);
    // per-block doubled thresholds (2 psi2)^i, (2 psi2)^j and plain psi2 halves
    std::vector<Cert> th1, th2, ph1, ph2, p2v;
    for (unsigned s = 0; s <= T; ++s) {
        Cert v = psi2->value(BigInt(kpow(s)));
        p2v.push_back(v);
        th1.push_back(pow_cert(v * Rat(2), w.i, bits));
        th2.push_back(pow_cert(v * Rat(2), w.j, bits));
        ph1.push_back(pow_cert(v, w.i, bits));
        ph2.push_back(pow_cert(v, w.j, bits));
    }
    auto block_of = [&](std::uint64_t q) {  // psi2 block index: value psi1(k^{s}), q in (k^{s-1}, k^s]
        unsigned s = 0;
        std::uint64_t kp = 1;
        while (kp < q) {
            kp *= ku;
            ++s;
        }
        return s == 0 ? 1u : s;  // q <= k uses psi1(k)
    };
    // measure of R_t: union over k^{t0} < |q| <= k^t of R_psi2(q)
    auto measure_R = [&](unsigned t) {
        RectCollection C{{}, "R_t"};
        for (std::uint64_t q = kpow(t0) + 1; q <= kpow(t); ++q) {
            unsigned s = block_of(q);
            for (int sgn : {+1, -1}) {
                TorusRect r;
                r.c1 = o1.center(sgn * static_cast<std::int64_t>(q));
                r.c2 = o2.center(sgn * static_cast<std::int64_t>(q));
                r.h1 = ph1[s];
                r.h2 = ph2[s];
                r.label = BigInt(sgn * static_cast<std::int64_t>(q));
                C.rects.push_back(r);
            }
        }
        return union_measure(C);
    };
    // ambiguity fallback: certified membership test of q' x in R_{2psi2}(q)
    auto cert_member = [&](std::uint64_t diff, unsigned s) {
        Cert a1 = o1.dist(diff), a2 = o2.dist(diff);
        if (a1.hi() <= th1[s].lo() && a2.hi() <= th2[s].lo()) return 1;   // certainly in
        if (a1.lo() > th1[s].hi() || a2.lo() > th2[s].hi()) return -1;    // certainly out
        return 0;
    };
    Cert mu_prev = measure_R(t0);  // empty range: 0
    for (unsigned t = t0; t < T; ++t) {
        // precondition: mu(R_t) < a_* c / 8; certified crossing terminates
        if (mu_prev.lo() >= run.threshold.hi()) {
            run.precondition_lost_at = t;
            break;
        }
        DensityLevel lv{};
        lv.t = t;
        std::uint64_t klo = kpow(t), khi = kpow(t + 1);
        lv.j_total = 2 * (khi - klo);
        lv.count_bound = Rat(2) * Rat(klo) + Rat(khi) / 2;
        lv.l_floor = Rat(khi) / 2;
        // threshold splitting 2R_t by 2 psi2(|q|) vs a_* c / (2 k^{t+1})
        Cert split = w.a_lower(bits) * (c / (2 * Rat(khi)));
        std::vector<double> t1l(T + 1), t1h(T + 1), t2l(T + 1), t2h(T + 1);
        std::vector<char> sub1(T + 1), sub2(T + 1);
        for (unsigned s = 0; s <= T; ++s) {
            t1l[s] = to_double(th1[s].lo()) * (1 - 1e-14);
            t1h[s] = to_double(th1[s].hi()) * (1 + 1e-14);
            t2l[s] = to_double(th2[s].lo()) * (1 - 1e-14);
            t2h[s] = to_double(th2[s].hi()) * (1 + 1e-14);
            sub1[s] = 2 * p2v[s].hi() < split.lo();
            sub2[s] = 2 * p2v[s].lo() >= split.hi();
        }
        // existing rect q-range of 2R_t: k^{t0} < |q| <= k^t, with signs
        std::vector<std::int64_t> L;
        std::uint64_t hits1 = 0, hits2 = 0, hitsU = 0;
        for (std::uint64_t qp = klo + 1; qp <= khi; ++qp) {
            for (int sgn : {+1, -1}) {
                std::int64_t qsig = sgn * static_cast<std::int64_t>(qp);
                bool in1 = false, in2 = false, certain_out = true;
                for (std::uint64_t q = kpow(t0) + 1; q <= klo && !(in1 && in2); ++q) {
                    unsigned s = block_of(q);
                    for (int sg2 : {+1, -1}) {
                        std::int64_t diff = qsig - sg2 * static_cast<std::int64_t>(q);
                        std::uint64_t n = static_cast<std::uint64_t>(diff < 0 ? -diff : diff);
                        int verdict;
                        if (d1.hi[n] <= t1l[s] && d2.hi[n] <= t2l[s])
                            verdict = 1;
                        else if (d1.lo[n] > t1h[s] || d2.lo[n] > t2h[s])
                            verdict = -1;
                        else
                            verdict = cert_member(n, s);
                        if (verdict >= 0) {
                            certain_out = false;
                            if (sub1[s]) {
                                in1 = true;
                            } else if (sub2[s]) {
                                in2 = true;
                            } else {
                                // split straddles the block value: count both, conservative
                                in1 = in2 = true;
                            }
                        }
                    }
                }
                if (in1) ++hits1;
                if (in2) ++hits2;
                if (in1 || in2) ++hitsU;
                if (certain_out) L.push_back(qsig);
            }
        }
        lv.hits1 = hits1;
        lv.hits2 = hits2;
        lv.hits_union = hitsU;
        lv.l_count = L.size();
        lv.count_ok = Rat(hitsU) <= lv.count_bound;
        lv.l_ok = Rat(L.size()) >= lv.l_floor;
        // L-rectangle disjointness (all share the block-(t+1) half-widths)
        unsigned st = t + 1;
        double w1 = 2 * to_double(ph1[st].hi()) * (1 + 1e-14);
        double w2 = 2 * to_double(ph2[st].hi()) * (1 + 1e-14);
        lv.disjoint_ok = true;
        for (std::size_t a = 0; a < L.size() && lv.disjoint_ok; ++a) {
            for (std::size_t b = a + 1; b < L.size(); ++b) {
                std::int64_t diff = L[b] - L[a];
                std::uint64_t n = static_cast<std::uint64_t>(diff < 0 ? -diff : diff);
                bool sep = d1.lo[n] >= w1 || d2.lo[n] >= w2;
                if (!sep) {
                    // certified recheck
                    Cert a1 = o1.dist(n), a2 = o2.dist(n);
                    bool cert_sep = a1.lo() >= 2 * ph1[st].hi() || a2.lo() >= 2 * ph2[st].hi();
                    if (!cert_sep) {
                        lv.disjoint_ok = false;
                        break;
                    }
                }
            }
        }
        lv.sum_L_areas = p2v[st] * Rat(4 * BigInt(L.size()));  // each rect has area 4 psi2
        lv.mu_Rt = mu_prev;
        lv.mu_Rt1 = measure_R(t + 1);
        // mu(R_{t+1} \ R_t) >= sum of L areas (nested union difference);
        // diff_ok certifies the inequality is not violated, diff_strong
        // certifies it holds with margin
        lv.diff_strong = lv.mu_Rt1.lo() - lv.mu_Rt.hi() >= lv.sum_L_areas.hi();
        lv.diff_ok = lv.mu_Rt1.hi() - lv.mu_Rt.lo() >= lv.sum_L_areas.lo();
        mu_prev = lv.mu_Rt1;
        run.levels.push_back(lv);
        if (t + 1 == T && mu_prev.lo() >= run.threshold.hi()) run.precondition_lost_at = T;
    }
    return run;
}

// --- shift check for the Kurzweil density lemma -------------------------

struct ShiftReport {
    BigInt qprime;
    std::uint64_t Qtest;
    std::optional<std::uint64_t> threshold;  // least q0: ratio < 1 for q0 <= q <= Qtest
    std::uint64_t checked = 0;
    bool containment_ok = true;  // psi4(|q|) <= psi(|q+q'|) at sampled q >= threshold
};

inline ShiftReport density_shift_check(const ApproxFunction& psi, const ApproxFunction& psi4,
                                       const BigInt& qprime, std::uint64_t Qtest) {
    ShiftReport rep{qprime, Qtest, std::nullopt, 0, true};
    std::uint64_t qp = abs_big(qprime).convert_to<std::uint64_t>();
    std::optional<std::uint64_t> cand;
    for (std::uint64_t q = 1; q <= Qtest; ++q) {
        Cert num = psi4.value(BigInt(q));
        Cert den = psi.value(BigInt(q) + qp);
        ++rep.checked;
        bool lt = num.hi() < den.lo();
        if (lt) {
            if (!cand) cand = q;
        } else {
            cand = std::nullopt;
        }
    }
    rep.threshold = cand;
    if (cand) {
        // containment form: y in R_psi4(q) implies y + q' x in R_psi(q+q'),
        // which reduces to the same pointwise inequality on each axis
        for (std::uint64_t q = *cand; q <= Qtest; q += (Qtest - *cand) / 16 + 1) {
            Cert num = psi4.value(BigInt(q));
            Cert den = psi.value(BigInt(q) + qp);
            if (!(num.hi() <= den.lo())) rep.containment_ok = false;
        }
    }
    return rep;
}

}  // namespace twistlab
