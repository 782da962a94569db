#pragma once

// Approximating functions: positive non-increasing maps on the naturals,
// with partial-sum queries and the refinement chain psi0..psi4 built from
// witness sequences and divergence bookkeeping.

#include "twistlab/numeric.hpp"
#include "twistlab/realnum.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace twistlab {

struct budget_exhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct no_witness : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Divergence { diverges, converges, unknown };

inline const char* divergence_name(Divergence d) {
    switch (d) {
        case Divergence::diverges: return "diverges";
        case Divergence::converges: return "converges";
        default: return "unknown";
    }
}

// Weights (i, j): positive rationals with i + j = 1.
struct Weights {
    Rat i, j;

    Weights(Rat i_, Rat j_) : i(std::move(i_)), j(std::move(j_)) {
        if (i <= 0 || j <= 0 || i + j != 1)
            throw invalid_parameter("weights must satisfy i, j > 0 and i + j = 1");
    }
    Rat min() const { return i < j ? i : j; }
    Rat max() const { return i > j ? i : j; }

    // a* = 2^(-1/max), a_* = 2^(-1/min)
    Cert a_star(unsigned bits = 96) const { return pow_cert(Rat(2), Rat(-1) / max(), bits); }
    Cert a_lower(unsigned bits = 96) const { return pow_cert(Rat(2), Rat(-1) / min(), bits); }
};

// One record (q_k, c_k = 1/m_k^3, n_k = q_k * m_k) certifying a failure of
// (i,j)-badness at scale q_k.
struct WitnessEntry {
    BigInt q;  // > 0, strictly increasing
    BigInt m;  // >= 2; c = 1/m^3
    BigInt n;  // q * m

    Rat c() const { return Rat(1) / Rat(m * m * m); }
};

struct WitnessSequence {
    std::vector<WitnessEntry> entries;

    std::size_t size() const { return entries.size(); }
    const WitnessEntry& operator[](std::size_t k) const { return entries[k]; }

    // Structural invariants: growth, separation ratio, integer c^(-1/3).
    void check(const Weights& w) const {
        if (entries.size() < 2) throw no_witness("witness sequence needs at least two entries");
        Cert ratio = pow_cert(Rat(2), Rat(3) / (2 * w.min()), 96);
        for (std::size_t k = 0; k < entries.size(); ++k) {
            const auto& e = entries[k];
            if (e.q <= 0 || e.m < 2 || e.n != e.q * e.m)
                throw invalid_parameter("witness entry malformed");
            if (e.c() >= 1) throw invalid_parameter("witness entry has c >= 1");
            if (k > 0) {
                const auto& p = entries[k - 1];
                if (e.q <= p.q || e.n <= p.n)
                    throw invalid_parameter("witness q_k / n_k not strictly increasing");
                // c_k > 2^(3/(2 min)) c_{k+1}, certified
                if (!(p.c() > ratio.hi() * e.c()))
                    throw invalid_parameter("witness separation ratio violated");
            }
        }
    }

    // Badness-failure certificate: max{||q x1||^(1/i), ||q x2||^(1/j)} < c/q,
    // checked with certified margin.  Returns the smallest margin found.
    Rat certify(const RealSource& x1, const RealSource& x2, const Weights& w,
                unsigned bits = 128) const {
        Rat min_margin;
        bool first = true;
        for (const auto& e : entries) {
            Rat cq = e.c() / Rat(e.q);
            for (int t = 0; t < 2; ++t) {
                const RealSource& x = t == 0 ? x1 : x2;
                const Rat& wt = t == 0 ? w.i : w.j;
                Cert d = dist_qx(x, e.q, bits);
                // ||q x_t||^(1/wt) < c/q  <=>  ||q x_t|| < (c/q)^wt
                Cert thr = pow_cert(cq, wt, bits);
                Rat margin = thr.lo() - d.hi();
                if (margin <= 0)
                    throw invalid_parameter("witness badness-failure margin non-positive");
                if (first || margin < min_margin) min_margin = margin;
                first = false;
            }
        }
        return min_margin;
    }
};

class ApproxFunction {
public:
    struct Constant {
        Rat c;
    };
    struct Power {  // C * r^-s
        Rat C, s;
    };
    struct LogHarmonic {  // C / (r * log(r+1))
        Rat C;
    };
    struct Piecewise {
        // value v[i] on (bp[i], bp[i+1]];  bp.front() is 0 or a start point
        std::vector<BigInt> bp;
        std::vector<Rat> v;
        std::optional<Rat> tail;  // constant past bp.back(), if any
    };
    struct Min3 {  // min{psi(r), cap, coef / r}
        std::shared_ptr<const ApproxFunction> psi;
        Cert cap, coef;
    };
    struct Blockify {  // psi1(k) on r <= k; psi1(k^{t+1}) on (k^t, k^{t+1}]
        std::shared_ptr<const ApproxFunction> psi;
        BigInt k;
    };
    struct BlockScale {  // psi(r)/sqrt(k) on (r_{k-1}, r_k]
        std::shared_ptr<const ApproxFunction> psi;
        std::vector<BigInt> rk;  // r_1 < r_2 < ... (r_0 = 0 implicit)
    };
    struct Dilate {  // psi3(s_r * r), s_r = m on (end_{m-1}, end_m]
        std::shared_ptr<const ApproxFunction> psi;
        std::vector<BigInt> ends;
    };
    using Kind = std::variant<Constant, Power, LogHarmonic, Piecewise, Min3, Blockify, BlockScale, Dilate>;

    ApproxFunction(Kind k, Divergence tag, std::string note)
        : kind_(std::move(k)), tag_(tag), note_(std::move(note)) {}

    static ApproxFunction constant(Rat c) {
        if (c <= 0) throw invalid_parameter("approx function must be strictly positive");
        return {Constant{std::move(c)}, Divergence::diverges, "constant"};
    }
    static ApproxFunction power(Rat C, Rat s) {
        if (C <= 0 || s < 0) throw invalid_parameter("power family needs C > 0, s >= 0");
        Divergence d = s <= 1 ? Divergence::diverges : Divergence::converges;
        return {Power{std::move(C), std::move(s)}, d, "power"};
    }
    static ApproxFunction log_harmonic(Rat C) {
        if (C <= 0) throw invalid_parameter("log-harmonic family needs C > 0");
        return {LogHarmonic{std::move(C)}, Divergence::converges, "log-harmonic"};
    }
    static ApproxFunction piecewise(std::vector<BigInt> bp, std::vector<Rat> v,
                                    std::optional<Rat> tail = std::nullopt,
                                    Divergence tag = Divergence::unknown,
                                    std::string note = "piecewise") {
        if (bp.size() != v.size() + 1) throw invalid_parameter("piecewise: |bp| must be |v|+1");
        for (std::size_t i = 0; i + 1 < bp.size(); ++i)
            if (bp[i] >= bp[i + 1]) throw invalid_parameter("piecewise: breakpoints must increase");
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (v[i] <= 0) throw invalid_parameter("piecewise: values must be positive");
            if (i > 0 && v[i] > v[i - 1]) throw invalid_parameter("piecewise: values must be non-increasing");
        }
        if (tail && (*tail <= 0 || (!v.empty() && *tail > v.back())))
            throw invalid_parameter("piecewise: bad tail value");
        return {Piecewise{std::move(bp), std::move(v), std::move(tail)}, tag, std::move(note)};
    }

    Divergence divergence() const { return tag_; }
    const std::string& note() const { return note_; }
    const Kind& kind() const { return kind_; }

    // psi(r), certified (exact whenever the construction is rational).
    Cert value(const BigInt& r) const {
        if (r < 1) throw invalid_parameter("approx function evaluated at r < 1");
        if (auto* c = std::get_if<Constant>(&kind_)) return Cert(c->c);
        if (auto* p = std::get_if<Power>(&kind_)) {
            if (rat_den(p->s) == 1)
                return Cert(p->C / Rat(pow_big(r, p->s.convert_to<unsigned>())));
            return pow_cert(Rat(r), Rat(-p->s), 96) * Cert(p->C);
        }
        if (auto* lh = std::get_if<LogHarmonic>(&kind_)) {
            Cert lg = log_cert(Rat(r + 1));
            Rat lo = lh->C / (Rat(r) * lg.hi());
            Rat hi = lh->C / (Rat(r) * lg.lo());
            return cert_from_bounds(lo, hi);
        }
        if (auto* pw = std::get_if<Piecewise>(&kind_)) {
            if (r <= pw->bp.front())
                throw invalid_parameter("piecewise: query before first breakpoint");
            for (std::size_t i = 0; i + 1 < pw->bp.size(); ++i)
                if (r <= pw->bp[i + 1]) return Cert(pw->v[i]);
            if (pw->tail) return Cert(*pw->tail);
            throw budget_exhausted("piecewise: query beyond materialized breakpoints");
        }
        if (auto* m3 = std::get_if<Min3>(&kind_)) {
            Cert a = m3->psi->value(r);
            Cert b = m3->cap;
            Cert c = m3->coef * (Rat(1) / Rat(r));
            return cert_min(cert_min(a, b), c);
        }
        if (auto* bl = std::get_if<Blockify>(&kind_)) {
            if (r <= bl->k) return bl->psi->value(bl->k);
            BigInt kt = bl->k;
            while (kt * bl->k < r) kt *= bl->k;
            return bl->psi->value(kt * bl->k);
        }
        if (auto* bs = std::get_if<BlockScale>(&kind_)) {
            std::size_t blk = block_index(bs->rk, r);
            Cert scale = root_cert(Rat(1) / Rat(BigInt(blk + 1)), 2, 96);
            return bs->psi->value(r) * scale;
        }
        const auto& dl = std::get<Dilate>(kind_);
        std::size_t blk = block_index(dl.ends, r);
        BigInt s = blk + 1;
        return dl.psi->value(s * r);
    }

    // s_r for a psi4-style function (1 elsewhere).
    BigInt dilation(const BigInt& r) const {
        if (auto* dl = std::get_if<Dilate>(&kind_)) return BigInt(block_index(dl->ends, r) + 1);
        return 1;
    }

private:
    static Cert cert_min(const Cert& a, const Cert& b) {
        Rat lo = a.lo() < b.lo() ? a.lo() : b.lo();
        Rat hi = a.hi() < b.hi() ? a.hi() : b.hi();
        return cert_from_bounds(lo, hi);
    }

    static std::size_t block_index(const std::vector<BigInt>& ends, const BigInt& r) {
        // smallest index with r <= ends[idx]
        std::size_t lo = 0, hi = ends.size();
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (r <= ends[mid])
                hi = mid;
            else
                lo = mid + 1;
        }
        if (lo == ends.size()) throw budget_exhausted("query beyond materialized blocks");
        return lo;
    }

    Kind kind_;
    Divergence tag_;
    std::string note_;
};

using PsiPtr = std::shared_ptr<const ApproxFunction>;

inline PsiPtr make_psi(ApproxFunction f) { return std::make_shared<const ApproxFunction>(std::move(f)); }

// Sum_{r=1}^{N} psi(r): exact blockwise for piecewise-constant shapes,
// certified term-by-term otherwise (dyadic accumulators, outward rounding).
inline Cert partial_sum(const ApproxFunction& psi, const BigInt& N,
                        std::uint64_t step_budget = (1u << 22)) {
    if (N < 1) return Cert(Rat(0));
    if (auto* c = std::get_if<ApproxFunction::Constant>(&psi.kind())) return Cert(c->c * Rat(N));
    if (auto* pw = std::get_if<ApproxFunction::Piecewise>(&psi.kind())) {
        if (N <= pw->bp.front() || pw->bp.front() != 0)
            throw invalid_parameter("partial_sum: piecewise domain must start at 0");
        Rat total = 0;
        for (std::size_t i = 0; i < pw->v.size(); ++i) {
            BigInt lo = pw->bp[i], hi = pw->bp[i + 1];
            if (N <= lo) return Cert(total);
            BigInt cnt = (N < hi ? N : hi) - lo;
            total += Rat(cnt) * pw->v[i];
        }
        if (N > pw->bp.back()) {
            if (!pw->tail) throw budget_exhausted("partial_sum beyond materialized breakpoints");
            total += Rat(N - pw->bp.back()) * *pw->tail;
        }
        return Cert(total);
    }
    if (auto* bl = std::get_if<ApproxFunction::Blockify>(&psi.kind())) {
        // constant on (k^t, k^{t+1}]: O(log N) inner evaluations
        Cert total = Cert(Rat(0));
        BigInt lo = 0, hi = bl->k;
        while (lo < N) {
            BigInt upto = N < hi ? N : hi;
            total = total + bl->psi->value(hi) * Rat(upto - lo);
            lo = hi;
            hi *= bl->k;
        }
        return total;
    }
    if (N > BigInt(step_budget))
        throw budget_exhausted("partial_sum: term count exceeds step budget");
    // dyadic accumulation at 2^-96
    const unsigned bits = 96;
    BigInt acc_lo = 0, acc_hi = 0;
    std::uint64_t n = N.convert_to<std::uint64_t>();
    for (std::uint64_t r = 1; r <= n; ++r) {
        Cert v = psi.value(BigInt(r));
        acc_lo += scaled_floor(v.lo(), bits);
        acc_hi += scaled_floor(v.hi(), bits) + 1;
    }
    return cert_from_bounds(dyadic(acc_lo, bits), dyadic(acc_hi, bits));
}

// --- witness extraction -----------------------------------------------

// Thin raw records to a subsequence satisfying the separation ratio and the
// monotonicity of q and n.  Walking backward from the smallest c keeps the
// deepest records, which the later chain depends on.
inline std::vector<WitnessEntry> thin_records(const std::vector<WitnessEntry>& raw,
                                              const Rat& ratio_hi) {
    std::vector<WitnessEntry> kept;
    for (auto it = raw.rbegin(); it != raw.rend(); ++it) {
        if (kept.empty()) {
            kept.push_back(*it);
            continue;
        }
        const auto& next = kept.back();
        if (it->q < next.q && it->n < next.n && it->c() > ratio_hi * next.c())
            kept.push_back(*it);
    }
    std::reverse(kept.begin(), kept.end());
    return kept;
}

// Greedy record scan over 1 <= q <= Q; raw records rounded up to 1/m^3 and
// thinned so the separation condition holds.
inline WitnessSequence extract_witness(const RealSource& x1, const RealSource& x2,
                                       const Weights& w, const BigInt& Q,
                                       const Rat& max_c = Rat(1)) {
    if (Q < 1) throw invalid_parameter("extract_witness: Q must be >= 1");
    unsigned bits = 64 + bit_length(Q);
    Cert ratio = pow_cert(Rat(2), Rat(3) / (2 * w.min()), 96);
    WitnessSequence out;
    Rat best_hi;  // smallest certified upper bound on v_q so far
    bool have_best = false;
    std::uint64_t qmax = Q.convert_to<std::uint64_t>();
    for (std::uint64_t qi = 1; qi <= qmax; ++qi) {
        BigInt q(qi);
        Cert d1 = dist_qx(x1, q, bits);
        Cert d2 = dist_qx(x2, q, bits);
        if (d1.lo() <= 0 || d2.lo() <= 0) continue;  // rational resonance: not a usable record
        Cert p1 = pow_cert(cert_from_bounds(d1.lo(), d1.hi()), 1 / w.i, bits);
        Cert p2 = pow_cert(cert_from_bounds(d2.lo(), d2.hi()), 1 / w.j, bits);
        Rat vlo = (p1.lo() > p2.lo() ? p1.lo() : p2.lo()) * qi;
        Rat vhi = (p1.hi() > p2.hi() ? p1.hi() : p2.hi()) * qi;
        if (have_best && vhi >= best_hi) continue;
        // round UP to c = 1/m^3 with m = floor(v^(-1/3)); certified via vhi
        Rat inv = 1 / vhi;
        BigInt m = nth_root_floor(rat_num(inv) / rat_den(inv) > 0 ? floor_div(rat_num(inv), rat_den(inv)) : BigInt(0), 3);
        while (m >= 2 && Rat(1) / Rat(m * m * m) <= vhi) --m;  // ensure strict c > v
        if (m < 2) continue;
        Rat c = Rat(1) / Rat(m * m * m);
        if (c >= max_c || c >= 1) continue;
        out.entries.push_back({q, m, q * m});
        best_hi = vhi;
        have_best = true;
    }
    out.entries = thin_records(out.entries, ratio.hi());
    if (out.entries.size() < 2) throw no_witness("fewer than 2 witness entries below scan limit");
    out.check(w);
    return out;
}

// Analytic witness from a Liouville pair: no scan, c_k derived from the
// recorded tail bounds.  Leading entries whose rounded c would reach 1 are
// dropped.
inline WitnessSequence witness_from_liouville(const LiouvillePair& lp, const Weights& w) {
    Cert ratio = pow_cert(Rat(2), Rat(3) / (2 * w.min()), 96);
    WitnessSequence out;
    for (std::size_t k = 0; k < lp.q.size(); ++k) {
        // v = q * B^(1/max{i,j}) upper bound (the binding coordinate)
        Cert bp = pow_cert(lp.bound[k], 1 / w.max(), 160);
        Rat vhi = bp.hi() * Rat(lp.q[k]);
        if (vhi >= 1) continue;
        Rat inv = 1 / vhi;
        BigInt m = nth_root_floor(floor_div(rat_num(inv), rat_den(inv)), 3);
        while (m >= 2 && Rat(1) / Rat(m * m * m) <= vhi) --m;
        if (m < 2) continue;
        out.entries.push_back({lp.q[k], m, lp.q[k] * m});
    }
    out.entries = thin_records(out.entries, ratio.hi());
    if (out.entries.size() < 2) throw no_witness("liouville instance yielded fewer than 2 entries");
    out.check(w);
    return out;
}

// A compact engineered instance: a rational pair with prescribed witness
// denominators q_{k+1} = M_k q_k kept small enough for exact geometry.
struct EngineeredInstance {
    RealSource x1, x2;
    WitnessSequence witness;
};

inline EngineeredInstance engineered_instance(const Weights& w, unsigned K) {
    if (K < 2) throw invalid_parameter("engineered_instance: need K >= 2");
    // m_1 = 2; m_{k+1} minimal with m^3 strictly past the separation ratio
    Cert ratio = pow_cert(Rat(2), Rat(3) / (2 * w.min()), 96);
    std::vector<BigInt> ms{2};
    while (ms.size() < K + 1) {
        BigInt m = ms.back() + 1;
        while (!(Rat(1) / Rat(ms.back() * ms.back() * ms.back()) >
                 ratio.hi() * (Rat(1) / Rat(m * m * m))))
            ++m;
        ms.push_back(m);
    }
    std::vector<BigInt> qs{1};
    std::vector<BigInt> Ms;
    for (unsigned k = 0; k < K; ++k) {
        // B_k = 4/M_k must sit strictly below (c_k/q_k)^max{i,j}
        Rat cq = (Rat(1) / Rat(ms[k] * ms[k] * ms[k])) / Rat(qs[k]);
        Cert thr = pow_cert(cq, w.max(), 160);
        BigInt M = floor_div(rat_num(Rat(4) / thr.lo()), rat_den(Rat(4) / thr.lo())) + 1;
        if (M < 2) M = 2;
        Ms.push_back(M);
        qs.push_back(M * qs[k]);
    }
    // x_t = sum b_{t,k} / q_k over k = 1..K+1 (q_1 = 1 contributes an integer)
    Rat v1 = 0, v2 = 0;
    for (unsigned k = 0; k < qs.size(); ++k) {
        Rat term = Rat(1) / Rat(qs[k]);
        v1 += term;
        v2 += term * Rat(1 + (k % 2));
    }
    v1 = frac_rat(v1);
    v2 = frac_rat(v2);
    EngineeredInstance out{RealSource::rational(v1), RealSource::rational(v2), {}};
    for (unsigned k = 0; k < K; ++k) out.witness.entries.push_back({qs[k], ms[k], qs[k] * ms[k]});
    out.witness.check(w);
    out.witness.certify(out.x1, out.x2, w);
    return out;
}

// --- the psi chain -----------------------------------------------------

// psi0: 1 up to n_1, then |q_{k+1}|^-1 c_{k+1}^(1/3) on (n_k, n_{k+1}].
inline ApproxFunction build_psi0(const WitnessSequence& wit) {
    std::vector<BigInt> bp{0};
    std::vector<Rat> v;
    for (std::size_t k = 0; k < wit.size(); ++k) {
        bp.push_back(wit[k].n);
        v.push_back(k == 0 ? Rat(1) : Rat(1) / Rat(wit[k].q * wit[k].m));
    }
    return ApproxFunction::piecewise(std::move(bp), std::move(v), std::nullopt, Divergence::diverges,
                                     "psi0: adversarial staircase from witness sequence; each "
                                     "complete block sums to 1 - (q_k/q_{k+1})(c_{k+1}/c_k)^{1/3} > 1/2");
}

// Exact per-block sum of psi0: 1 - (q_k/q_{k+1}) * (m_k/m_{k+1}).
inline Rat psi0_block_sum(const WitnessSequence& wit, std::size_t k) {
    if (k + 1 >= wit.size()) throw invalid_parameter("psi0_block_sum: block index out of range");
    return 1 - Rat(wit[k].q) * Rat(wit[k].m) / (Rat(wit[k + 1].q) * Rat(wit[k + 1].m));
}

// psi1(r) = min{psi(r), a*/2, a_* c / (2r)}.
inline ApproxFunction refine_psi1(PsiPtr psi, const Rat& c, const Weights& w) {
    if (c <= 0 || c >= 1) throw invalid_parameter("refine_psi1: badness constant must be in (0,1)");
    Cert cap = w.a_star() * Rat(1, 2);
    Cert coef = w.a_lower() * (c / 2);
    Divergence tag = psi->divergence();  // min with a divergent envelope
    return {ApproxFunction::Min3{std::move(psi), cap, coef}, tag,
            "psi1: refinement by a*/2 and the a_* c/(2r) envelope"};
}

// psi2: block-constant coarsening on powers of k, valid for k > 4.
inline ApproxFunction build_psi2(PsiPtr psi1, const BigInt& k) {
    if (k <= 4) throw invalid_parameter("build_psi2: k must exceed 4");
    Divergence tag = psi1->divergence();
    return {ApproxFunction::Blockify{std::move(psi1), k}, tag,
            "psi2: constant on (k^t, k^{t+1}] blocks"};
}

// psi3: blocks (r_{k-1}, r_k] with sum psi >= k, scaled by 1/sqrt(k).
inline ApproxFunction build_psi3(PsiPtr psi, unsigned blocks, std::uint64_t step_budget = (1u << 22)) {
    if (psi->divergence() != Divergence::diverges)
        throw invalid_parameter("build_psi3: input must be divergent");
    std::vector<BigInt> rk;
    const unsigned bits = 96;
    BigInt acc_lo = 0;  // certified lower bound of the running block sum
    std::uint64_t r = 0;
    for (unsigned k = 1; k <= blocks; ++k) {
        BigInt target = BigInt(k) << bits;
        acc_lo = 0;
        while (acc_lo < target) {
            if (++r > step_budget)
                throw budget_exhausted("build_psi3: step budget exhausted before block " +
                                       std::to_string(k));
            acc_lo += scaled_floor(psi->value(BigInt(r)).lo(), bits);
        }
        rk.push_back(BigInt(r));
    }
    return {ApproxFunction::BlockScale{std::move(psi), std::move(rk)}, Divergence::diverges,
            "psi3: per-block 1/sqrt(k) scaling; block sums certify divergence"};
}

// psi4(r) = psi3(s_r r): blockwise diagonal with s_r = m until the block's
// sum of psi3(m r) exceeds 1.
inline ApproxFunction build_psi4(PsiPtr psi3, unsigned blocks, std::uint64_t step_budget = (1u << 22)) {
    if (psi3->divergence() != Divergence::diverges)
        throw invalid_parameter("build_psi4: input must be divergent");
    std::vector<BigInt> ends;
    const unsigned bits = 96;
    std::uint64_t r = 0;
    for (unsigned m = 1; m <= blocks; ++m) {
        BigInt acc_lo = 0;
        BigInt target = BigInt(1) << bits;
        while (acc_lo <= target) {
            if (++r > step_budget)
                throw budget_exhausted("build_psi4: step budget exhausted before block " +
                                       std::to_string(m));
            acc_lo += scaled_floor(psi3->value(BigInt(m) * r).lo(), bits);
        }
        ends.push_back(BigInt(r));
    }
    return {ApproxFunction::Dilate{std::move(psi3), std::move(ends)}, Divergence::diverges,
            "psi4: diagonal dilation psi3(s_r r), s_r non-decreasing and unbounded"};
}

// Materialize further blocks of a psi3/psi4-style function.  Inputs are
// immutable; the extension is returned as a new value.
inline ApproxFunction extend(const ApproxFunction& f, unsigned extra_blocks,
                             std::uint64_t step_budget = (1u << 22)) {
    const unsigned bits = 96;
    if (auto* bs = std::get_if<ApproxFunction::BlockScale>(&f.kind())) {
        auto rk = bs->rk;
        std::uint64_t r = rk.empty() ? 0 : rk.back().convert_to<std::uint64_t>();
        for (unsigned t = 0; t < extra_blocks; ++t) {
            BigInt k = BigInt(rk.size() + 1);
            BigInt target = k << bits, acc_lo = 0;
            while (acc_lo < target) {
                if (++r > step_budget) throw budget_exhausted("extend: step budget exhausted");
                acc_lo += scaled_floor(bs->psi->value(BigInt(r)).lo(), bits);
            }
            rk.push_back(BigInt(r));
        }
        return {ApproxFunction::BlockScale{bs->psi, std::move(rk)}, f.divergence(), f.note()};
    }
    if (auto* dl = std::get_if<ApproxFunction::Dilate>(&f.kind())) {
        auto ends = dl->ends;
        std::uint64_t r = ends.empty() ? 0 : ends.back().convert_to<std::uint64_t>();
        for (unsigned t = 0; t < extra_blocks; ++t) {
            BigInt m = BigInt(ends.size() + 1);
            BigInt target = BigInt(1) << bits, acc_lo = 0;
            while (acc_lo <= target) {
                if (++r > step_budget) throw budget_exhausted("extend: step budget exhausted");
                acc_lo += scaled_floor(dl->psi->value(m * r).lo(), bits);
            }
            ends.push_back(BigInt(r));
        }
        return {ApproxFunction::Dilate{dl->psi, std::move(ends)}, f.divergence(), f.note()};
    }
    throw invalid_parameter("extend: function kind has no block table");
}

}  // namespace twistlab
