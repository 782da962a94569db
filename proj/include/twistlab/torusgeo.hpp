#pragma once

// Exact geometry on the 2-torus: labelled rectangles, wrap-splitting,
// union measure via a segment-tree plane sweep over integerized
// coordinates, covering checks and the anisotropic doubling map.

#include "twistlab/psi.hpp"

#include <algorithm>
#include <future>
#include <optional>
#include <string>
#include <vector>

namespace twistlab {

struct TorusRect {
    Cert c1, c2;  // center, values in [0,1)
    Cert h1, h2;  // half-widths, > 0
    std::optional<BigInt> label;

    bool full_axis1() const { return 2 * h1.lo() >= 1; }
    bool full_axis2() const { return 2 * h2.lo() >= 1; }

    Cert measure() const {
        auto side = [](const Cert& h) {
            Rat lo = 2 * h.lo() < 1 ? 2 * h.lo() : Rat(1);
            Rat hi = 2 * h.hi() < 1 ? 2 * h.hi() : Rat(1);
            return cert_from_bounds(lo, hi);
        };
        return side(h1) * side(h2);
    }
};

struct RectCollection {
    std::vector<TorusRect> rects;
    std::string tag;
};

// R_psi(q): centered at (q x1, q x2) mod 1 with half-widths psi(|q|)^i, psi(|q|)^j.
inline TorusRect rect_for(const BigInt& q, const RealSource& x1, const RealSource& x2,
                          const ApproxFunction& psi, const Weights& w, unsigned bits = 96) {
    if (q == 0) throw invalid_parameter("rect_for: q must be nonzero");
    Cert p = psi.value(abs_big(q));
    TorusRect r;
    r.c1 = frac_mult(x1, q, bits);
    r.c2 = frac_mult(x2, q, bits);
    r.h1 = pow_cert(p, w.i, bits);
    r.h2 = pow_cert(p, w.j, bits);
    r.label = q;
    return r;
}

namespace detail {

// Axis interval of the torus, already reduced to start in [0,1).
struct AxisIv {
    Rat a, len;  // [a, a+len), len in (0, 1]
};

// Split [c-h, c+h] mod 1 into 1 or 2 unit-square intervals; empty if len <= 0.
inline std::vector<AxisIv> wrap_axis(const Rat& lo, const Rat& hi) {
    std::vector<AxisIv> out;
    Rat len = hi - lo;
    if (len <= 0) return out;
    if (len >= 1) {
        out.push_back({Rat(0), Rat(1)});
        return out;
    }
    Rat a = frac_rat(lo);
    if (a + len <= 1) {
        out.push_back({a, len});
    } else {
        out.push_back({a, 1 - a});
        out.push_back({Rat(0), a + len - 1});
    }
    return out;
}

struct RatBox {
    Rat x1, x2, y1, y2;
};

// expand = true: outer hull of the certified rect; false: inner core.
inline void append_boxes(std::vector<RatBox>& out, const TorusRect& r, bool expand) {
    Rat xlo = expand ? r.c1.lo() - r.h1.hi() : r.c1.hi() - r.h1.lo();
    Rat xhi = expand ? r.c1.hi() + r.h1.hi() : r.c1.lo() + r.h1.lo();
    Rat ylo = expand ? r.c2.lo() - r.h2.hi() : r.c2.hi() - r.h2.lo();
    Rat yhi = expand ? r.c2.hi() + r.h2.hi() : r.c2.lo() + r.h2.lo();
    auto xs = wrap_axis(xlo, xhi);
    auto ys = wrap_axis(ylo, yhi);
    for (const auto& xi : xs)
        for (const auto& yi : ys)
            out.push_back({xi.a, xi.a + xi.len, yi.a, yi.a + yi.len});
}

// Segment tree over compressed y-coordinates: covered length under >=1 count.
class CoverTree {
public:
    explicit CoverTree(std::vector<BigInt> ys) : ys_(std::move(ys)) {
        std::size_t n = ys_.size() > 1 ? ys_.size() - 1 : 0;
        cnt_.assign(4 * n + 4, 0);
        cov_.assign(4 * n + 4, 0);
        n_ = n;
    }
    void add(const BigInt& y1, const BigInt& y2, int delta) {
        if (n_ == 0) return;
        std::size_t l = idx(y1), r = idx(y2);
        if (l < r) update(1, 0, n_, l, r, delta);
    }
    const BigInt& covered() const { return cov_[1]; }

private:
    std::size_t idx(const BigInt& y) const {
        return std::lower_bound(ys_.begin(), ys_.end(), y) - ys_.begin();
    }
    void update(std::size_t node, std::size_t lo, std::size_t hi, std::size_t l, std::size_t r,
                int delta) {
        if (r <= lo || hi <= l) return;
        if (l <= lo && hi <= r) {
            cnt_[node] += delta;
        } else {
            std::size_t mid = (lo + hi) / 2;
            update(2 * node, lo, mid, l, r, delta);
            update(2 * node + 1, mid, hi, l, r, delta);
        }
        if (cnt_[node] > 0)
            cov_[node] = ys_[hi] - ys_[lo];
        else if (hi - lo == 1)
            cov_[node] = 0;
        else
            cov_[node] = cov_[2 * node] + cov_[2 * node + 1];
    }
    std::vector<BigInt> ys_;
    std::vector<BigInt> cnt_;
    std::vector<BigInt> cov_;
    std::size_t n_ = 0;
};

// Integer box on the 2^-G grid: coordinates in [0, 2^G].
struct IntBox {
    std::int64_t x1, x2, y1, y2;
};

// Sweep-line union area over integer boxes; result is area * 4^G.
inline unsigned __int128 int_union_area(const std::vector<IntBox>& boxes) {
    struct Event {
        std::int64_t x, y1, y2;
        int delta;
    };
    std::vector<Event> ev;
    std::vector<std::int64_t> ys;
    for (const auto& b : boxes) {
        if (b.x1 >= b.x2 || b.y1 >= b.y2) continue;
        ev.push_back({b.x1, b.y1, b.y2, +1});
        ev.push_back({b.x2, b.y1, b.y2, -1});
        ys.push_back(b.y1);
        ys.push_back(b.y2);
    }
    if (ev.empty()) return 0;
    std::sort(ys.begin(), ys.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
    std::sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) { return a.x < b.x; });
    const std::size_t n = ys.size() - 1;
    std::vector<int> cnt(4 * n + 4, 0);
    std::vector<std::int64_t> cov(4 * n + 4, 0);
    auto idx = [&](std::int64_t y) {
        return std::size_t(std::lower_bound(ys.begin(), ys.end(), y) - ys.begin());
    };
    auto update = [&](auto&& self, std::size_t node, std::size_t lo, std::size_t hi,
                      std::size_t l, std::size_t r, int delta) -> void {
        if (r <= lo || hi <= l) return;
        if (l <= lo && hi <= r) {
            cnt[node] += delta;
        } else {
            std::size_t mid = (lo + hi) / 2;
            self(self, 2 * node, lo, mid, l, r, delta);
            self(self, 2 * node + 1, mid, hi, l, r, delta);
        }
        if (cnt[node] > 0)
            cov[node] = ys[hi] - ys[lo];
        else if (hi - lo == 1)
            cov[node] = 0;
        else
            cov[node] = cov[2 * node] + cov[2 * node + 1];
    };
    unsigned __int128 area = 0;
    std::int64_t prev_x = ev.front().x;
    for (const auto& e : ev) {
        area += (unsigned __int128)cov[1] * (unsigned __int128)(e.x - prev_x);
        prev_x = e.x;
        if (n > 0) {
            std::size_t l = idx(e.y1), r = idx(e.y2);
            if (l < r) update(update, 1, 0, n, l, r, e.delta);
        }
    }
    return area;
}

inline Rat int128_to_rat(unsigned __int128 v, unsigned shift) {
    BigInt num = BigInt(std::uint64_t(v >> 64));
    num <<= 64;
    num += BigInt(std::uint64_t(v));
    return Rat(num) / Rat(BigInt(1) << shift);
}

// Union area of dyadically snapped boxes: coordinates rounded to the
// 2^-G grid (outward grows every box, inward shrinks), machine-int sweep.
inline Rat union_area_dyadic(const std::vector<RatBox>& boxes, bool outward) {
    constexpr unsigned G = 62;
    const BigInt one = BigInt(1) << G;
    auto snap = [&](const Rat& r, bool up) {
        BigInt s = up ? -scaled_floor(-r, G) : scaled_floor(r, G);
        if (s < 0) s = 0;
        if (s > one) s = one;
        return s.convert_to<std::int64_t>();
    };
    std::vector<IntBox> ib;
    ib.reserve(boxes.size());
    for (const auto& b : boxes)
        ib.push_back({snap(b.x1, !outward), snap(b.x2, outward), snap(b.y1, !outward),
                      snap(b.y2, outward)});
    return int128_to_rat(int_union_area(ib), 2 * G);
}

// Exact union area of rational boxes inside [0,1)^2.  When the common
// denominator outgrows 128 bits the exact sweep becomes the bottleneck;
// round_dir = +1/-1 then licenses a conservative dyadic snap (outward for
// an outer hull, inward for an inner core).  round_dir = 0 forces exact.
inline Rat union_area(const std::vector<RatBox>& boxes, int round_dir = 0) {
    if (boxes.empty()) return 0;
    BigInt D = 1;
    BigInt last_den = 0;
    for (const auto& b : boxes) {
        for (const Rat* c : {&b.x1, &b.x2, &b.y1, &b.y2}) {
            const BigInt& den = rat_den(*c);
            if (den == last_den) continue;
            last_den = den;
            D = boost::multiprecision::lcm(D, den);
        }
        if (round_dir != 0 && bit_length(D) > 128) return union_area_dyadic(boxes, round_dir > 0);
    }
    struct Event {
        BigInt x, y1, y2;
        int delta;
    };
    std::vector<Event> ev;
    std::vector<BigInt> ys;
    auto scale = [&](const Rat& r) { return rat_num(r) * (D / rat_den(r)); };
    for (const auto& b : boxes) {
        BigInt x1 = scale(b.x1), x2 = scale(b.x2), y1 = scale(b.y1), y2 = scale(b.y2);
        if (x1 >= x2 || y1 >= y2) continue;
        ev.push_back({x1, y1, y2, +1});
        ev.push_back({x2, y1, y2, -1});
        ys.push_back(y1);
        ys.push_back(y2);
    }
    if (ev.empty()) return 0;
    std::sort(ys.begin(), ys.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
    std::sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) { return a.x < b.x; });
    CoverTree tree(std::move(ys));
    BigInt area = 0;
    BigInt prev_x = ev.front().x;
    for (const auto& e : ev) {
        area += tree.covered() * (e.x - prev_x);
        prev_x = e.x;
        tree.add(e.y1, e.y2, e.delta);
    }
    return Rat(area) / Rat(D * D);
}

}  // namespace detail

// Exact Lebesgue measure of the union; the enclosure collapses to a point
// for all-rational inputs.
namespace detail {

// union_measure on the 2^-G dyadic grid: rect endpoints snap straight to
// integers (outer hull outward, inner core inward), the torus wrap happens
// in integer arithmetic, and the sweep never touches a rational.  Used when
// the exact common denominator would exceed 128 bits.
inline Cert union_measure_dyadic(const RectCollection& c) {
    constexpr unsigned G = 62;
    const BigInt M = BigInt(1) << G;
    const std::int64_t Mi = std::int64_t(1) << G;
    auto sfloor = [&](const Rat& r) { return scaled_floor(r, G); };
    auto sceil = [&](const Rat& r) { BigInt s = -scaled_floor(-r, G); return s; };
    // half-widths repeat across rects; single-entry caches absorb them
    // rational comparisons are too slow for the hot loop; key on num/den
    struct Memo {
        BigInt num, den, val;
        bool have = false;
    };
    Memo h1_up, h1_dn, h2_up, h2_dn;
    auto memo_get = [&](Memo& m, const Rat& r, bool up) -> const BigInt& {
        if (!m.have || rat_num(r) != m.num || rat_den(r) != m.den) {
            m.num = rat_num(r);
            m.den = rat_den(r);
            m.val = up ? sceil(r) : sfloor(r);
            m.have = true;
        }
        return m.val;
    };
    using Seg = std::pair<std::int64_t, std::int64_t>;
    auto wrap_int = [&](const BigInt& lo, const BigInt& hi, std::vector<Seg>& segs) {
        segs.clear();
        if (hi <= lo) return;
        if (hi - lo >= M) {
            segs.push_back({0, Mi});
            return;
        }
        BigInt sh = lo % M;
        if (sh < 0) sh += M;
        std::int64_t l = sh.convert_to<std::int64_t>();
        std::int64_t len = (hi - lo).convert_to<std::int64_t>();
        if (l + len <= Mi) {
            segs.push_back({l, l + len});
        } else {
            segs.push_back({l, Mi});
            segs.push_back({0, l + len - Mi});
        }
    };
    std::vector<IntBox> outer, inner;
    std::vector<Seg> xs, ys;
    for (const auto& r : c.rects) {
        BigInt c1lo = sfloor(r.c1.lo()), c2lo = sfloor(r.c2.lo());
        BigInt c1hi = r.c1.exact() ? (c1lo * rat_den(r.c1.v) == rat_num(r.c1.v) << G ? c1lo
                                                                                     : c1lo + 1)
                                   : sceil(r.c1.hi());
        BigInt c2hi = r.c2.exact() ? (c2lo * rat_den(r.c2.v) == rat_num(r.c2.v) << G ? c2lo
                                                                                     : c2lo + 1)
                                   : sceil(r.c2.hi());
        const BigInt& H1 = memo_get(h1_up, r.h1.hi(), true);
        const BigInt& H2 = memo_get(h2_up, r.h2.hi(), true);
        const BigInt& g1 = memo_get(h1_dn, r.h1.lo(), false);
        const BigInt& g2 = memo_get(h2_dn, r.h2.lo(), false);
        // outer hull: [c.lo - h.hi, c.hi + h.hi] rounded outward
        wrap_int(c1lo - H1, c1hi + H1, xs);
        wrap_int(c2lo - H2, c2hi + H2, ys);
        for (const auto& xi : xs)
            for (const auto& yi : ys) outer.push_back({xi.first, xi.second, yi.first, yi.second});
        // inner core: [c.hi - h.lo, c.lo + h.lo] rounded inward
        wrap_int(c1hi - g1, c1lo + g1, xs);
        wrap_int(c2hi - g2, c2lo + g2, ys);
        for (const auto& xi : xs)
            for (const auto& yi : ys) inner.push_back({xi.first, xi.second, yi.first, yi.second});
    }
    auto fut = std::async(std::launch::async, [&] { return int_union_area(outer); });
    Rat lo = int128_to_rat(int_union_area(inner), 2 * G);
    Rat hi = int128_to_rat(fut.get(), 2 * G);
    if (hi > 1) hi = 1;
    return cert_from_bounds(lo, hi);
}

}  // namespace detail

inline Cert union_measure(const RectCollection& c) {
    {
        BigInt D = 1, last = 0;
        bool big = false;
        for (const auto& r : c.rects) {
            for (const Cert* ct : {&r.c1, &r.c2, &r.h1, &r.h2})
                for (const Rat* q : {&ct->v, &ct->e}) {
                    const BigInt& den = rat_den(*q);
                    if (den == last) continue;
                    last = den;
                    D = boost::multiprecision::lcm(D, den);
                }
            if (bit_length(D) > 110) {
                big = true;
                break;
            }
        }
        if (big) return detail::union_measure_dyadic(c);
    }
    std::vector<detail::RatBox> outer, inner;
    for (const auto& r : c.rects) {
        detail::append_boxes(outer, r, true);
        detail::append_boxes(inner, r, false);
    }
    Rat hi = detail::union_area(outer, +1);
    Rat lo = detail::union_area(inner, -1);
    if (hi > 1) hi = 1;
    return cert_from_bounds(lo, hi);
}

namespace detail {

template <class T>
struct GenBox {
    T x1, x2, y1, y2;
};

// Slab-sweep union area over any exactly ordered field (Rat, RootTwo, ...).
// Quadratic in the box count, which is fine at collection scale.
template <class T>
T union_area_exact(const std::vector<GenBox<T>>& boxes) {
    std::vector<T> xs;
    for (const auto& b : boxes) {
        xs.push_back(b.x1);
        xs.push_back(b.x2);
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    T total{};
    for (std::size_t s = 0; s + 1 < xs.size(); ++s) {
        std::vector<std::pair<T, T>> ys;
        for (const auto& b : boxes)
            if (b.x1 <= xs[s] && b.x2 >= xs[s + 1] && b.y1 < b.y2) ys.emplace_back(b.y1, b.y2);
        if (ys.empty()) continue;
        std::sort(ys.begin(), ys.end(),
                  [](const auto& p, const auto& q) { return p.first < q.first; });
        T len{};
        T cur_lo = ys[0].first, cur_hi = ys[0].second;
        for (std::size_t t = 1; t < ys.size(); ++t) {
            if (ys[t].first <= cur_hi) {
                if (cur_hi < ys[t].second) cur_hi = ys[t].second;
            } else {
                len = len + (cur_hi - cur_lo);
                cur_lo = ys[t].first;
                cur_hi = ys[t].second;
            }
        }
        len = len + (cur_hi - cur_lo);
        total = total + (xs[s + 1] - xs[s]) * len;
    }
    return total;
}

// Wrap a torus rectangle with exact coordinates into <= 4 boxes in [0,1)^2.
// Requires half-widths below 1/2 and centers in [0, 1).
template <class T>
void append_boxes_exact(std::vector<GenBox<T>>& out, const T& c1, const T& c2, const T& h1,
                        const T& h2) {
    const T zero{}, one{1};
    auto axis = [&](const T& c, const T& h) {
        std::vector<std::pair<T, T>> iv;
        T lo = c - h, hi = c + h;
        if (lo < zero) {
            iv.emplace_back(zero, hi);
            iv.emplace_back(lo + one, one);
        } else if (hi > one) {
            iv.emplace_back(lo, one);
            iv.emplace_back(zero, hi - one);
        } else {
            iv.emplace_back(lo, hi);
        }
        return iv;
    };
    for (const auto& [a1, a2] : axis(c1, h1))
        for (const auto& [b1, b2] : axis(c2, h2)) out.push_back(GenBox<T>{a1, a2, b1, b2});
}

}  // namespace detail

// Exact verdict on the doubling inequality mu(2R) <= 2 mu(R) for equal
// weights.  Rectangle q has rational center (c1, c2) and psi value d^2, so
// its half-width is the rational d while the doubled rectangle's is
// d*sqrt(2); both unions are computed with zero tolerance, the former in Q
// and the latter in Q(sqrt(2)).
struct DoublingCheck {
    Rat mu_R;
    RootTwo mu_2R;
    bool ok;        // mu(2R) <= 2 mu(R), exact
    bool equality;  // attained, e.g. for a single non-wrapping rectangle
};

inline DoublingCheck doubling_check_sqrt2(const std::vector<std::pair<Rat, Rat>>& centers,
                                          const std::vector<Rat>& d) {
    if (centers.size() != d.size())
        throw invalid_parameter("doubling_check_sqrt2: centers and half-widths differ in length");
    std::vector<detail::GenBox<Rat>> base;
    std::vector<detail::GenBox<RootTwo>> doubled;
    for (std::size_t q = 0; q < d.size(); ++q) {
        if (d[q] <= 0 || d[q] * d[q] > Rat(1, 8))
            throw invalid_parameter("doubling_check_sqrt2: psi = d^2 must lie in (0, 1/8]");
        const auto& [c1, c2] = centers[q];
        if (c1 < 0 || c1 >= 1 || c2 < 0 || c2 >= 1)
            throw invalid_parameter("doubling_check_sqrt2: centers must lie in [0,1)");
        detail::append_boxes_exact(base, c1, c2, d[q], d[q]);
        RootTwo h(Rat(0), d[q]);  // d * sqrt(2) = (2 d^2)^(1/2)
        detail::append_boxes_exact(doubled, RootTwo(c1), RootTwo(c2), h, h);
    }
    DoublingCheck out;
    out.mu_R = detail::union_area_exact(base);
    out.mu_2R = detail::union_area_exact(doubled);
    RootTwo twice(2 * out.mu_R);
    out.ok = out.mu_2R <= twice;
    out.equality = out.mu_2R == twice;
    return out;
}

// T(gamma) = (2^i g1, 2^j g2) mod 1, half-widths scaled the same way.
inline RectCollection doubling_map(const RectCollection& c, const Weights& w, unsigned bits = 96) {
    Cert si = pow_cert(Rat(2), w.i, bits);
    Cert sj = pow_cert(Rat(2), w.j, bits);
    auto wrap = [](const Cert& v) {
        // reduce the enclosure mod 1 around the midpoint's floor
        BigInt f = floor_rat(v.v);
        return cert_from_bounds(v.lo() - f, v.hi() - f);
    };
    RectCollection out;
    out.tag = c.tag + ":T";
    for (const auto& r : c.rects) {
        TorusRect t;
        t.c1 = wrap(r.c1 * si);
        t.c2 = wrap(r.c2 * sj);
        t.h1 = r.h1 * si;
        t.h2 = r.h2 * sj;
        t.label = r.label;
        out.rects.push_back(t);
    }
    return out;
}

// One containment failure (or near-miss) for the covering report.
struct CoverFailure {
    BigInt qprime;
    BigInt m;
    int axis;        // 1 or 2
    Rat margin;      // certified (h_S - |dist| - h_R) lower bound; <= 0 means failure
};

struct CoverReport {
    bool covered = true;
    std::vector<CoverFailure> failures;
    Rat min_margin;  // smallest certified margin over all checked containments
    bool margin_set = false;
};

// S*(k) covers R*(k): for q_k < q' <= n_k pick m with q' - m q_k in [1, q_k],
// then require torus-dist(m q_k x_t) + h_R,t <= h_S,t per axis.  The S-rect
// half-widths are read from the supplied collection (label = q' - m q_k) so a
// sabotaged S genuinely fails.
inline CoverReport covering_check(const RectCollection& S, const WitnessSequence& wit,
                                  std::size_t k, const RealSource& x1, const RealSource& x2,
                                  const ApproxFunction& psi0, const Weights& w,
                                  unsigned bits = 96) {
    if (k >= wit.size()) throw invalid_parameter("covering_check: block index out of range");
    const BigInt& qk = wit[k].q;
    const BigInt& nk = wit[k].n;
    std::vector<const TorusRect*> by_label(qk.convert_to<std::size_t>() + 1, nullptr);
    for (const auto& r : S.rects)
        if (r.label && *r.label >= 1 && *r.label <= qk)
            by_label[r.label->convert_to<std::size_t>()] = &r;
    CoverReport rep;
    auto note = [&](const BigInt& qp, const BigInt& m, int axis, const Rat& margin) {
        if (!rep.margin_set || margin < rep.min_margin) {
            rep.min_margin = margin;
            rep.margin_set = true;
        }
        if (margin <= 0) {
            rep.covered = false;
            rep.failures.push_back({qp, m, axis, margin});
        }
    };
    // psi0 is piecewise constant and the shift m q_k takes at most n_k/q_k
    // distinct values, so the expensive certified quantities are memoized
    // across the scan; only the cheap lookups run per q'.
    Cert hR1, hR2, d1, d2;
    BigInt hp_num, hp_den, hp_enum, hp_eden;  // psi0 value fingerprint
    BigInt m_cur = -1;
    bool have_hp = false;
    Rat K1, K2;             // d.hi + hR.hi per axis, for the current (m, psi0 value)
    BigInt s1_num, s1_den, s1_enum, s1_eden, s2_num, s2_den, s2_enum, s2_eden;
    Rat marg1, marg2;
    bool have1 = false, have2 = false;
    bool bad1 = false, bad2 = false;
    for (BigInt qp = qk + 1; qp <= nk; ++qp) {
        BigInt m = qp / qk;
        if (qp % qk == 0) --m;
        BigInt p = qp - m * qk;  // in [1, qk]
        const TorusRect* srect = by_label[p.convert_to<std::size_t>()];
        if (!srect) {
            rep.covered = false;
            rep.failures.push_back({qp, m, 0, Rat(-1)});
            continue;
        }
        Cert hp = psi0.value(qp);
        bool refresh = false;
        if (!have_hp || rat_num(hp.v) != hp_num || rat_den(hp.v) != hp_den ||
            rat_num(hp.e) != hp_enum || rat_den(hp.e) != hp_eden) {
            hp_num = rat_num(hp.v);
            hp_den = rat_den(hp.v);
            hp_enum = rat_num(hp.e);
            hp_eden = rat_den(hp.e);
            hR1 = pow_cert(hp, w.i, bits);
            hR2 = pow_cert(hp, w.j, bits);
            have_hp = true;
            refresh = true;
        }
        if (m != m_cur) {
            BigInt shift = m * qk;
            d1 = dist_qx(x1, shift, bits);
            d2 = dist_qx(x2, shift, bits);
            m_cur = m;
            refresh = true;
        }
        if (refresh) {
            K1 = d1.hi() + hR1.hi();
            K2 = d2.hi() + hR2.hi();
            have1 = have2 = false;
        }
        if (!srect->full_axis1()) {
            const Cert& sh = srect->h1;
            if (!have1 || rat_num(sh.v) != s1_num || rat_den(sh.v) != s1_den ||
                rat_num(sh.e) != s1_enum || rat_den(sh.e) != s1_eden) {
                s1_num = rat_num(sh.v);
                s1_den = rat_den(sh.v);
                s1_enum = rat_num(sh.e);
                s1_eden = rat_den(sh.e);
                marg1 = sh.lo() - K1;
                bad1 = marg1 <= 0;
                have1 = true;
                note(qp, m, 1, marg1);
            } else if (bad1) {
                rep.covered = false;
                rep.failures.push_back({qp, m, 1, marg1});
            }
        }
        if (!srect->full_axis2()) {
            const Cert& sh = srect->h2;
            if (!have2 || rat_num(sh.v) != s2_num || rat_den(sh.v) != s2_den ||
                rat_num(sh.e) != s2_enum || rat_den(sh.e) != s2_eden) {
                s2_num = rat_num(sh.v);
                s2_den = rat_den(sh.v);
                s2_enum = rat_num(sh.e);
                s2_eden = rat_den(sh.e);
                marg2 = sh.lo() - K2;
                bad2 = marg2 <= 0;
                have2 = true;
                note(qp, m, 2, marg2);
            } else if (bad2) {
                rep.covered = false;
                rep.failures.push_back({qp, m, 2, marg2});
            }
        }
    }
    return rep;
}

}  // namespace twistlab
