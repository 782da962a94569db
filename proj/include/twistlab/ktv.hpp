#pragma once

// KTV Cantor-set builder: nested rectangles theta*F_m, pruning against the
// resonant orbits q x on level bands k^m <= |q| < k^{m+1}, survivor
// accounting, deep-point extraction and a box-counting dimension estimate.

#include "twistlab/badness.hpp"
#include "twistlab/torusgeo.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

namespace twistlab {

struct badness_violation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct KtvParams {
    BigInt k;
    Weights w;
    Rat c;              // empirical badness constant (provenance: caller)
    unsigned depth;
    Rat kappa1 = Rat(1, 16);
    Rat kappa2 = Rat(1, 32);
    Cert theta;         // 1/2 min{(c/2k)^i, (c/2k)^j}
    Rat theta_hat;      // dyadic round-down used for exact geometry
    std::uint64_t children_x = 0, children_y = 0;  // per-node grid

    KtvParams(BigInt k_, Weights w_, Rat c_, unsigned depth_, unsigned bits = 96)
        : k(std::move(k_)), w(std::move(w_)), c(std::move(c_)), depth(depth_) {
        if (k < 2 || c <= 0 || depth < 1) throw invalid_parameter("ktv: bad parameters");
        Cert a = pow_cert(c / (2 * Rat(k)), w.i, bits);
        Cert b = pow_cert(c / (2 * Rat(k)), w.j, bits);
        Rat lo = a.lo() < b.lo() ? a.lo() : b.lo();
        Rat hi = a.hi() < b.hi() ? a.hi() : b.hi();
        theta = cert_from_bounds(lo / 2, hi / 2);
        theta_hat = round_down(theta.lo(), 120);
        if (theta_hat <= 0) throw insufficient_precision("ktv: theta underflow");
        // constructive branching check at m=1: floor(k^i/2) * floor(k^j/2) >= kappa1 k,
        // computed from the exact dyadic half-widths actually used
        children_x = grid_count(1, bits);
        children_y = grid_count(1, bits, true);
        if (Rat(BigInt(children_x) * BigInt(children_y)) < kappa1 * Rat(k))
            throw invalid_parameter("ktv: k too small for the kappa1 branching bound");
    }

    // dyadic half-width of a level-m rectangle on the given axis
    Rat half_width(unsigned m, bool axis_y = false, unsigned bits = 96) const {
        const Rat& e = axis_y ? w.j : w.i;
        Cert scale = pow_cert(Rat(k), -Rat(m) * e, bits);
        return round_down(theta_hat * scale.lo(), 160);
    }

    // children per axis when subdividing a level-m node
    std::uint64_t grid_count(unsigned m, unsigned bits = 96, bool axis_y = false) const {
        Rat parent = half_width(m, axis_y, bits);
        Rat child = half_width(m + 1, axis_y, bits);
        return floor_div(rat_num(parent / (2 * child)), rat_den(parent / (2 * child)))
            .convert_to<std::uint64_t>();
    }
};

struct KtvNode {
    unsigned level;            // 1-based
    std::int64_t parent;       // index into previous level, -1 for root
    Rat cx, cy;                // exact dyadic center
    std::optional<std::int64_t> pruned_by;  // q of the orbit hit, if pruned
};

struct CantorTree {
    KtvParams params;
    std::vector<std::vector<KtvNode>> levels;       // all generated nodes per level
    std::vector<std::vector<std::size_t>> alive;    // surviving indices per level
    std::uint64_t min_survivors = 0;                // min surviving children per parent
};

namespace detail {

// 64-bit fixed-point fraction of x, plus the stepping constant
struct Fixed64 {
    std::uint64_t step;   // floor(frac(x) * 2^64)
    Fixed64(const RealSource& x, unsigned bits = 128) {
        Cert v = x.eval(bits);
        Rat f = frac_rat(v.lo());
        step = scaled_floor(f, 64).convert_to<std::uint64_t>();
    }
};

inline std::uint64_t to_fixed(const Rat& r) {
    Rat f = frac_rat(r);
    return scaled_floor(f, 64).convert_to<std::uint64_t>();
}

}  // namespace detail

// Builds the tree by levels.  A child is pruned iff some q with
// k^m <= |q| < k^{m+1} has q x (mod 1) inside the doubled child (drift-
// inflated, so uncertainty prunes).  Throws badness_violation when a node
// loses more than kappa2 * k children.
inline CantorTree build_tree(const RealSource& x1, const RealSource& x2, const KtvParams& p,
                             std::uint64_t orbit_budget = (1ull << 31)) {
    CantorTree tree{p, {}, {}, 0};
    std::uint64_t ku = p.k.convert_to<std::uint64_t>();
    // root: theta F_1 centered at (1/2, 1/2)
    tree.levels.push_back({KtvNode{1, -1, Rat(1, 2), Rat(1, 2), std::nullopt}});
    tree.alive.push_back({0});
    tree.min_survivors = std::numeric_limits<std::uint64_t>::max();
    detail::Fixed64 fx1(x1), fx2(x2);
    Rat kappa2k = p.kappa2 * Rat(p.k);
    for (unsigned m = 1; m < p.depth; ++m) {
        Rat ph1 = p.half_width(m, false), ph2 = p.half_width(m, true);
        Rat ch1 = p.half_width(m + 1, false), ch2 = p.half_width(m + 1, true);
        std::uint64_t nx = p.grid_count(m, 96, false), ny = p.grid_count(m, 96, true);
        if (Rat(BigInt(nx) * BigInt(ny)) < p.kappa1 * Rat(p.k))
            throw invalid_parameter("ktv: kappa1 branching bound fails at level " +
                                    std::to_string(m));
        // generate children for every alive parent
        std::vector<KtvNode> next;
        std::vector<std::size_t> owner;  // parent alive-rank per child
        for (std::size_t rank = 0; rank < tree.alive[m - 1].size(); ++rank) {
            const KtvNode& par = tree.levels[m - 1][tree.alive[m - 1][rank]];
            Rat x0 = par.cx - ph1, y0 = par.cy - ph2;  // lower-left corner
            for (std::uint64_t iy = 0; iy < ny; ++iy) {
                Rat cy = y0 + (Rat(4 * iy) + 2) * ch2;
                for (std::uint64_t ix = 0; ix < nx; ++ix) {
                    Rat cx = x0 + (Rat(4 * ix) + 2) * ch1;
                    next.push_back(KtvNode{m + 1,
                                           static_cast<std::int64_t>(tree.alive[m - 1][rank]), cx,
                                           cy, std::nullopt});
                    owner.push_back(rank);
                }
            }
        }
        // orbit scan over the level band, doubled children drift-inflated
        std::uint64_t qlo = 1, qhi = 1;
        for (unsigned s = 0; s < m; ++s) qlo *= ku;
        qhi = qlo * ku;
        if (2 * (qhi - qlo) > orbit_budget)
            throw budget_exhausted("ktv: orbit scan exceeds budget at level " +
                                   std::to_string(m + 1));
        // accumulated fixed-point drift is at most 2q ulps; inflate generously
        std::uint64_t infl = 4 * qhi + 16;
        // fixed-point boxes of doubled children, inflated by drift
        struct Box {
            std::uint64_t x1, x2, y1, y2;
        };
        std::vector<Box> boxes(next.size());
        for (std::size_t ci = 0; ci < next.size(); ++ci) {
            std::uint64_t cxf = detail::to_fixed(next[ci].cx), cyf = detail::to_fixed(next[ci].cy);
            std::uint64_t hx = detail::to_fixed(2 * ch1) + infl, hy = detail::to_fixed(2 * ch2) + infl;
            boxes[ci] = {cxf - hx, cxf + hx, cyf - hy, cyf + hy};
        }
        // coarse 2^11 x 2^11 bitmap, then per-cell child lists
        constexpr unsigned G = 11;
        std::vector<std::uint8_t> coarse(1u << (2 * G), 0);
        std::map<std::uint32_t, std::vector<std::uint32_t>> cells;
        auto cell_of = [&](std::uint64_t xf, std::uint64_t yf) {
            return static_cast<std::uint32_t>(((xf >> (64 - G)) << G) | (yf >> (64 - G)));
        };
        for (std::size_t ci = 0; ci < next.size(); ++ci) {
            const Box& b = boxes[ci];
            std::uint64_t gx1 = b.x1 >> (64 - G), gx2 = b.x2 >> (64 - G);
            std::uint64_t gy1 = b.y1 >> (64 - G), gy2 = b.y2 >> (64 - G);
            for (std::uint64_t gx = gx1; gx <= gx2; ++gx)
                for (std::uint64_t gy = gy1; gy <= gy2; ++gy) {
                    std::uint32_t id = static_cast<std::uint32_t>((gx << G) | gy);
                    coarse[id] = 1;
                    cells[id].push_back(static_cast<std::uint32_t>(ci));
                }
        }
        auto visit = [&](std::uint64_t f1, std::uint64_t f2, std::int64_t q) {
            std::uint32_t id = cell_of(f1, f2);
            if (!coarse[id]) return;
            auto it = cells.find(id);
            if (it == cells.end()) return;
            for (std::uint32_t ci : it->second) {
                if (next[ci].pruned_by) continue;
                const Box& b = boxes[ci];
                if (f1 - b.x1 <= b.x2 - b.x1 && f2 - b.y1 <= b.y2 - b.y1)
                    next[ci].pruned_by = q;
            }
        };
        std::uint64_t f1 = fx1.step * qlo, f2 = fx2.step * qlo;
        for (std::uint64_t q = qlo; q < qhi; ++q) {
            visit(f1, f2, static_cast<std::int64_t>(q));
            visit(~f1 + 1, ~f2 + 1, -static_cast<std::int64_t>(q));
            f1 += fx1.step;
            f2 += fx2.step;
        }
        // survivor accounting
        std::vector<std::uint64_t> lost(tree.alive[m - 1].size(), 0);
        std::vector<std::size_t> alive_next;
        for (std::size_t ci = 0; ci < next.size(); ++ci) {
            if (next[ci].pruned_by)
                ++lost[owner[ci]];
            else
                alive_next.push_back(ci);
        }
        std::uint64_t per_node = nx * ny;
        for (std::size_t rank = 0; rank < lost.size(); ++rank) {
            if (Rat(BigInt(lost[rank])) > kappa2k)
                throw badness_violation("ktv: node lost more than kappa2*k children at level " +
                                        std::to_string(m + 1) +
                                        " (badness constant likely overestimated)");
            std::uint64_t surv = per_node - lost[rank];
            if (surv < tree.min_survivors) tree.min_survivors = surv;
        }
        tree.levels.push_back(std::move(next));
        tree.alive.push_back(std::move(alive_next));
    }
    if (tree.min_survivors == std::numeric_limits<std::uint64_t>::max()) tree.min_survivors = 0;
    return tree;
}

struct DeepPoint {
    Rat gx, gy;          // exact dyadic center of a deepest survivor
    double cert_lo;      // certified-positive lower bound of the badness scan minimum
    Cert cert_at_argmin; // tight certified value at the scan argmin
    std::int64_t argmin_q;
    std::uint64_t scan_limit;
};

// Deepest-node centers with per-point inhomogeneous badness certificates
// min_{1<=|q|<=k^depth} |q| max{||q x1 - g1||^(1/i), ||q x2 - g2||^(1/j)}.
inline std::vector<DeepPoint> extract_points(const CantorTree& tree, std::size_t count,
                                             const RealSource& x1, const RealSource& x2,
                                             unsigned bits = 96) {
    if (tree.levels.size() < 2) throw invalid_parameter("extract_points: tree depth must be >= 2");
    std::vector<DeepPoint> out;
    if (count == 0) return out;
    std::uint64_t ku = tree.params.k.convert_to<std::uint64_t>();
    std::uint64_t Q = 1;
    for (unsigned s = 0; s < tree.params.depth; ++s) Q *= ku;
    detail::Fixed64 fx1(x1), fx2(x2);
    double e1 = to_double(1 / tree.params.w.i), e2 = to_double(1 / tree.params.w.j);
    const auto& last_alive = tree.alive.back();
    const auto& last_nodes = tree.levels.back();
    std::size_t stride = last_alive.empty() ? 1 : std::max<std::size_t>(1, last_alive.size() / count);
    for (std::size_t s = 0; s < last_alive.size() && out.size() < count; s += stride) {
        const KtvNode& node = last_nodes[last_alive[s]];
        std::uint64_t g1 = detail::to_fixed(node.cx), g2 = detail::to_fixed(node.cy);
        double best = 1e300;
        std::int64_t best_q = 1;
        std::uint64_t f1 = 0, f2 = 0;
        const double scale = 1.0 / 18446744073709551616.0;  // 2^-64
        for (std::uint64_t q = 1; q <= Q; ++q) {
            f1 += fx1.step;
            f2 += fx2.step;
            double driftq = static_cast<double>(q) * scale * 4;
            for (int sgn : {+1, -1}) {
                std::uint64_t a = sgn > 0 ? f1 - g1 : (~f1 + 1) - g1;
                std::uint64_t b = sgn > 0 ? f2 - g2 : (~f2 + 1) - g2;
                double d1 = static_cast<double>(a < (~a + 1) ? a : ~a + 1) * scale - driftq;
                double d2 = static_cast<double>(b < (~b + 1) ? b : ~b + 1) * scale - driftq;
                if (d1 < 0) d1 = 0;
                if (d2 < 0) d2 = 0;
                double v = static_cast<double>(q) *
                           std::max(std::pow(d1, e1), std::pow(d2, e2)) * (1 - 1e-9);
                if (v < best) {
                    best = v;
                    best_q = sgn * static_cast<std::int64_t>(q);
                }
            }
        }
        // tight certified value at the argmin
        BigInt qa = BigInt(best_q);
        Cert fa1 = frac_mult(x1, qa, bits), fa2 = frac_mult(x2, qa, bits);
        Cert da1 = dist_to_int(cert_from_bounds(fa1.lo() - node.cx, fa1.hi() - node.cx));
        Cert da2 = dist_to_int(cert_from_bounds(fa2.lo() - node.cy, fa2.hi() - node.cy));
        Cert va1 = pow_cert(da1, 1 / tree.params.w.i, bits);
        Cert va2 = pow_cert(da2, 1 / tree.params.w.j, bits);
        Rat lo = (va1.lo() > va2.lo() ? va1.lo() : va2.lo()) * Rat(abs_big(qa));
        Rat hi = (va1.hi() > va2.hi() ? va1.hi() : va2.hi()) * Rat(abs_big(qa));
        out.push_back({node.cx, node.cy, best, cert_from_bounds(lo, hi), best_q, Q});
    }
    return out;
}

struct DimensionReport {
    std::vector<double> log_inv_delta;
    std::vector<std::uint64_t> counts;
    double slope = 0.0;
    double residual_rms = 0.0;
    double analytic_floor = 0.0;
};

// Box-counting over the deepest survivors.  The covering at scale m is the
// set of level-m rectangles that still contain a deepest survivor, and
// delta_m is their diameter 2 * half_width(m); this avoids the aliasing a
// free-floating grid introduces at both ends of the scale range.
inline DimensionReport box_dimension(const CantorTree& tree) {
    DimensionReport rep;
    double wmax = to_double(tree.params.w.max());
    unsigned depth = static_cast<unsigned>(tree.levels.size());
    // occupied nodes per level: deepest survivors and their ancestors
    std::vector<std::set<std::size_t>> occupied(depth);
    for (std::size_t idx : tree.alive.back()) occupied[depth - 1].insert(idx);
    for (unsigned m = depth - 1; m > 0; --m)
        for (std::size_t idx : occupied[m])
            occupied[m - 1].insert(static_cast<std::size_t>(tree.levels[m][idx].parent));
    for (unsigned m = 1; m <= depth; ++m) {
        double delta = 2 * to_double(tree.params.half_width(m));
        rep.log_inv_delta.push_back(std::log(1.0 / delta));
        rep.counts.push_back(occupied[m - 1].size());
    }
    // least squares slope of log N vs log(1/delta)
    double n = static_cast<double>(rep.counts.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t t = 0; t < rep.counts.size(); ++t) {
        double lx = rep.log_inv_delta[t], ly = std::log(static_cast<double>(rep.counts[t]));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    rep.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double icept = (sy - rep.slope * sx) / n;
    double ss = 0;
    for (std::size_t t = 0; t < rep.counts.size(); ++t) {
        double r = std::log(static_cast<double>(rep.counts[t])) -
                   (icept + rep.slope * rep.log_inv_delta[t]);
        ss += r * r;
    }
    rep.residual_rms = std::sqrt(ss / n);
    rep.analytic_floor =
        std::log(to_double(Rat(tree.params.k)) / 32.0) / (wmax * std::log(to_double(Rat(tree.params.k))));
    return rep;
}

}  // namespace twistlab
