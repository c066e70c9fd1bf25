#pragma once

// The block construction: favored/unfavored coarse edges over the
// good-interval structure, the block events D/H/V, the corner edge sets,
// the open-block events A(f) and A*(f), and the coarse map sigma.
//
// The coarse configuration lives on a thickness-0 SlabLattice whose
// vertices are the renormalized coordinates, so every 2D query on it can
// reuse the connectivity module unchanged.

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "common.hpp"
#include "connectivity.hpp"
#include "environment.hpp"
#include "estimators.hpp"
#include "lattice.hpp"
#include "rng.hpp"
#include "sampler.hpp"

namespace slabperc {

struct CoarseEdge {
    Coarse x;          // lower endpoint
    bool horizontal;   // otherwise vertical

    Coarse other() const {
        return horizontal ? Coarse{x.x + 1, x.y} : Coarse{x.x, x.y + 1};
    }
    friend bool operator==(const CoarseEdge&, const CoarseEdge&) = default;
};

struct RenormSpec {
    const SlabLattice* lattice = nullptr;
    const Environment* env = nullptr;
    std::int32_t n = 0;
    double lambda = 0.0;
    IntervalClassification classification;

    RenormSpec(const SlabLattice& lat, const Environment& e, std::int32_t block_n, double lam)
        : lattice(&lat), env(&e), n(block_n), lambda(lam) {
        require(block_n >= 2 && block_n % 2 == 0, "RenormSpec: n must be even and >= 2");
        classification = classify_intervals(e, static_cast<std::uint64_t>(block_n), lam);
    }

    Box3 block(Coarse c) const { return region_box(RegionKind::B, n, c); }
    Box3 rect(const CoarseEdge& f) const {
        return region_box(f.horizontal ? RegionKind::HR : RegionKind::VR, n, f.x);
    }

    // f is favored iff every column of B_n(x) u B_n(y) lies over a good
    // interval. The union spans intervals x.x .. x.x+2 for a horizontal
    // edge (the right block's closing column touches one interval further)
    // and x.x .. x.x+1 for a vertical edge.
    bool favored(const CoarseEdge& f) const {
        std::int32_t first = f.x.x;
        std::int32_t last = f.x.x + (f.horizontal ? 2 : 1);
        if (static_cast<std::size_t>(last) >= classification.count())
            throw window_error("favored: environment window too short for this edge");
        for (std::int32_t i = first; i <= last; ++i)
            if (!classification.good[static_cast<std::size_t>(i)]) return false;
        return true;
    }
};

// Subcritical offset schedule for block-opening experiments: delta_n pairs
// with an enhancement eps as (p, q) = (p_c - delta_n, p_c + eps), decaying
// polynomially in n^lambda.
inline double delta_schedule(std::int32_t n, double eps, double lambda) {
    require(n >= 1 && eps > 0.0 && lambda > 0.0, "delta_schedule: bad parameters");
    return eps / (2.0 * (1.0 + std::pow(static_cast<double>(n), lambda)));
}

// Homogeneous comparison parameter p_n = p_c + c14 * n^(-lambda*c15); the
// constants are calibration knobs (existence-level in the underlying
// estimates), so callers supply them.
inline double comparison_pn(double pc, std::int32_t n, double lambda, double c14, double c15) {
    require(n >= 1 && lambda > 0.0 && c14 > 0.0 && c15 > 0.0, "comparison_pn: bad parameters");
    return pc + c14 * std::pow(static_cast<double>(n), -lambda * c15);
}

// C(f): edges inside the union of the four corner-block boundaries, minus
// edges inside the union of the two block boundaries. Boundaries follow the
// slab convention (no boundary along the quarter-space walls or in z).
inline std::vector<std::uint64_t> corner_edges(const CoarseEdge& f, const RenormSpec& spec) {
    const std::int32_t n = spec.n;
    const Coarse x = f.x, y = f.other();
    const Box3 bx = region_box(RegionKind::B, n, x);
    const Box3 by = region_box(RegionKind::B, n, y);
    Box3 hull{std::min(bx.x_lo, by.x_lo), std::max(bx.x_hi, by.x_hi),
              std::min(bx.y_lo, by.y_lo), std::max(bx.y_hi, by.y_hi)};
    const SlabLattice& lat = *spec.lattice;
    if (!lat.contains(hull)) throw window_error("corner_edges: blocks outside window");

    RegionGraph rg(lat, hull);
    std::vector<char> in_corner(rg.vertex_count(), 0);
    std::vector<char> in_block_boundary(rg.vertex_count(), 0);
    auto mark = [&](const Box3& box, std::vector<char>& flags) {
        for_box_boundary(box, lat.thickness_k(),
                         [&](const Vertex& v) { flags[rg.local(v)] = 1; });
    };
    for (Coarse c : {x, y}) {
        mark(region_box(RegionKind::LB, n, c), in_corner);
        mark(region_box(RegionKind::RB, n, c), in_corner);
        mark(region_box(RegionKind::B, n, c), in_block_boundary);
    }
    std::vector<std::uint64_t> out;
    for (const auto& e : rg.edges()) {
        if (!in_corner[e.u] || !in_corner[e.v]) continue;
        if (in_block_boundary[e.u] && in_block_boundary[e.v]) continue;
        out.push_back(e.global);
    }
    return out;
}

inline bool eval_D(const BondConfiguration& cfg, const RenormSpec& spec, Coarse x) {
    Box3 b = spec.block(x);
    RegionGraph rg(*spec.lattice, b);
    return connected(cfg, rg,
                     box_vertices(region_box(RegionKind::LB, spec.n, x), rg.k()),
                     box_vertices(region_box(RegionKind::RB, spec.n, x), rg.k()));
}

inline bool eval_H(const BondConfiguration& cfg, const RenormSpec& spec, Coarse x) {
    RegionGraph rg(*spec.lattice, region_box(RegionKind::HR, spec.n, x));
    return connected(cfg, rg,
                     box_vertices(region_box(RegionKind::LS, spec.n, x), rg.k()),
                     box_vertices(region_box(RegionKind::RS, spec.n, {x.x + 1, x.y}), rg.k()));
}

inline bool eval_V(const BondConfiguration& cfg, const RenormSpec& spec, Coarse x) {
    RegionGraph rg(*spec.lattice, region_box(RegionKind::VR, spec.n, x));
    return connected(cfg, rg,
                     box_vertices(region_box(RegionKind::BS, spec.n, x), rg.k()),
                     box_vertices(region_box(RegionKind::TS, spec.n, {x.x, x.y + 1}), rg.k()));
}

// Gamma of a block: the order-minimal open path joining the two corner
// sub-boxes inside the block; absent when the block event D fails.
inline std::optional<OpenPath> block_gamma(const BondConfiguration& cfg, const RenormSpec& spec,
                                           Coarse x) {
    Box3 b = spec.block(x);
    RegionGraph rg(*spec.lattice, b);
    return minimal_open_path(cfg, rg,
                             box_vertices(region_box(RegionKind::LB, spec.n, x), rg.k()),
                             box_vertices(region_box(RegionKind::RB, spec.n, x), rg.k()));
}

// Trace of a block's spanning cluster: the vertices joined to both corner
// sub-boxes inside the block, clipped to `clip`. Nonempty exactly when the
// block event D holds, and it always contains the vertices of the minimal
// crossing path. The A events below connect these traces, which keeps them
// increasing; connecting the minimal paths themselves would not be (a new
// open edge can move the minimal path away from its rectangle connection).
inline std::optional<std::vector<Vertex>> block_cluster_trace(const BondConfiguration& cfg,
                                                              const RenormSpec& spec, Coarse x,
                                                              const Box3& clip) {
    Box3 b = spec.block(x);
    RegionGraph rg(*spec.lattice, b);
    UnionFind uf;
    const std::uint32_t sa = rg.vertex_count(), sb = sa + 1;
    uf.reset(rg.vertex_count() + 2);
    for (const auto& e : rg.edges())
        if (cfg.is_open(e.global)) uf.unite(e.u, e.v);
    for (const auto& v : box_vertices(region_box(RegionKind::LB, spec.n, x), rg.k()))
        uf.unite(sa, rg.local(v));
    for (const auto& v : box_vertices(region_box(RegionKind::RB, spec.n, x), rg.k()))
        uf.unite(sb, rg.local(v));
    if (uf.find(sa) != uf.find(sb)) return std::nullopt; // D fails
    std::uint32_t root = uf.find(sa);
    std::vector<Vertex> out;
    Box3 window{std::max(b.x_lo, clip.x_lo), std::min(b.x_hi, clip.x_hi),
                std::max(b.y_lo, clip.y_lo), std::min(b.y_hi, clip.y_hi)};
    if (window.x_lo > window.x_hi || window.y_lo > window.y_hi) return out;
    for (std::int32_t z = 0; z <= rg.k(); ++z)
        for (std::int32_t y = window.y_lo; y <= window.y_hi; ++y)
            for (std::int32_t x2 = window.x_lo; x2 <= window.x_hi; ++x2)
                if (uf.find(rg.local({x2, y, z})) == root) out.push_back({x2, y, z});
    return out;
}

inline bool eval_A(const BondConfiguration& cfg, const RenormSpec& spec, const CoarseEdge& f) {
    Box3 r = spec.rect(f);
    auto tx = block_cluster_trace(cfg, spec, f.x, r);
    if (!tx) return false;
    auto ty = block_cluster_trace(cfg, spec, f.other(), r);
    if (!ty) return false;
    if (tx->empty() || ty->empty()) return false;
    RegionGraph rg(*spec.lattice, r);
    return connected(cfg, rg, *tx, *ty);
}

inline bool eval_A_star(const BondConfiguration& cfg, const RenormSpec& spec,
                        const CoarseEdge& f) {
    for (auto e : corner_edges(f, spec))
        if (!cfg.is_open(e)) return false;
    return eval_A(cfg, spec, f);
}

// Coarse configuration over a window of renormalized coordinates. The
// carrier lattice has thickness 0, so sigma supports the same crossing and
// cluster queries as a fine configuration.
struct RenormConfig {
    SlabLattice coarse;   // (mx, my, 0)
    Bitset favored;       // per coarse edge
    Bitset sigma;         // per coarse edge

    RenormConfig(std::int32_t mx, std::int32_t my)
        : coarse(mx, my, 0), favored(coarse.edge_count()), sigma(coarse.edge_count()) {}

    BondConfiguration as_configuration() const { return {&coarse, sigma}; }
};

// Precomputed geometry for repeated sigma evaluations over one coarse
// window: block/rectangle graphs, corner edge lists, favored flags.
class SigmaBuilder {
public:
    SigmaBuilder(const RenormSpec& spec, std::int32_t mx, std::int32_t my)
        : spec_(&spec), mx_(mx), my_(my), coarse_(mx, my, 0) {
        require(mx >= 1 && my >= 1, "SigmaBuilder: coarse window must be nonempty");
        const std::int32_t k = spec.lattice->thickness_k();
        blocks_.reserve(static_cast<std::size_t>(mx) * my);
        for (std::int32_t cy = 0; cy < my; ++cy) {
            for (std::int32_t cx = 0; cx < mx; ++cx) {
                Coarse c{cx, cy};
                Box3 b = spec.block(c);
                blocks_.push_back({RegionGraph(*spec.lattice, b),
                                   box_vertices(region_box(RegionKind::LB, spec.n, c), k),
                                   box_vertices(region_box(RegionKind::RB, spec.n, c), k)});
            }
        }
        for (std::uint64_t ce = 0; ce < coarse_.edge_count(); ++ce) {
            CoarseEdge f = coarse_edge(ce);
            edges_.push_back({RegionGraph(*spec.lattice, spec.rect(f)),
                              corner_edges(f, spec), spec.favored(f)});
        }
    }

    const SlabLattice& coarse_lattice() const { return coarse_; }

    CoarseEdge coarse_edge(std::uint64_t index) const {
        Edge e = coarse_.edge_at(index);
        return {{e.a.x, e.a.y}, e.dir() == Dir::X};
    }

    bool favored(std::uint64_t index) const { return edges_[index].favored; }

    // sigma over the window; each block's spanning-cluster membership is
    // computed once per sample and shared by its incident coarse edges.
    RenormConfig evaluate(const BondConfiguration& cfg) const {
        RenormConfig out(mx_, my_);
        // Per block: 0 = not computed, 1 = no spanning cluster, 2 = cached.
        std::vector<char> state(blocks_.size(), 0);
        std::vector<std::vector<char>> member(blocks_.size());
        UnionFind uf;
        auto spanning = [&](std::int32_t cx, std::int32_t cy) -> const std::vector<char>* {
            std::size_t i = static_cast<std::size_t>(cy) * mx_ + cx;
            if (state[i] == 0) {
                const BlockGeometry& blk = blocks_[i];
                const std::uint32_t sa = blk.graph.vertex_count(), sb = sa + 1;
                uf.reset(blk.graph.vertex_count() + 2);
                for (const auto& e : blk.graph.edges())
                    if (cfg.is_open(e.global)) uf.unite(e.u, e.v);
                for (const auto& v : blk.lb) uf.unite(sa, blk.graph.local(v));
                for (const auto& v : blk.rb) uf.unite(sb, blk.graph.local(v));
                if (uf.find(sa) != uf.find(sb)) {
                    state[i] = 1;
                } else {
                    std::uint32_t root = uf.find(sa);
                    member[i].assign(blk.graph.vertex_count(), 0);
                    for (std::uint32_t v = 0; v < blk.graph.vertex_count(); ++v)
                        member[i][v] = uf.find(v) == root;
                    state[i] = 2;
                }
            }
            return state[i] == 2 ? &member[i] : nullptr;
        };
        auto trace_in = [&](std::int32_t cx, std::int32_t cy, const Box3& clip,
                            std::vector<Vertex>& out_vs) {
            std::size_t i = static_cast<std::size_t>(cy) * mx_ + cx;
            const BlockGeometry& blk = blocks_[i];
            const Box3& b = blk.graph.box();
            Box3 w{std::max(b.x_lo, clip.x_lo), std::min(b.x_hi, clip.x_hi),
                   std::max(b.y_lo, clip.y_lo), std::min(b.y_hi, clip.y_hi)};
            out_vs.clear();
            if (w.x_lo > w.x_hi || w.y_lo > w.y_hi) return;
            for (std::int32_t z = 0; z <= blk.graph.k(); ++z)
                for (std::int32_t y = w.y_lo; y <= w.y_hi; ++y)
                    for (std::int32_t x = w.x_lo; x <= w.x_hi; ++x)
                        if (member[i][blk.graph.local({x, y, z})]) out_vs.push_back({x, y, z});
        };

        std::vector<Vertex> ta, tb;
        for (std::uint64_t ce = 0; ce < coarse_.edge_count(); ++ce) {
            const EdgeGeometry& g = edges_[ce];
            CoarseEdge f = coarse_edge(ce);
            out.favored.set(ce, g.favored);
            if (!g.favored) {
                bool corners_open = true;
                for (auto e : g.corner) {
                    if (!cfg.is_open(e)) {
                        corners_open = false;
                        break;
                    }
                }
                if (!corners_open) continue;
            }
            Coarse y = f.other();
            if (!spanning(f.x.x, f.x.y) || !spanning(y.x, y.y)) continue;
            trace_in(f.x.x, f.x.y, g.graph.box(), ta);
            trace_in(y.x, y.y, g.graph.box(), tb);
            if (ta.empty() || tb.empty()) continue;
            if (connected(cfg, g.graph, ta, tb)) out.sigma.set(ce, true);
        }
        return out;
    }

private:
    struct BlockGeometry {
        RegionGraph graph;
        std::vector<Vertex> lb, rb;
    };
    struct EdgeGeometry {
        RegionGraph graph;
        std::vector<std::uint64_t> corner;
        bool favored;
    };

    const RenormSpec* spec_;
    std::int32_t mx_, my_;
    SlabLattice coarse_;
    std::vector<BlockGeometry> blocks_;
    std::vector<EdgeGeometry> edges_;
};

// Randomized thinning W = sigma * Z with Z iid Bernoulli(1 - psi).
inline Bitset thin_sigma(const RenormConfig& rc, double psi, Stream& stream) {
    require(psi > 0.0 && psi < 0.5, "thin_sigma: psi must lie in (0, 1/2)");
    Bitset w = rc.sigma;
    const std::uint64_t keep = open_threshold(1.0 - psi);
    for (std::uint64_t e = 0; e < w.size(); ++e)
        if (w.get(e) && !(stream.next_u32() < keep)) w.set(e, false);
    return w;
}

// Dependency footprint of a coarse edge: its two blocks plus the
// connecting rectangle (corner sets live inside the blocks).
inline std::vector<Box3> dependency_region(const CoarseEdge& f, const RenormSpec& spec) {
    return {spec.block(f.x), spec.block(f.other()), spec.rect(f)};
}

inline bool regions_disjoint(const std::vector<Box3>& a, const std::vector<Box3>& b) {
    for (const auto& ba : a)
        for (const auto& bb : b)
            if (!(ba.x_hi < bb.x_lo || bb.x_hi < ba.x_lo || ba.y_hi < bb.y_lo ||
                  bb.y_hi < ba.y_lo))
                return false;
    return true;
}

struct DependenceReport {
    double mean_f = 0.0;
    double mean_g = 0.0;
    double covariance = 0.0;
    double sigma_band = 0.0; // 3 * asymptotic sd of the covariance estimator
    std::uint64_t samples = 0;
    bool pass = false;
};

// Empirical covariance of sigma(f), sigma(g) for two coarse edges with
// disjoint dependency regions. Refuses overlapping regions for distinct
// edges; f == g degenerates to the exact variance identity.
template <typename ConfigSampler>
DependenceReport one_dependence_test(const RenormSpec& spec, const CoarseEdge& f,
                                     const CoarseEdge& g, ConfigSampler&& next_config,
                                     std::uint64_t samples) {
    require(samples >= 2, "one_dependence_test: need at least 2 samples");
    if (!(f == g))
        require(regions_disjoint(dependency_region(f, spec), dependency_region(g, spec)),
                "one_dependence_test: dependency regions overlap");
    std::uint64_t cf = 0, cg = 0, cfg_joint = 0;
    for (std::uint64_t s = 0; s < samples; ++s) {
        BondConfiguration cfg = next_config(s);
        bool vf = spec.favored(f) ? eval_A(cfg, spec, f) : eval_A_star(cfg, spec, f);
        bool vg = (f == g) ? vf
                           : (spec.favored(g) ? eval_A(cfg, spec, g) : eval_A_star(cfg, spec, g));
        cf += vf;
        cg += vg;
        cfg_joint += (vf && vg);
    }
    DependenceReport rep;
    rep.samples = samples;
    double n = static_cast<double>(samples);
    rep.mean_f = cf / n;
    rep.mean_g = cg / n;
    rep.covariance = cfg_joint / n - rep.mean_f * rep.mean_g;
    double vf = rep.mean_f * (1.0 - rep.mean_f);
    double vg = rep.mean_g * (1.0 - rep.mean_g);
    rep.sigma_band = 3.0 * std::sqrt(vf * vg / n);
    rep.pass = (f == g) || std::abs(rep.covariance) <= rep.sigma_band;
    return rep;
}

} // namespace slabperc
