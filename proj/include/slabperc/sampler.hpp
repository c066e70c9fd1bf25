#pragma once

// Bond configurations under the environment measure: enhanced edges (those
// inside selected vertical columns) open with probability q, the rest with
// probability p. With a fixed UniformField the map (p,q) -> configuration is
// pointwise monotone, which the domination tests rely on.

#include <cstdint>
#include <vector>

#include "common.hpp"
#include "environment.hpp"
#include "lattice.hpp"
#include "rng.hpp"

namespace slabperc {

struct ModelParams {
    double p = 0.5; // regular edges
    double q = 0.5; // enhanced edges

    void validate() const {
        require(p >= 0.0 && p <= 1.0 && q >= 0.0 && q <= 1.0,
                "ModelParams: p and q must lie in [0,1]");
    }
};

// E(Lambda x Z_+ x {0}) contains every edge with BOTH endpoints in the
// selected-column set. That is all y-direction edges inside a selected
// column, plus x-direction edges joining two adjacent selected columns.
// `strict_columns` restricts to the y-direction edges only (the prose
// reading "edges on selected vertical columns").
inline bool is_enhanced(const Edge& e, const Environment& env, bool strict_columns = false) {
    if (e.a.z != 0 || e.b.z != 0) return false;
    switch (e.dir()) {
    case Dir::Y:
        return env.contains(static_cast<std::uint64_t>(e.a.x));
    case Dir::X:
        return !strict_columns && env.contains(static_cast<std::uint64_t>(e.a.x)) &&
               env.contains(static_cast<std::uint64_t>(e.b.x));
    case Dir::Z:
        return false;
    }
    return false;
}

struct BondConfiguration {
    const SlabLattice* lattice = nullptr;
    Bitset open;

    bool is_open(std::uint64_t edge) const { return open.get(edge); }
};

// Per-edge open thresholds for one (lattice, environment, params) triple;
// built once and reused across replicas.
class ThresholdTable {
public:
    ThresholdTable(const SlabLattice& lat, const Environment& env, const ModelParams& params,
                   bool strict_columns = false)
        : lattice_(&lat) {
        params.validate();
        const std::uint64_t thr_p = open_threshold(params.p);
        const std::uint64_t thr_q = open_threshold(params.q);
        thresholds_.assign(lat.edge_count(), thr_p);
        if (thr_p != thr_q) {
            // Only layer-0 edges over selected columns can differ.
            for (std::uint64_t e = 0; e < lat.edge_count(); ++e) {
                Edge edge = lat.edge_at(e);
                if (edge.a.z != 0 || edge.b.z != 0) continue;
                if (is_enhanced(edge, env, strict_columns)) thresholds_[e] = thr_q;
            }
        }
    }

    // Homogeneous table (no environment), all edges at p.
    ThresholdTable(const SlabLattice& lat, double p) : lattice_(&lat) {
        thresholds_.assign(lat.edge_count(), open_threshold(p));
    }

    const SlabLattice& lattice() const { return *lattice_; }
    std::uint64_t threshold(std::uint64_t edge) const { return thresholds_[edge]; }

private:
    const SlabLattice* lattice_;
    std::vector<std::uint64_t> thresholds_;
};

inline BondConfiguration sample(const ThresholdTable& table, const UniformField& field) {
    const SlabLattice& lat = table.lattice();
    BondConfiguration cfg;
    cfg.lattice = &lat;
    cfg.open = Bitset(lat.edge_count());
    for (std::uint64_t e = 0; e < lat.edge_count(); ++e)
        if (field.word(e) < table.threshold(e)) cfg.open.set(e, true);
    return cfg;
}

inline BondConfiguration sample(const SlabLattice& lat, const Environment& env,
                                const ModelParams& params, const UniformField& field) {
    return sample(ThresholdTable(lat, env, params), field);
}

inline BondConfiguration force_edge(const BondConfiguration& cfg, std::uint64_t edge, bool open) {
    BondConfiguration out = cfg;
    out.open.set(edge, open);
    return out;
}

} // namespace slabperc
