#pragma once

// Exhaustive enumeration over all configurations of a small window: the
// exact event probabilities that anchor the Monte Carlo estimators.

#include <cstdint>
#include <vector>

#include "common.hpp"
#include "lattice.hpp"
#include "sampler.hpp"

namespace slabperc {

inline std::vector<double> edge_probabilities(const SlabLattice& lat, const Environment& env,
                                              const ModelParams& params,
                                              bool strict_columns = false) {
    std::vector<double> probs(lat.edge_count(), params.p);
    for (std::uint64_t e = 0; e < lat.edge_count(); ++e)
        if (is_enhanced(lat.edge_at(e), env, strict_columns)) probs[e] = params.q;
    return probs;
}

// Sum of configuration weights over the event, by full enumeration.
template <typename EventFn>
double exact_event_probability(const SlabLattice& lat, const std::vector<double>& edge_probs,
                               EventFn&& event, std::uint32_t max_edges = 24) {
    const std::uint64_t m = lat.edge_count();
    require(edge_probs.size() == m, "exact_event_probability: probability vector length");
    if (m > max_edges) throw size_error("exact_event_probability: too many edges to enumerate");
    BondConfiguration cfg;
    cfg.lattice = &lat;
    cfg.open = Bitset(m);
    double total = 0.0;
    const std::uint64_t count = std::uint64_t{1} << m;
    for (std::uint64_t mask = 0; mask < count; ++mask) {
        double w = 1.0;
        for (std::uint64_t e = 0; e < m; ++e) {
            bool open = (mask >> e) & 1;
            cfg.open.set(e, open);
            w *= open ? edge_probs[e] : 1.0 - edge_probs[e];
        }
        if (w > 0.0 && event(static_cast<const BondConfiguration&>(cfg))) total += w;
    }
    return total;
}

template <typename EventFn>
double exact_event_probability(const SlabLattice& lat, double p, EventFn&& event,
                               std::uint32_t max_edges = 24) {
    return exact_event_probability(lat, std::vector<double>(lat.edge_count(), p),
                                   std::forward<EventFn>(event), max_edges);
}

} // namespace slabperc
