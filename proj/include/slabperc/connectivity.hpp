#pragma once

// Graph queries on bond configurations restricted to a boxed region:
// connectivity, directed crossings, one-arm events, the order-minimal open
// path, closed boundaries and nearest cutsets, and edge pivotality.

#include <cstdint>
#include <optional>
#include <vector>

#include "common.hpp"
#include "lattice.hpp"
#include "sampler.hpp"

namespace slabperc {

class UnionFind {
public:
    void reset(std::size_t n) {
        parent_.resize(n);
        size_.assign(n, 1);
        for (std::size_t i = 0; i < n; ++i) parent_[i] = static_cast<std::uint32_t>(i);
    }

    std::uint32_t find(std::uint32_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]]; // path halving
            x = parent_[x];
        }
        return x;
    }

    bool unite(std::uint32_t a, std::uint32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (size_[a] < size_[b]) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
        return true;
    }

private:
    std::vector<std::uint32_t> parent_;
    std::vector<std::uint32_t> size_;
};

// A boxed sub-lattice with local dense vertex ids and the list of interior
// edges; built once per region and shared across replicas and queries.
class RegionGraph {
public:
    struct EdgeSlot {
        std::uint32_t u, v;      // local endpoints
        std::uint64_t global;    // lattice edge index
    };

    RegionGraph(const SlabLattice& lat, const Box3& box)
        : lat_(&lat), box_(box), k_(lat.thickness_k()) {
        if (!lat.contains(box)) throw window_error("RegionGraph: box outside window");
        wx_ = box.x_hi - box.x_lo + 1;
        wy_ = box.y_hi - box.y_lo + 1;
        n_local_ = static_cast<std::uint32_t>(static_cast<std::uint64_t>(wx_) * wy_ * (k_ + 1));
        edges_.reserve(static_cast<std::size_t>(n_local_) * 3);
        lat.for_region_edges(box, [&](std::uint64_t ge, std::uint64_t ga, std::uint64_t gb) {
            edges_.push_back({local_of_global(ga), local_of_global(gb), ge});
        });
        build_adjacency();
    }

    const SlabLattice& lattice() const { return *lat_; }
    const Box3& box() const { return box_; }
    std::int32_t k() const { return k_; }
    std::uint32_t vertex_count() const { return n_local_; }
    const std::vector<EdgeSlot>& edges() const { return edges_; }

    std::uint32_t local(const Vertex& v) const {
        return static_cast<std::uint32_t>(
            (static_cast<std::uint64_t>(v.z) * wy_ + (v.y - box_.y_lo)) * wx_ + (v.x - box_.x_lo));
    }
    Vertex vertex(std::uint32_t local_id) const {
        std::int32_t x = static_cast<std::int32_t>(local_id % wx_);
        local_id /= wx_;
        std::int32_t y = static_cast<std::int32_t>(local_id % wy_);
        std::int32_t z = static_cast<std::int32_t>(local_id / wy_);
        return {box_.x_lo + x, box_.y_lo + y, z};
    }

    // Neighbors as (neighbor local id, slot index into edges()).
    template <typename Fn>
    void for_adjacent(std::uint32_t u, Fn&& fn) const {
        for (std::uint32_t i = adj_off_[u]; i < adj_off_[u + 1]; ++i)
            fn(adj_vertex_[i], adj_slot_[i]);
    }

    std::vector<std::uint32_t> locals(const std::vector<Vertex>& vs) const {
        std::vector<std::uint32_t> out;
        out.reserve(vs.size());
        for (const auto& v : vs) {
            if (!box_.contains_xy(v.x, v.y) || v.z < 0 || v.z > k_)
                throw window_error("vertex outside region");
            out.push_back(local(v));
        }
        return out;
    }

private:
    std::uint32_t local_of_global(std::uint64_t g) const {
        Vertex v = lat_->vertex_at(g);
        return local(v);
    }

    void build_adjacency() {
        adj_off_.assign(n_local_ + 1, 0);
        for (const auto& e : edges_) {
            ++adj_off_[e.u + 1];
            ++adj_off_[e.v + 1];
        }
        for (std::uint32_t i = 0; i < n_local_; ++i) adj_off_[i + 1] += adj_off_[i];
        adj_vertex_.resize(adj_off_[n_local_]);
        adj_slot_.resize(adj_off_[n_local_]);
        std::vector<std::uint32_t> cursor(adj_off_.begin(), adj_off_.end() - 1);
        for (std::uint32_t s = 0; s < edges_.size(); ++s) {
            const auto& e = edges_[s];
            adj_vertex_[cursor[e.u]] = e.v;
            adj_slot_[cursor[e.u]++] = s;
            adj_vertex_[cursor[e.v]] = e.u;
            adj_slot_[cursor[e.v]++] = s;
        }
    }

    const SlabLattice* lat_;
    Box3 box_;
    std::int32_t k_, wx_, wy_;
    std::uint32_t n_local_ = 0;
    std::vector<EdgeSlot> edges_;
    std::vector<std::uint32_t> adj_off_, adj_vertex_, adj_slot_;
};

namespace detail {

// Multi-source BFS over open edges, with optional deleted-vertex mask and
// optional deleted-edge mask (by slot). Marks reached[] with `mark`.
inline void open_bfs(const RegionGraph& rg, const BondConfiguration& cfg,
                     const std::vector<std::uint32_t>& sources,
                     std::vector<std::uint32_t>& reached, std::uint32_t mark,
                     const std::vector<char>* deleted_vertex = nullptr,
                     std::vector<std::uint32_t>* queue_buf = nullptr) {
    std::vector<std::uint32_t> local_queue;
    std::vector<std::uint32_t>& queue = queue_buf ? *queue_buf : local_queue;
    queue.clear();
    for (auto s : sources) {
        if (deleted_vertex && (*deleted_vertex)[s]) continue;
        if (reached[s] != mark) {
            reached[s] = mark;
            queue.push_back(s);
        }
    }
    const auto& edges = rg.edges();
    for (std::size_t head = 0; head < queue.size(); ++head) {
        std::uint32_t u = queue[head];
        rg.for_adjacent(u, [&](std::uint32_t v, std::uint32_t slot) {
            if (reached[v] == mark) return;
            if (!cfg.is_open(edges[slot].global)) return;
            if (deleted_vertex && (*deleted_vertex)[v]) return;
            reached[v] = mark;
            queue.push_back(v);
        });
    }
}

} // namespace detail

// Some vertex of A joined to some vertex of B by an open path inside the
// region. Empty A or B gives false.
inline bool connected(const BondConfiguration& cfg, const RegionGraph& rg,
                      const std::vector<Vertex>& A, const std::vector<Vertex>& B) {
    if (A.empty() || B.empty()) return false;
    auto la = rg.locals(A);
    auto lb = rg.locals(B);
    std::vector<char> in_b(rg.vertex_count(), 0);
    for (auto b : lb) in_b[b] = 1;
    for (auto a : la)
        if (in_b[a]) return true; // shared vertex: connected by the empty path
    UnionFind uf;
    uf.reset(rg.vertex_count());
    for (const auto& e : rg.edges())
        if (cfg.is_open(e.global)) uf.unite(e.u, e.v);
    for (std::size_t i = 1; i < la.size(); ++i) uf.unite(la[0], la[i]);
    std::uint32_t root_a = uf.find(la[0]);
    for (auto b : lb)
        if (uf.find(b) == root_a) return true;
    return false;
}

inline bool connected(const BondConfiguration& cfg, const Box3& region,
                      const std::vector<Vertex>& A, const std::vector<Vertex>& B) {
    RegionGraph rg(*cfg.lattice, region);
    return connected(cfg, rg, A, B);
}

// BFS route used as the dual-implementation check of connected().
inline bool connected_bfs(const BondConfiguration& cfg, const RegionGraph& rg,
                          const std::vector<Vertex>& A, const std::vector<Vertex>& B) {
    if (A.empty() || B.empty()) return false;
    auto la = rg.locals(A);
    auto lb = rg.locals(B);
    std::vector<std::uint32_t> reached(rg.vertex_count(), 0);
    detail::open_bfs(rg, cfg, la, reached, 1);
    for (auto b : lb)
        if (reached[b] == 1) return true;
    return false;
}

inline std::vector<Vertex> face_vertices(const Box3& box, std::int32_t k, Dir axis, bool high) {
    Box3 f = box;
    if (axis == Dir::X) f.x_lo = f.x_hi = high ? box.x_hi : box.x_lo;
    else f.y_lo = f.y_hi = high ? box.y_hi : box.y_lo;
    return box_vertices(f, k);
}

// H(B): left face to right face inside E(B). A zero-width box has
// coinciding faces and crosses by convention.
inline bool crossing_h(const BondConfiguration& cfg, const RegionGraph& rg) {
    const Box3& b = rg.box();
    if (b.x_lo == b.x_hi) return true;
    return connected(cfg, rg, face_vertices(b, rg.k(), Dir::X, false),
                     face_vertices(b, rg.k(), Dir::X, true));
}

inline bool crossing_v(const BondConfiguration& cfg, const RegionGraph& rg) {
    const Box3& b = rg.box();
    if (b.y_lo == b.y_hi) return true;
    return connected(cfg, rg, face_vertices(b, rg.k(), Dir::Y, false),
                     face_vertices(b, rg.k(), Dir::Y, true));
}

inline bool crossing_h(const BondConfiguration& cfg, const Box3& box) {
    RegionGraph rg(*cfg.lattice, box);
    return crossing_h(cfg, rg);
}
inline bool crossing_v(const BondConfiguration& cfg, const Box3& box) {
    RegionGraph rg(*cfg.lattice, box);
    return crossing_v(cfg, rg);
}

// One-arm event: the box center (layer 0) connects to the box's vertex
// boundary inside the box. The boundary convention is the infinite slab's,
// so a box flush against the quarter-space walls has no boundary there.
inline bool one_arm(const BondConfiguration& cfg, const RegionGraph& rg) {
    const Box3& b = rg.box();
    Vertex center{(b.x_lo + b.x_hi) / 2, (b.y_lo + b.y_hi) / 2, 0};
    return connected(cfg, rg, {center}, boundary_vertices(b, rg.k()));
}

struct OpenPath {
    std::vector<Vertex> vertices;            // self-avoiding, first in A, last in B
    std::vector<std::uint64_t> edge_indices; // global ids, empty for a single vertex
};

// The order-minimal open self-avoiding path from A to B: smallest feasible
// start vertex, then repeatedly the smallest open neighbor from which B is
// still reachable after deleting the vertices already used; stops at the
// first vertex of B. Lexicographic vertex order, prefix-first path order.
inline std::optional<OpenPath> minimal_open_path(const BondConfiguration& cfg,
                                                 const RegionGraph& rg,
                                                 const std::vector<Vertex>& A,
                                                 const std::vector<Vertex>& B) {
    if (A.empty() || B.empty()) return std::nullopt;
    auto la = rg.locals(A);
    auto lb = rg.locals(B);
    std::vector<char> in_b(rg.vertex_count(), 0);
    for (auto b : lb) in_b[b] = 1;

    std::vector<std::uint32_t> reached(rg.vertex_count(), 0);
    std::uint32_t mark = 0;
    std::vector<std::uint32_t> queue_buf;
    std::vector<char> used(rg.vertex_count(), 0);

    // Feasibility pass for the start: reachability from B over open edges.
    detail::open_bfs(rg, cfg, lb, reached, ++mark, nullptr, &queue_buf);
    bool have_start = false;
    std::uint32_t start = 0;
    for (auto a : la) {
        if (reached[a] != mark && !in_b[a]) continue;
        if (!have_start || rg.vertex(a) < rg.vertex(start)) {
            start = a;
            have_start = true;
        }
    }
    if (!have_start) return std::nullopt;

    OpenPath path;
    const auto& edges = rg.edges();
    std::uint32_t current = start;
    used[current] = 1;
    path.vertices.push_back(rg.vertex(current));
    while (!in_b[current]) {
        // Vertices of B stay unused (the walk stops on first contact), so
        // they always qualify as BFS sources.
        detail::open_bfs(rg, cfg, lb, reached, ++mark, &used, &queue_buf);
        bool found = false;
        std::uint32_t best = 0;
        std::uint32_t best_slot = 0;
        rg.for_adjacent(current, [&](std::uint32_t v, std::uint32_t slot) {
            if (used[v] || !cfg.is_open(edges[slot].global)) return;
            if (reached[v] != mark) return;
            if (!found || rg.vertex(v) < rg.vertex(best)) {
                best = v;
                best_slot = slot;
                found = true;
            }
        });
        if (!found) return std::nullopt; // cannot happen: start was feasible
        used[best] = 1;
        path.vertices.push_back(rg.vertex(best));
        path.edge_indices.push_back(edges[best_slot].global);
        current = best;
    }
    return path;
}

// Closed edges with an endpoint in the open cluster of A (inside the region).
inline std::vector<std::uint64_t> closed_boundary(const BondConfiguration& cfg,
                                                  const RegionGraph& rg,
                                                  const std::vector<Vertex>& A) {
    auto la = rg.locals(A);
    std::vector<std::uint32_t> reached(rg.vertex_count(), 0);
    detail::open_bfs(rg, cfg, la, reached, 1);
    std::vector<std::uint64_t> out;
    for (const auto& e : rg.edges()) {
        if (cfg.is_open(e.global)) continue;
        if (reached[e.u] == 1 || reached[e.v] == 1) out.push_back(e.global);
    }
    return out;
}

struct Cutset {
    std::vector<std::uint64_t> edges; // global ids, ascending
};

// The nearest cutset to A: when A and B are not connected, the unique
// minimal closed cutset inside the closed boundary of A's cluster. An edge
// of the closed boundary belongs to it iff its non-cluster endpoint still
// reaches B once every closed-boundary edge is deleted from the full
// (state-agnostic) region graph.
inline std::optional<Cutset> nearest_cutset(const BondConfiguration& cfg, const RegionGraph& rg,
                                            const std::vector<Vertex>& A,
                                            const std::vector<Vertex>& B) {
    require(!A.empty() && !B.empty(), "nearest_cutset: A and B must be nonempty");
    auto la = rg.locals(A);
    auto lb = rg.locals(B);
    {
        std::vector<char> in_b(rg.vertex_count(), 0);
        for (auto b : lb) in_b[b] = 1;
        for (auto a : la)
            require(!in_b[a], "nearest_cutset: A and B must be disjoint");
    }

    const auto& edges = rg.edges();
    // Open cluster of A.
    std::vector<std::uint32_t> reached(rg.vertex_count(), 0);
    detail::open_bfs(rg, cfg, la, reached, 1);
    for (auto b : lb)
        if (reached[b] == 1) return std::nullopt; // connected: no cutset

    // Closed boundary, as slots.
    std::vector<char> boundary_slot(edges.size(), 0);
    for (std::uint32_t s = 0; s < edges.size(); ++s) {
        const auto& e = edges[s];
        if (cfg.is_open(e.global)) continue;
        if (reached[e.u] == 1 || reached[e.v] == 1) boundary_slot[s] = 1;
    }

    // Reachability to B in the full graph minus the closed boundary.
    std::vector<char> reach_b(rg.vertex_count(), 0);
    {
        std::vector<std::uint32_t> queue;
        for (auto b : lb)
            if (!reach_b[b]) {
                reach_b[b] = 1;
                queue.push_back(b);
            }
        for (std::size_t head = 0; head < queue.size(); ++head) {
            std::uint32_t u = queue[head];
            rg.for_adjacent(u, [&](std::uint32_t v, std::uint32_t slot) {
                if (reach_b[v] || boundary_slot[slot]) return;
                reach_b[v] = 1;
                queue.push_back(v);
            });
        }
    }

    Cutset cut;
    for (std::uint32_t s = 0; s < edges.size(); ++s) {
        if (!boundary_slot[s]) continue;
        const auto& e = edges[s];
        bool u_in = reached[e.u] == 1, v_in = reached[e.v] == 1;
        if (u_in && v_in) continue; // interior closed edge of the cluster
        std::uint32_t outside = u_in ? e.v : e.u;
        if (reach_b[outside]) cut.edges.push_back(e.global);
    }
    return cut;
}

// Test helpers for the cutset contracts.
inline bool separates(const RegionGraph& rg, const std::vector<std::uint64_t>& cut,
                      const std::vector<Vertex>& A, const std::vector<Vertex>& B) {
    std::vector<char> banned(rg.edges().size(), 0);
    for (std::uint32_t s = 0; s < rg.edges().size(); ++s)
        for (auto g : cut)
            if (rg.edges()[s].global == g) banned[s] = 1;
    auto la = rg.locals(A);
    auto lb = rg.locals(B);
    std::vector<char> seen(rg.vertex_count(), 0);
    std::vector<std::uint32_t> queue;
    for (auto a : la)
        if (!seen[a]) {
            seen[a] = 1;
            queue.push_back(a);
        }
    for (std::size_t head = 0; head < queue.size(); ++head) {
        rg.for_adjacent(queue[head], [&](std::uint32_t v, std::uint32_t slot) {
            if (seen[v] || banned[slot]) return;
            seen[v] = 1;
            queue.push_back(v);
        });
    }
    for (auto b : lb)
        if (seen[b]) return false;
    return true;
}

inline bool is_minimal_cutset(const RegionGraph& rg, const std::vector<std::uint64_t>& cut,
                              const std::vector<Vertex>& A, const std::vector<Vertex>& B) {
    if (!separates(rg, cut, A, B)) return false;
    for (std::size_t i = 0; i < cut.size(); ++i) {
        std::vector<std::uint64_t> reduced;
        for (std::size_t j = 0; j < cut.size(); ++j)
            if (j != i) reduced.push_back(cut[j]);
        if (separates(rg, reduced, A, B)) return false;
    }
    return true;
}

// Pivotality of an edge for a pure configuration predicate: the event
// differs between the edge forced open and forced closed.
template <typename EventFn>
inline bool is_pivotal(const BondConfiguration& cfg, std::uint64_t edge, EventFn&& event) {
    BondConfiguration work = cfg;
    work.open.set(edge, true);
    bool with_open = event(static_cast<const BondConfiguration&>(work));
    work.open.set(edge, false);
    bool with_closed = event(static_cast<const BondConfiguration&>(work));
    return with_open != with_closed;
}

} // namespace slabperc
