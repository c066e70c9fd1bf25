#pragma once

// Finite windows of the slab: vertices Z_+^2 x {0..k} with nearest-neighbor
// edges, dense vertex/edge indexing, and the named block-construction regions.
//
// All boxes live in absolute window coordinates. The renormalized-coordinate
// translation A_n(x) = 2nx + A + (n,n) keeps every region non-negative for
// x in Z_+^2, so the window is simply a large enough corner of the slab.

#include <cstdint>
#include <string>
#include <vector>

#include "common.hpp"

namespace slabperc {

struct Vertex {
    std::int32_t x = 0, y = 0, z = 0;

    friend bool operator==(const Vertex&, const Vertex&) = default;
    // Lexicographic vertex order used by the path ordering.
    friend bool operator<(const Vertex& a, const Vertex& b) {
        if (a.x != b.x) return a.x < b.x;
        if (a.y != b.y) return a.y < b.y;
        return a.z < b.z;
    }
};

// Axis-aligned region spanning all k+1 layers of the slab.
struct Box3 {
    std::int32_t x_lo = 0, x_hi = 0, y_lo = 0, y_hi = 0;

    friend bool operator==(const Box3&, const Box3&) = default;

    std::int64_t width() const { return std::int64_t{x_hi} - x_lo + 1; }
    std::int64_t height() const { return std::int64_t{y_hi} - y_lo + 1; }
    bool contains_xy(std::int32_t x, std::int32_t y) const {
        return x >= x_lo && x <= x_hi && y >= y_lo && y <= y_hi;
    }
    bool contains(const Box3& inner) const {
        return inner.x_lo >= x_lo && inner.x_hi <= x_hi &&
               inner.y_lo >= y_lo && inner.y_hi <= y_hi;
    }
    Box3 translated(std::int32_t dx, std::int32_t dy) const {
        return {x_lo + dx, x_hi + dx, y_lo + dy, y_hi + dy};
    }
};

enum class Dir : std::uint8_t { X = 0, Y = 1, Z = 2 };

struct Edge {
    Vertex a, b; // canonical: a < b, endpoints at L1 distance 1

    friend bool operator==(const Edge&, const Edge&) = default;
    Dir dir() const {
        if (b.x != a.x) return Dir::X;
        if (b.y != a.y) return Dir::Y;
        return Dir::Z;
    }
};

class SlabLattice {
public:
    SlabLattice(std::int32_t extent_x, std::int32_t extent_y, std::int32_t thickness_k)
        : nx_(extent_x), ny_(extent_y), k_(thickness_k) {
        require(nx_ >= 1 && ny_ >= 1 && k_ >= 0, "SlabLattice: extents must be positive, k >= 0");
        nz_ = k_ + 1;
        n_x_edges_ = static_cast<std::uint64_t>(nx_ - 1) * ny_ * nz_;
        n_y_edges_ = static_cast<std::uint64_t>(nx_) * (ny_ - 1) * nz_;
        n_z_edges_ = static_cast<std::uint64_t>(nx_) * ny_ * k_;
    }

    std::int32_t extent_x() const { return nx_; }
    std::int32_t extent_y() const { return ny_; }
    std::int32_t thickness_k() const { return k_; }
    std::int32_t layers() const { return nz_; }

    std::uint64_t vertex_count() const {
        return static_cast<std::uint64_t>(nx_) * ny_ * nz_;
    }
    std::uint64_t edge_count() const { return n_x_edges_ + n_y_edges_ + n_z_edges_; }

    bool contains(const Vertex& v) const {
        return v.x >= 0 && v.x < nx_ && v.y >= 0 && v.y < ny_ && v.z >= 0 && v.z <= k_;
    }
    bool contains(const Box3& b) const {
        return b.x_lo >= 0 && b.x_hi < nx_ && b.y_lo >= 0 && b.y_hi < ny_ && b.x_lo <= b.x_hi &&
               b.y_lo <= b.y_hi;
    }
    Box3 full_box() const { return {0, nx_ - 1, 0, ny_ - 1}; }

    std::uint64_t vertex_index(const Vertex& v) const {
        return (static_cast<std::uint64_t>(v.z) * ny_ + v.y) * nx_ + v.x;
    }
    Vertex vertex_at(std::uint64_t idx) const {
        std::int32_t x = static_cast<std::int32_t>(idx % nx_);
        idx /= nx_;
        std::int32_t y = static_cast<std::int32_t>(idx % ny_);
        std::int32_t z = static_cast<std::int32_t>(idx / ny_);
        return {x, y, z};
    }

    // Dense edge indexing, direction-major, then (z, y, x).
    std::uint64_t edge_index(const Edge& e) const {
        const Vertex& a = e.a;
        switch (e.dir()) {
        case Dir::X:
            return (static_cast<std::uint64_t>(a.z) * ny_ + a.y) * (nx_ - 1) + a.x;
        case Dir::Y:
            return n_x_edges_ + (static_cast<std::uint64_t>(a.z) * (ny_ - 1) + a.y) * nx_ + a.x;
        case Dir::Z:
            return n_x_edges_ + n_y_edges_ +
                   (static_cast<std::uint64_t>(a.z) * ny_ + a.y) * nx_ + a.x;
        }
        return 0; // unreachable
    }

    Edge edge_at(std::uint64_t idx) const {
        if (idx < n_x_edges_) {
            std::int32_t x = static_cast<std::int32_t>(idx % (nx_ - 1));
            std::uint64_t rest = idx / (nx_ - 1);
            std::int32_t y = static_cast<std::int32_t>(rest % ny_);
            std::int32_t z = static_cast<std::int32_t>(rest / ny_);
            return {{x, y, z}, {x + 1, y, z}};
        }
        idx -= n_x_edges_;
        if (idx < n_y_edges_) {
            std::int32_t x = static_cast<std::int32_t>(idx % nx_);
            std::uint64_t rest = idx / nx_;
            std::int32_t y = static_cast<std::int32_t>(rest % (ny_ - 1));
            std::int32_t z = static_cast<std::int32_t>(rest / (ny_ - 1));
            return {{x, y, z}, {x, y + 1, z}};
        }
        idx -= n_y_edges_;
        std::int32_t x = static_cast<std::int32_t>(idx % nx_);
        std::uint64_t rest = idx / nx_;
        std::int32_t y = static_cast<std::int32_t>(rest % ny_);
        std::int32_t z = static_cast<std::int32_t>(rest / ny_);
        return {{x, y, z}, {x, y, z + 1}};
    }

    // Visits every edge with both endpoints in `box` (all layers) as
    // fn(edge_index, vertex_index_a, vertex_index_b).
    template <typename Fn>
    void for_region_edges(const Box3& box, Fn&& fn) const {
        if (!contains(box)) throw window_error("region outside lattice window");
        for (std::int32_t z = 0; z <= k_; ++z) {
            for (std::int32_t y = box.y_lo; y <= box.y_hi; ++y) {
                std::uint64_t row_v = (static_cast<std::uint64_t>(z) * ny_ + y) * nx_;
                std::uint64_t row_ex = (static_cast<std::uint64_t>(z) * ny_ + y) * (nx_ - 1);
                for (std::int32_t x = box.x_lo; x < box.x_hi; ++x)
                    fn(row_ex + x, row_v + x, row_v + x + 1);
            }
            for (std::int32_t y = box.y_lo; y < box.y_hi; ++y) {
                std::uint64_t row_v = (static_cast<std::uint64_t>(z) * ny_ + y) * nx_;
                std::uint64_t row_ey =
                    n_x_edges_ + (static_cast<std::uint64_t>(z) * (ny_ - 1) + y) * nx_;
                for (std::int32_t x = box.x_lo; x <= box.x_hi; ++x)
                    fn(row_ey + x, row_v + x, row_v + nx_ + x);
            }
        }
        std::uint64_t layer_v = static_cast<std::uint64_t>(nx_) * ny_;
        for (std::int32_t z = 0; z < k_; ++z) {
            for (std::int32_t y = box.y_lo; y <= box.y_hi; ++y) {
                std::uint64_t row_v = (static_cast<std::uint64_t>(z) * ny_ + y) * nx_;
                std::uint64_t row_ez =
                    n_x_edges_ + n_y_edges_ + (static_cast<std::uint64_t>(z) * ny_ + y) * nx_;
                for (std::int32_t x = box.x_lo; x <= box.x_hi; ++x)
                    fn(row_ez + x, row_v + x, row_v + layer_v + x);
            }
        }
    }

    // Up to 6 neighbors of v inside the slab (quarter-space in x,y; capped z).
    template <typename Fn>
    void for_neighbors(const Vertex& v, Fn&& fn) const {
        if (v.x > 0) fn(Vertex{v.x - 1, v.y, v.z});
        if (v.x + 1 < nx_) fn(Vertex{v.x + 1, v.y, v.z});
        if (v.y > 0) fn(Vertex{v.x, v.y - 1, v.z});
        if (v.y + 1 < ny_) fn(Vertex{v.x, v.y + 1, v.z});
        if (v.z > 0) fn(Vertex{v.x, v.y, v.z - 1});
        if (v.z < k_) fn(Vertex{v.x, v.y, v.z + 1});
    }

private:
    std::int32_t nx_, ny_, k_, nz_;
    std::uint64_t n_x_edges_, n_y_edges_, n_z_edges_;
};

// The named sub-regions of the block construction.
enum class RegionKind { B, LB, RB, LS, RS, BS, TS, HR, VR };

struct Coarse {
    std::int32_t x = 0, y = 0; // renormalized coordinate in Z_+^2

    friend bool operator==(const Coarse&, const Coarse&) = default;
};

// Region in absolute coordinates: the base set translated by 2nx + (n,n).
// Requires n even so that n/2 is exact.
inline Box3 region_box(RegionKind kind, std::int32_t n, Coarse c) {
    require(n >= 2 && n % 2 == 0, "region_box: n must be even and >= 2");
    const std::int32_t ox = 2 * n * c.x + n; // absolute position of the block center
    const std::int32_t oy = 2 * n * c.y + n;
    const std::int32_t h = n / 2;
    switch (kind) {
    case RegionKind::B:  return {ox - n, ox + n, oy - n, oy + n};
    case RegionKind::LB: return {ox - n, ox - h, oy - n, oy - h};
    case RegionKind::RB: return {ox + h, ox + n, oy + h, oy + n};
    case RegionKind::LS: return {ox - n, ox - n, oy - h, oy + h};
    case RegionKind::RS: return {ox + n, ox + n, oy - h, oy + h};
    case RegionKind::BS: return {ox - h, ox + h, oy - n, oy - n};
    case RegionKind::TS: return {ox - h, ox + h, oy + n, oy + n};
    case RegionKind::HR: return {ox - n, ox + 3 * n, oy - h, oy + h};
    case RegionKind::VR: return {ox - h, ox + h, oy - n, oy + 3 * n};
    }
    throw param_error("region_box: unknown kind");
}

// The correlation-length proof regions, shifted by +(N,N) so that the
// radius-N box sits at the window corner.
struct ProofRegions {
    Box3 box_N;      // [0,2N]^2
    Box3 r_prime;    // lower half
    Box3 r_dprime;   // central vertical strip
    Box3 q;          // thin horizontal band in the upper part
};

inline ProofRegions proof_regions(std::int32_t N) {
    require(N > 0 && N % 12 == 0, "proof_regions: N must be a positive multiple of 12");
    ProofRegions r;
    r.box_N = {0, 2 * N, 0, 2 * N};
    r.r_prime = {0, 2 * N, 0, N};
    r.r_dprime = {N / 2, 3 * N / 2, 0, 2 * N};
    r.q = {0, 2 * N, N + 4 * N / 6, N + 5 * N / 6};
    return r;
}

// Vertex boundary of a bold box relative to the infinite slab: a vertex is
// on the boundary iff it has a slab neighbor outside the box. The z
// direction never exits (boxes span all layers), and the x=0 / y=0 walls of
// the quarter-space have no outside neighbor.
inline bool on_box_boundary(const Box3& box, std::int32_t x, std::int32_t y) {
    if (x == box.x_lo && box.x_lo > 0) return true;
    if (x == box.x_hi) return true;
    if (y == box.y_lo && box.y_lo > 0) return true;
    if (y == box.y_hi) return true;
    return false;
}

template <typename Fn>
inline void for_box_boundary(const Box3& box, std::int32_t k, Fn&& fn) {
    for (std::int32_t z = 0; z <= k; ++z)
        for (std::int32_t y = box.y_lo; y <= box.y_hi; ++y)
            for (std::int32_t x = box.x_lo; x <= box.x_hi; ++x)
                if (on_box_boundary(box, x, y)) fn(Vertex{x, y, z});
}

inline std::vector<Vertex> box_vertices(const Box3& box, std::int32_t k) {
    std::vector<Vertex> out;
    out.reserve(static_cast<std::size_t>(box.width() * box.height() * (k + 1)));
    for (std::int32_t z = 0; z <= k; ++z)
        for (std::int32_t y = box.y_lo; y <= box.y_hi; ++y)
            for (std::int32_t x = box.x_lo; x <= box.x_hi; ++x)
                out.push_back({x, y, z});
    return out;
}

inline std::vector<Vertex> boundary_vertices(const Box3& box, std::int32_t k) {
    std::vector<Vertex> out;
    for_box_boundary(box, k, [&](const Vertex& v) { out.push_back(v); });
    return out;
}

} // namespace slabperc
