#pragma once

// Monte Carlo estimation: event probabilities with Wilson intervals,
// directed-crossing probabilities f_p(n,m), the correlation length search,
// the critical-point bisection, Russo pivotal sums, and power-law fits.
//
// Replica r of a run with master seed s draws its edge uniforms from the
// counter-based field (s, r); estimates are therefore bit-reproducible and
// independent of the parallel schedule, and common random numbers across
// parameter values give exact (pointwise) monotonicity for increasing
// events.

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "common.hpp"
#include "connectivity.hpp"
#include "environment.hpp"
#include "lattice.hpp"
#include "rng.hpp"
#include "sampler.hpp"

namespace slabperc {

struct McEstimate {
    std::uint64_t successes = 0;
    std::uint64_t replicas = 0;
    double mean = 0.0;
    double ci_lo = 0.0; // Wilson 95%
    double ci_hi = 0.0;
    std::uint64_t seed = 0;

    // Binomial standard error at the point estimate.
    double stderr_() const {
        if (replicas == 0) return 0.0;
        double n = static_cast<double>(replicas);
        return std::sqrt(mean * (1.0 - mean) / n);
    }
};

inline McEstimate wilson_estimate(std::uint64_t successes, std::uint64_t replicas,
                                  std::uint64_t seed) {
    require(replicas >= 1, "estimate: replicas must be positive");
    McEstimate e;
    e.successes = successes;
    e.replicas = replicas;
    e.seed = seed;
    const double z = 1.959963984540054; // 95%
    double n = static_cast<double>(replicas);
    double phat = static_cast<double>(successes) / n;
    double z2 = z * z;
    double denom = 1.0 + z2 / n;
    double center = (phat + z2 / (2.0 * n)) / denom;
    double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
    e.mean = phat;
    e.ci_lo = center - half > 0.0 ? center - half : 0.0;
    e.ci_hi = center + half < 1.0 ? center + half : 1.0;
    // The interval always contains the point estimate, exactly at the ends.
    if (successes == 0) e.ci_lo = 0.0;
    if (successes == replicas) e.ci_hi = 1.0;
    return e;
}

// Mean of a count-valued statistic (pivotal sums), with its standard error.
struct MeanEstimate {
    double mean = 0.0;
    double se = 0.0;
    std::uint64_t replicas = 0;
    std::uint64_t seed = 0;
};

// Generic sampled-event estimator: one configuration per replica.
template <typename EventFn>
McEstimate estimate_event(const ThresholdTable& table, EventFn&& event, std::uint64_t replicas,
                          std::uint64_t seed, unsigned threads = 0) {
    require(replicas >= 1, "estimate_event: replicas must be positive");
    std::uint64_t hits = parallel_count(
        replicas,
        [&](std::uint64_t r) {
            BondConfiguration cfg = sample(table, UniformField(seed, r));
            return event(static_cast<const BondConfiguration&>(cfg));
        },
        threads);
    return wilson_estimate(hits, replicas, seed);
}

// Fused sampler + union-find crossing test over one boxed lattice window.
// No configuration is materialized; each edge uniform is compared against
// its threshold as the union pass runs.
class CrossingExperiment {
public:
    CrossingExperiment(const SlabLattice& lat, const Box3& box, Dir axis, double p)
        : rg_(lat, box), thresholds_(rg_.edges().size(), open_threshold(p)) {
        init_faces(axis);
    }

    CrossingExperiment(const SlabLattice& lat, const Box3& box, Dir axis,
                       const ThresholdTable& table)
        : rg_(lat, box) {
        thresholds_.reserve(rg_.edges().size());
        for (const auto& e : rg_.edges()) thresholds_.push_back(table.threshold(e.global));
        init_faces(axis);
    }

    bool evaluate(std::uint64_t seed, std::uint64_t replica) const {
        thread_local UnionFind uf;
        uf.reset(rg_.vertex_count() + 2);
        const std::uint32_t s = rg_.vertex_count();
        const std::uint32_t t = s + 1;
        UniformField field(seed, replica);
        const auto& edges = rg_.edges();
        for (std::size_t i = 0; i < edges.size(); ++i)
            if (field.word(edges[i].global) < thresholds_[i]) uf.unite(edges[i].u, edges[i].v);
        for (auto a : face_a_) uf.unite(s, a);
        for (auto b : face_b_) uf.unite(t, b);
        return degenerate_ || uf.find(s) == uf.find(t);
    }

    McEstimate estimate(std::uint64_t replicas, std::uint64_t seed, unsigned threads = 0) const {
        std::uint64_t hits = parallel_count(
            replicas, [&](std::uint64_t r) { return evaluate(seed, r); }, threads);
        return wilson_estimate(hits, replicas, seed);
    }

    void set_uniform_p(double p) {
        thresholds_.assign(rg_.edges().size(), open_threshold(p));
    }

    const RegionGraph& region() const { return rg_; }

private:
    void init_faces(Dir axis) {
        const Box3& b = rg_.box();
        degenerate_ = (axis == Dir::X) ? b.x_lo == b.x_hi : b.y_lo == b.y_hi;
        for (const auto& v : face_vertices(b, rg_.k(), axis, false)) face_a_.push_back(rg_.local(v));
        for (const auto& v : face_vertices(b, rg_.k(), axis, true)) face_b_.push_back(rg_.local(v));
    }

    RegionGraph rg_;
    std::vector<std::uint64_t> thresholds_;
    std::vector<std::uint32_t> face_a_, face_b_;
    bool degenerate_ = false;
};

// f_p(n,m): horizontal crossing of [0,n] x [0,m] x [0,k] under homogeneous p.
inline McEstimate estimate_f(std::uint32_t n, std::uint32_t m, double p, std::int32_t k,
                             std::uint64_t replicas, std::uint64_t seed, unsigned threads = 0) {
    require(n >= 1 && m >= 1, "estimate_f: n and m must be positive");
    SlabLattice lat(static_cast<std::int32_t>(n) + 1, static_cast<std::int32_t>(m) + 1, k);
    CrossingExperiment ex(lat, lat.full_box(), Dir::X, p);
    return ex.estimate(replicas, seed, threads);
}

struct CorrLenProbe {
    std::uint32_t n = 0;
    double estimate = 0.0;
};

struct CorrLenResult {
    bool saturated = false;
    std::uint32_t value = 0;              // defined when !saturated
    std::vector<CorrLenProbe> probes;     // every n evaluated by the search
};

// L_tau(p): smallest n whose 2n x n horizontal-crossing estimate reaches
// 1 - tau, found by doubling then bisection. Point estimates with common
// random numbers make the search result exactly monotone in p.
inline CorrLenResult estimate_corrlen(double p, double tau, std::int32_t k,
                                      std::uint64_t replicas, std::uint32_t n_max,
                                      std::uint64_t seed, unsigned threads = 0) {
    require(p > 0.0 && p <= 1.0, "estimate_corrlen: p must lie in (0,1]");
    require(tau > 0.0 && tau < 1.0, "estimate_corrlen: tau must lie in (0,1)");
    CorrLenResult result;
    auto probe = [&](std::uint32_t n) {
        SlabLattice lat(2 * static_cast<std::int32_t>(n) + 1, static_cast<std::int32_t>(n) + 1, k);
        CrossingExperiment ex(lat, lat.full_box(), Dir::X, p);
        double est = ex.estimate(replicas, seed, threads).mean;
        result.probes.push_back({n, est});
        return est >= 1.0 - tau;
    };

    std::uint32_t hi = 1;
    std::uint32_t lo = 0;
    bool found = false;
    while (hi <= n_max) {
        if (probe(hi)) {
            found = true;
            break;
        }
        lo = hi;
        hi = hi * 2;
    }
    if (!found) {
        result.saturated = true;
        return result;
    }
    while (hi - lo > 1) {
        std::uint32_t mid = lo + (hi - lo) / 2;
        if (probe(mid)) hi = mid;
        else lo = mid;
    }
    result.value = hi;
    return result;
}

struct PcSizeResult {
    std::uint32_t size = 0;
    double p_half = 0.0; // bisected p with crossing estimate 1/2
};

struct PcResult {
    double estimate = 0.0;
    double spread = 0.0;
    std::vector<PcSizeResult> per_size;
};

// Critical-point estimator: for each box side n, bisect p until the
// crossing estimate of the self-dual-proportioned box ((n+1) x n vertices,
// all layers) equals 1/2; extrapolate by averaging the two largest sizes.
// Common random numbers across bisection steps make the estimated crossing
// probability a nondecreasing step function of p, so bisection is exact up
// to its resolution.
inline PcResult estimate_pc(std::int32_t k, const std::vector<std::uint32_t>& sizes,
                            std::uint64_t replicas, std::uint64_t seed, unsigned threads = 0,
                            int bisect_iters = 14) {
    require(!sizes.empty(), "estimate_pc: size grid must be nonempty");
    PcResult result;
    for (auto n : sizes) {
        require(n >= 2, "estimate_pc: sizes must be >= 2");
        SlabLattice lat(static_cast<std::int32_t>(n) + 1, static_cast<std::int32_t>(n), k);
        CrossingExperiment ex(lat, lat.full_box(), Dir::X, 0.5);
        auto probe = [&](double p) {
            ex.set_uniform_p(p);
            return ex.estimate(replicas, seed, threads).mean;
        };
        double lo = 0.15, hi = 0.85;
        double f_lo = probe(lo), f_hi = probe(hi);
        if (!(f_lo < 0.5 && f_hi > 0.5))
            throw size_error("estimate_pc: bisection bracket does not straddle 1/2");
        for (int it = 0; it < bisect_iters; ++it) {
            double mid = 0.5 * (lo + hi);
            if (probe(mid) >= 0.5) hi = mid;
            else lo = mid;
        }
        result.per_size.push_back({n, 0.5 * (lo + hi)});
    }
    std::size_t m = result.per_size.size();
    if (m == 1) {
        result.estimate = result.per_size[0].p_half;
        result.spread = 0.7 / (1 << bisect_iters);
    } else {
        double a = result.per_size[m - 2].p_half;
        double b = result.per_size[m - 1].p_half;
        result.estimate = 0.5 * (a + b);
        double d = a > b ? a - b : b - a;
        result.spread = d > 0.7 / (1 << bisect_iters) ? d : 0.7 / (1 << bisect_iters);
    }
    return result;
}

// Per-replica pivotal-edge detector for the vertical crossing V(B): reports
// every edge whose state alone decides the event. When the crossing holds,
// the pivotal edges are the open s-t bridges (a Tarjan lowpoint pass; a
// bridge separates s from t iff t lies in the subtree under it). When the
// crossing fails, they are the closed edges joining the bottom cluster to
// the top cluster.
class VerticalPivotalScanner {
public:
    VerticalPivotalScanner(const SlabLattice& lat, const Box3& box) : rg_(lat, box) {
        const std::uint32_t n = rg_.vertex_count();
        s_node_ = n;
        t_node_ = n + 1;
        const auto& edges = rg_.edges();
        n_real_ = static_cast<std::uint32_t>(edges.size());
        for (std::uint32_t s = 0; s < n_real_; ++s)
            aug_edges_.push_back({edges[s].u, edges[s].v});
        for (const auto& v : face_vertices(box, rg_.k(), Dir::Y, false)) {
            bottom_.push_back(rg_.local(v));
            aug_edges_.push_back({s_node_, rg_.local(v)});
        }
        for (const auto& v : face_vertices(box, rg_.k(), Dir::Y, true)) {
            top_.push_back(rg_.local(v));
            aug_edges_.push_back({t_node_, rg_.local(v)});
        }
        build_csr();
    }

    const RegionGraph& region() const { return rg_; }

    // Calls out(global_edge_index) for each pivotal edge; returns whether
    // the crossing holds.
    template <typename Out>
    bool scan(const BondConfiguration& cfg, Out&& out) const {
        const auto& edges = rg_.edges();
        thread_local UnionFind uf;
        uf.reset(rg_.vertex_count() + 2);
        for (const auto& e : edges)
            if (cfg.is_open(e.global)) uf.unite(e.u, e.v);
        for (auto b : bottom_) uf.unite(s_node_, b);
        for (auto t : top_) uf.unite(t_node_, t);

        if (uf.find(s_node_) != uf.find(t_node_)) {
            std::uint32_t rs = uf.find(s_node_), rt = uf.find(t_node_);
            for (const auto& e : edges) {
                if (cfg.is_open(e.global)) continue;
                std::uint32_t ru = uf.find(e.u), rv = uf.find(e.v);
                if ((ru == rs && rv == rt) || (ru == rt && rv == rs)) out(e.global);
            }
            return false;
        }
        scan_bridges(cfg, out);
        return true;
    }

private:
    bool slot_open(const BondConfiguration& cfg, std::uint32_t slot) const {
        return slot >= n_real_ || cfg.is_open(rg_.edges()[slot].global);
    }

    template <typename Out>
    void scan_bridges(const BondConfiguration& cfg, Out&& out) const {
        const std::uint32_t n_aug = rg_.vertex_count() + 2;
        thread_local std::vector<std::uint32_t> tin, tout, low, cursor, via;
        thread_local std::vector<std::uint32_t> stack;
        tin.assign(n_aug, 0);
        tout.assign(n_aug, 0);
        low.assign(n_aug, 0);
        cursor.assign(n_aug, 0);
        via.assign(n_aug, ~0u);
        stack.clear();

        std::uint32_t timer = 0;
        auto push = [&](std::uint32_t v, std::uint32_t via_slot) {
            tin[v] = low[v] = ++timer;
            via[v] = via_slot;
            cursor[v] = adj_off_[v];
            stack.push_back(v);
        };
        push(s_node_, ~0u);
        while (!stack.empty()) {
            std::uint32_t u = stack.back();
            bool descended = false;
            while (cursor[u] < adj_off_[u + 1]) {
                std::uint32_t i = cursor[u]++;
                std::uint32_t v = adj_vertex_[i];
                std::uint32_t slot = adj_slot_[i];
                if (slot == via[u]) continue;
                if (!slot_open(cfg, slot)) continue;
                if (tin[v] == 0) {
                    push(v, slot);
                    descended = true;
                    break;
                }
                if (tin[v] < low[u]) low[u] = tin[v];
            }
            if (descended) continue;
            tout[u] = timer;
            stack.pop_back();
            if (!stack.empty()) {
                std::uint32_t p = stack.back();
                if (low[u] < low[p]) low[p] = low[u];
                if (low[u] > tin[p]) {
                    // Tree edge p -> u is a bridge; it is s-t pivotal iff
                    // t sits in the subtree under u.
                    if (via[u] < n_real_ && tin[u] <= tin[t_node_] && tin[t_node_] <= tout[u])
                        out(rg_.edges()[via[u]].global);
                }
            }
        }
    }

    void build_csr() {
        const std::uint32_t n_aug = rg_.vertex_count() + 2;
        adj_off_.assign(n_aug + 1, 0);
        for (const auto& [u, v] : aug_edges_) {
            ++adj_off_[u + 1];
            ++adj_off_[v + 1];
        }
        for (std::uint32_t i = 0; i < n_aug; ++i) adj_off_[i + 1] += adj_off_[i];
        adj_vertex_.resize(adj_off_[n_aug]);
        adj_slot_.resize(adj_off_[n_aug]);
        std::vector<std::uint32_t> cur(adj_off_.begin(), adj_off_.end() - 1);
        for (std::uint32_t s = 0; s < aug_edges_.size(); ++s) {
            auto [u, v] = aug_edges_[s];
            adj_vertex_[cur[u]] = v;
            adj_slot_[cur[u]++] = s;
            adj_vertex_[cur[v]] = u;
            adj_slot_[cur[v]++] = s;
        }
    }

    RegionGraph rg_;
    std::uint32_t s_node_ = 0, t_node_ = 0, n_real_ = 0;
    std::vector<std::uint32_t> bottom_, top_;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> aug_edges_;
    std::vector<std::uint32_t> adj_off_, adj_vertex_, adj_slot_;
};

// Mean number of region edges pivotal for V(B_N), optionally restricted to
// an edge subset (empty filter = every edge of the box).
inline MeanEstimate russo_sum(const SlabLattice& lat, const Box3& box_N, double p,
                              const std::vector<std::uint64_t>& region_filter,
                              std::uint64_t replicas, std::uint64_t seed, unsigned threads = 0) {
    require(replicas >= 1, "russo_sum: replicas must be positive");
    VerticalPivotalScanner scanner(lat, box_N);
    std::vector<char> in_region;
    if (!region_filter.empty()) {
        in_region.assign(lat.edge_count(), 0);
        for (auto g : region_filter) {
            require(g < lat.edge_count(), "russo_sum: region edge outside the window");
            in_region[g] = 1;
        }
    }
    ThresholdTable table(lat, p);
    auto counts = parallel_map<std::uint32_t>(
        replicas,
        [&](std::uint64_t r) {
            BondConfiguration cfg = sample(table, UniformField(seed, r));
            std::uint32_t c = 0;
            scanner.scan(cfg, [&](std::uint64_t g) {
                if (in_region.empty() || in_region[g]) ++c;
            });
            return c;
        },
        threads);
    double sum = 0.0, sum2 = 0.0;
    for (auto c : counts) {
        sum += c;
        sum2 += static_cast<double>(c) * c;
    }
    MeanEstimate est;
    est.replicas = replicas;
    est.seed = seed;
    est.mean = sum / static_cast<double>(replicas);
    double var = sum2 / static_cast<double>(replicas) - est.mean * est.mean;
    est.se = var > 0.0 ? std::sqrt(var / static_cast<double>(replicas)) : 0.0;
    return est;
}

struct PowerLawFit {
    double amplitude = 0.0; // c1
    double exponent = 0.0;  // c2 in L <= c1 * x^(-c2)
    double r_squared = 0.0;
    std::size_t points = 0;
};

// Least squares of log L against log x for points (x, L) with x = p - pc.
inline PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& points) {
    require(points.size() >= 3, "fit_power_law: need at least 3 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (const auto& [x, L] : points) {
        require(x > 0.0 && L > 0.0 && std::isfinite(x) && std::isfinite(L),
                "fit_power_law: points must be finite and positive");
        double lx = std::log(x), ly = std::log(L);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        syy += ly * ly;
    }
    double n = static_cast<double>(points.size());
    double denom = n * sxx - sx * sx;
    require(denom > 0.0, "fit_power_law: degenerate abscissae");
    double slope = (n * sxy - sx * sy) / denom;
    double intercept = (sy - slope * sx) / n;
    double ss_tot = syy - sy * sy / n;
    double ss_res = 0.0;
    for (const auto& [x, L] : points) {
        double r = std::log(L) - (intercept + slope * std::log(x));
        ss_res += r * r;
    }
    PowerLawFit fit;
    fit.amplitude = std::exp(intercept);
    fit.exponent = -slope;
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    fit.points = points.size();
    return fit;
}

} // namespace slabperc
