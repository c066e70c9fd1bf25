#pragma once

// The multiscale hierarchy: scale and height recursions, strong/weak
// interval labels, the weak-fraction bound check, the renewal decoupling
// fit, the independent coarse model with favored/unfavored opening
// probabilities, crossing failure estimation q_m, and the parameter
// feasibility/selection algebra.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "common.hpp"
#include "connectivity.hpp"
#include "environment.hpp"
#include "estimators.hpp"
#include "lattice.hpp"
#include "rng.hpp"
#include "sampler.hpp"

namespace slabperc {

struct MultiscaleParams {
    double alpha = 1.0;    // weak-fraction decay target, in (0,1]
    double gamma = 1.25;   // scale growth, in (1, 1+alpha/(alpha+2))
    double mu = 0.85;      // height growth, in (1/gamma, 1)
    double beta = 0.9;     // crossing-failure decay, in (gamma*mu-gamma+1, 1)
    std::uint64_t L0 = 10; // initial scale
    double phi1 = 12.0;    // environment moment threshold, > 2
    double c27_hat = 0.0;  // fitted decoupling constant
    double c30_hat = 1.0;  // percolation-condition knob (existence-level in theory)
    double c_tail = 1.0;   // renewal tail constant; 1 by sampler construction
    // Linkage to the environment and renormalization:
    double lambda = 0.5;
    double phi = 6.0;
    std::uint64_t n = 16;
};

struct ConditionReport {
    std::string name;
    bool pass = false;
    double margin = 0.0; // positive iff pass, distance to the boundary
};

struct ValidationReport {
    std::vector<ConditionReport> conditions;
    bool ranges_pass = false;  // parameter ranges and the phi1 inequality
    bool scale_conditions_pass = false; // (i) and (ii)
    bool all_pass = false;
};

inline ValidationReport validate_params(const MultiscaleParams& p) {
    ValidationReport rep;
    auto add = [&](const std::string& name, double margin) {
        rep.conditions.push_back({name, margin > 0.0, margin});
    };
    auto add_flag = [&](const std::string& name, bool pass, double margin) {
        rep.conditions.push_back({name, pass, margin});
    };
    double L0 = static_cast<double>(p.L0);

    add_flag("alpha in (0,1]", p.alpha > 0.0 && p.alpha <= 1.0,
             std::min(p.alpha, 1.0 - p.alpha));
    double gamma_hi = 1.0 + p.alpha / (p.alpha + 2.0);
    add("gamma in (1, 1+alpha/(alpha+2))", std::min(p.gamma - 1.0, gamma_hi - p.gamma));
    add("mu in (1/gamma, 1)", std::min(p.mu - 1.0 / p.gamma, 1.0 - p.mu));
    double beta_lo = p.gamma * p.mu - p.gamma + 1.0;
    add("beta in (gamma*mu-gamma+1, 1)", std::min(p.beta - beta_lo, 1.0 - p.beta));
    double phi1_ok = p.phi1 > 2.0
                         ? (p.gamma * p.mu - 1.0) - (1.0 + p.alpha) / (p.phi1 / 2.0 - 1.0)
                         : -1.0;
    add("phi1 > 2 with (1+alpha)/(phi1/2-1) < gamma*mu-1", phi1_ok);

    add("(i) L0^(gamma-1) >= 3", std::pow(L0, p.gamma - 1.0) - 3.0);
    double c29 = 2.0 + 2.0 * p.alpha - p.gamma * p.alpha - 2.0 * p.gamma;
    add("(ii) L0^c29 > 1 + c27", std::pow(L0, c29) - (1.0 + p.c27_hat));
    add("(iii) 1 - 4 L0^(gamma-1) exp(-L0^beta) > 1/e",
        1.0 - 4.0 * std::pow(L0, p.gamma - 1.0) * std::exp(-std::pow(L0, p.beta)) -
            std::exp(-1.0));
    // (iv) evaluated in log space to survive the doubly exponential terms.
    double iv_log = std::log(4.0 / (1.0 - std::exp(-1.0))) + std::pow(L0, p.mu * p.gamma) +
                    std::pow(L0, p.gamma) + std::pow(L0, p.beta * p.gamma) -
                    std::pow(L0, p.beta + p.gamma - 1.0) / 24.0;
    add("(iv) induction-step inequality (log form)", -iv_log);

    rep.ranges_pass = rep.conditions[0].pass && rep.conditions[1].pass &&
                      rep.conditions[2].pass && rep.conditions[3].pass && rep.conditions[4].pass;
    rep.scale_conditions_pass = rep.conditions[5].pass && rep.conditions[6].pass;
    rep.all_pass = true;
    for (const auto& c : rep.conditions) rep.all_pass = rep.all_pass && c.pass;
    return rep;
}

// L_m = L_{m-1} * floor(L_{m-1}^(gamma-1)); strictly growing under (i).
inline std::vector<std::uint64_t> build_scales(std::uint64_t L0, double gamma,
                                               std::size_t levels) {
    require(L0 >= 2, "build_scales: L0 must be at least 2");
    std::vector<std::uint64_t> L{L0};
    for (std::size_t m = 1; m <= levels; ++m) {
        double prev = static_cast<double>(L.back());
        double factor_f = std::floor(std::pow(prev, gamma - 1.0));
        if (factor_f <= 1.0)
            throw param_error("build_scales: degenerate scale growth (floor(L^(gamma-1)) <= 1)");
        if (factor_f >= 1e18 || prev * factor_f >= 9.2e18)
            throw size_error("build_scales: scale overflow");
        L.push_back(L.back() * static_cast<std::uint64_t>(factor_f));
    }
    return L;
}

struct HeightList {
    std::vector<std::uint64_t> H; // valid prefix of the recursion
    bool complete = true;          // false if later levels overflowed 64 bits
};

// H_0 = 2 ceil(exp(L_0^mu)), H_m = 2 ceil(exp(L_m^mu)) H_{m-1}. Heights grow
// doubly fast; levels whose height exceeds 64 bits are reported as absent
// rather than approximated.
inline HeightList build_heights(const std::vector<std::uint64_t>& L, double mu) {
    require(!L.empty(), "build_heights: empty scale list");
    HeightList out;
    const double max_u64 = 1.8e19;
    for (std::size_t m = 0; m < L.size(); ++m) {
        double e = std::exp(std::pow(static_cast<double>(L[m]), mu));
        if (!std::isfinite(e) || 2.0 * std::ceil(e) >= max_u64) {
            out.complete = false;
            break;
        }
        std::uint64_t factor = 2 * static_cast<std::uint64_t>(std::ceil(e));
        if (m == 0) {
            out.H.push_back(factor);
        } else {
            double next = static_cast<double>(out.H.back()) * static_cast<double>(factor);
            if (next >= max_u64) {
                out.complete = false;
                break;
            }
            out.H.push_back(out.H.back() * factor);
        }
    }
    return out;
}

// Strong/weak labels per level. Level 0: all covered environment intervals
// good. Level m: weak iff at least two non-consecutive children (child
// indices differing by >= 2) are weak.
inline std::vector<std::vector<bool>> label_hierarchy(const IntervalClassification& cls,
                                                      const std::vector<std::uint64_t>& L) {
    require(!L.empty(), "label_hierarchy: empty scale list");
    std::vector<std::vector<bool>> strong(L.size());
    const std::uint64_t L0 = L[0];
    std::uint64_t count0 = cls.count() / L0;
    require(count0 >= 1, "label_hierarchy: classification window shorter than L0 intervals");
    strong[0].resize(count0, true);
    for (std::uint64_t i = 0; i < count0; ++i)
        for (std::uint64_t j = i * L0; j < (i + 1) * L0; ++j)
            if (!cls.good[j]) {
                strong[0][i] = false;
                break;
            }
    for (std::size_t m = 1; m < L.size(); ++m) {
        std::uint64_t ratio = L[m] / L[m - 1];
        std::uint64_t count = strong[m - 1].size() / ratio;
        require(count >= 1, "label_hierarchy: window too short for level");
        strong[m].resize(count, true);
        for (std::uint64_t i = 0; i < count; ++i) {
            // Weak children of J^m_i, in child order.
            std::int64_t first_weak = -1, last_weak = -1;
            for (std::uint64_t j = i * ratio; j < (i + 1) * ratio; ++j) {
                if (strong[m - 1][j]) continue;
                std::int64_t idx = static_cast<std::int64_t>(j);
                if (first_weak < 0) first_weak = idx;
                last_weak = idx;
            }
            if (first_weak >= 0 && last_weak - first_weak >= 2) strong[m][i] = false;
            // Exactly two adjacent weak children (or one) keep the parent
            // strong; any pair at distance >= 2 makes it weak.
        }
    }
    return strong;
}

struct WeakFractionRow {
    std::size_t level = 0;
    std::uint64_t weak = 0;
    std::uint64_t environments = 0;
    double p_hat = 0.0;
    double bound = 0.0; // L_m^(-alpha)
    double se = 0.0;
    bool pass = false; // p_hat <= bound + 3 se
};

// Empirical weak-interval frequency against L_m^(-alpha) over environment
// classifications supplied by `classify_env(r)`.
template <typename ClsFn>
std::vector<WeakFractionRow> weak_fraction_check_with(const MultiscaleParams& p,
                                                      const std::vector<std::uint64_t>& L,
                                                      std::size_t max_level,
                                                      std::uint64_t environments, ClsFn&& classify_env,
                                                      unsigned threads = 0) {
    require(max_level < L.size(), "weak_fraction_check: level beyond scale list");
    std::vector<std::uint64_t> weak_counts(max_level + 1, 0);
    auto rows = parallel_map<std::vector<char>>(
        environments,
        [&](std::uint64_t r) {
            IntervalClassification cls = classify_env(r);
            auto labels = label_hierarchy(cls, std::vector<std::uint64_t>(
                                                   L.begin(), L.begin() + max_level + 1));
            std::vector<char> weak(max_level + 1, 0);
            for (std::size_t m = 0; m <= max_level; ++m) weak[m] = labels[m][0] ? 0 : 1;
            return weak;
        },
        threads);
    for (const auto& w : rows)
        for (std::size_t m = 0; m <= max_level; ++m) weak_counts[m] += w[m];

    std::vector<WeakFractionRow> out;
    for (std::size_t m = 0; m <= max_level; ++m) {
        WeakFractionRow row;
        row.level = m;
        row.weak = weak_counts[m];
        row.environments = environments;
        row.p_hat = static_cast<double>(weak_counts[m]) / static_cast<double>(environments);
        row.bound = std::pow(static_cast<double>(L[m]), -p.alpha);
        row.se = std::sqrt(row.p_hat * (1.0 - row.p_hat) / static_cast<double>(environments));
        row.pass = row.p_hat <= row.bound + 3.0 * row.se;
        out.push_back(row);
    }
    return out;
}

// The sampled-environment form, guarded by the preconditions under which
// the weak-fraction bound is claimed.
inline std::vector<WeakFractionRow> weak_fraction_check(const MultiscaleParams& p,
                                                        const std::vector<std::uint64_t>& L,
                                                        std::size_t max_level,
                                                        std::uint64_t environments,
                                                        std::uint64_t seed,
                                                        unsigned threads = 0) {
    require(p.phi > p.phi1, "weak_fraction_check: phi must exceed phi1");
    require(p.lambda > 1.0 / p.phi, "weak_fraction_check: lambda must exceed 1/phi");
    double n_min = (1.0 / (3.0 * p.c_tail)) *
                   std::pow(static_cast<double>(L[0]),
                            (1.0 + p.alpha) / (p.lambda * p.phi - 1.0));
    require(static_cast<double>(p.n) > n_min,
            "weak_fraction_check: n below the environment-scale lower bound");
    require(max_level < L.size(), "weak_fraction_check: level beyond scale list");
    const std::uint64_t window = L[max_level] * 2 * p.n;
    RenewalParams rp{p.phi, seed};
    return weak_fraction_check_with(
        p, L, max_level, environments,
        [&](std::uint64_t r) {
            Environment env = generate_environment(rp, window, r);
            return classify_intervals(env, p.n, p.lambda);
        },
        threads);
}

struct DecouplingRow {
    std::uint64_t r = 0;
    double p_a = 0.0, p_b = 0.0, p_ab = 0.0;
    double excess = 0.0;     // max(0, p_ab - p_a p_b)
    double excess_se = 0.0;  // se of the p_ab estimate (dominant term)
    double c27_r = 0.0;      // r * excess
};

struct DecouplingFit {
    std::vector<DecouplingRow> rows;
    double c27_hat = 0.0;
    double c27_se = 0.0;
};

// Fits the decoupling constant: A = "first j intervals all good", B = the
// same event shifted r intervals to the right; c27_hat is the largest
// r * positive excess over the product measure. `classify_env(rep)` yields
// the interval classification of environment rep.
template <typename ClsFn>
DecouplingFit decoupling_fit_with(std::uint64_t j, const std::vector<std::uint64_t>& r_grid,
                                  std::uint64_t environments, ClsFn&& classify_env,
                                  unsigned threads = 0) {
    require(j >= 1 && !r_grid.empty(), "decoupling_fit: need j >= 1 and a nonempty r grid");
    auto per_env = parallel_map<std::vector<char>>(
        environments,
        [&](std::uint64_t rep) {
            IntervalClassification cls = classify_env(rep);
            auto all_good = [&](std::uint64_t from) {
                for (std::uint64_t i = from; i < from + j; ++i)
                    if (!cls.good[i]) return false;
                return true;
            };
            std::vector<char> bits(1 + r_grid.size());
            bits[0] = all_good(0) ? 1 : 0;
            // A is measurable of intervals 0..j-1; B, shifted r, starts at
            // interval j-1+r.
            for (std::size_t t = 0; t < r_grid.size(); ++t)
                bits[1 + t] = all_good(j - 1 + r_grid[t]) ? 1 : 0;
            return bits;
        },
        threads);

    struct Counts {
        std::uint64_t a = 0;
        std::vector<std::uint64_t> b, ab;
    } counts;
    counts.b.assign(r_grid.size(), 0);
    counts.ab.assign(r_grid.size(), 0);
    for (const auto& bits : per_env) {
        counts.a += bits[0];
        for (std::size_t t = 0; t < r_grid.size(); ++t) {
            counts.b[t] += bits[1 + t];
            counts.ab[t] += bits[0] && bits[1 + t];
        }
    }

    DecouplingFit fit;
    double N = static_cast<double>(environments);
    for (std::size_t t = 0; t < r_grid.size(); ++t) {
        DecouplingRow row;
        row.r = r_grid[t];
        row.p_a = counts.a / N;
        row.p_b = counts.b[t] / N;
        row.p_ab = counts.ab[t] / N;
        double excess = row.p_ab - row.p_a * row.p_b;
        row.excess = excess > 0.0 ? excess : 0.0;
        row.excess_se = std::sqrt(row.p_ab * (1.0 - row.p_ab) / N);
        row.c27_r = static_cast<double>(row.r) * row.excess;
        if (row.c27_r > fit.c27_hat) {
            fit.c27_hat = row.c27_r;
            fit.c27_se = static_cast<double>(row.r) * row.excess_se;
        }
        fit.rows.push_back(row);
    }
    return fit;
}

inline DecouplingFit decoupling_fit(double phi, std::uint64_t n, double lambda, std::uint64_t j,
                                    const std::vector<std::uint64_t>& r_grid,
                                    std::uint64_t environments, std::uint64_t seed,
                                    unsigned threads = 0) {
    std::uint64_t r_max = 0;
    for (auto r : r_grid) r_max = std::max(r_max, r);
    const std::uint64_t window = (2 * j + r_max) * 2 * n;
    RenewalParams rp{phi, seed};
    return decoupling_fit_with(
        j, r_grid, environments,
        [&](std::uint64_t rep) {
            Environment env = generate_environment(rp, window, rep);
            return classify_intervals(env, n, lambda);
        },
        threads);
}

// Favored flags for coarse edges derived directly from interval goodness:
// a horizontal edge at renormalized x spans intervals x..x+2, a vertical
// edge spans x..x+1.
inline Bitset favored_flags(const IntervalClassification& cls, const SlabLattice& coarse,
                            std::int64_t x_offset = 0) {
    Bitset flags(coarse.edge_count());
    for (std::uint64_t e = 0; e < coarse.edge_count(); ++e) {
        Edge f = coarse.edge_at(e);
        std::int64_t first = x_offset + f.a.x;
        std::int64_t last = first + (f.dir() == Dir::X ? 2 : 1);
        require(first >= 0 && static_cast<std::uint64_t>(last) < cls.count(),
                "favored_flags: classification window too short");
        bool fav = true;
        for (std::int64_t i = first; i <= last; ++i)
            if (!cls.good[static_cast<std::size_t>(i)]) {
                fav = false;
                break;
            }
        flags.set(e, fav);
    }
    return flags;
}

// The independent coarse model: favored edges open with p_G, unfavored with
// p_B, independently.
class CoarseModel {
public:
    CoarseModel(std::int32_t mx, std::int32_t my, Bitset favored, double p_G, double p_B)
        : lattice_(mx, my, 0), favored_(std::move(favored)) {
        require(p_G >= 0.0 && p_G <= 1.0 && p_B >= 0.0 && p_B <= 1.0,
                "CoarseModel: probabilities must lie in [0,1]");
        require(favored_.size() == lattice_.edge_count(), "CoarseModel: favored flag length");
        thr_.resize(lattice_.edge_count());
        const std::uint64_t tg = open_threshold(p_G), tb = open_threshold(p_B);
        for (std::uint64_t e = 0; e < thr_.size(); ++e) thr_[e] = favored_.get(e) ? tg : tb;
    }

    const SlabLattice& lattice() const { return lattice_; }
    const Bitset& favored() const { return favored_; }

    BondConfiguration sample(std::uint64_t seed, std::uint64_t replica) const {
        UniformField field(seed, replica);
        BondConfiguration cfg;
        cfg.lattice = &lattice_;
        cfg.open = Bitset(lattice_.edge_count());
        for (std::uint64_t e = 0; e < thr_.size(); ++e)
            if (field.word(e) < thr_[e]) cfg.open.set(e, true);
        return cfg;
    }

private:
    SlabLattice lattice_;
    Bitset favored_;
    std::vector<std::uint64_t> thr_;
};

struct QmEstimate {
    McEstimate c_fail; // P((C^m_{i,j})^c)
    McEstimate d_fail; // P((D^m_{i,j})^c)
    double q_hat = 0.0;
};

// Failure probabilities of the two level-m crossing events under the
// independent coarse model, at the strong placement (i, j=0). The window is
// sized exactly to each event; a cell cap guards against the doubly
// exponential heights.
inline QmEstimate estimate_qm(const IntervalClassification& cls,
                              const std::vector<std::vector<bool>>& labels,
                              const std::vector<std::uint64_t>& L, const HeightList& heights,
                              std::size_t m, std::uint64_t i, double p_G, double p_B,
                              std::uint64_t replicas, std::uint64_t seed, unsigned threads = 0,
                              std::uint64_t cell_cap = (std::uint64_t{1} << 24)) {
    require(m < L.size(), "estimate_qm: level beyond scale list");
    require(m < heights.H.size(), "estimate_qm: height overflowed at this level");
    require(m < labels.size() && i + 1 < labels[m].size(), "estimate_qm: placement outside labels");
    require(labels[m][i] && labels[m][i + 1],
            "estimate_qm: placement requires strong intervals J_i and J_{i+1}");
    const std::uint64_t Lm = L[m], Hm = heights.H[m];

    auto run = [&](std::uint64_t width, std::uint64_t height, std::uint64_t x0,
                   std::uint64_t stream_tag, Dir axis) {
        if (width * height > cell_cap)
            throw size_error("estimate_qm: window exceeds the cell cap at this level");
        SlabLattice coarse(static_cast<std::int32_t>(width), static_cast<std::int32_t>(height), 0);
        Bitset fav = favored_flags(cls, coarse, static_cast<std::int64_t>(x0));
        CoarseModel model(static_cast<std::int32_t>(width), static_cast<std::int32_t>(height),
                          fav, p_G, p_B);
        RegionGraph rg(model.lattice(), model.lattice().full_box());
        std::uint64_t fails = parallel_count(
            replicas,
            [&](std::uint64_t r) {
                BondConfiguration cfg = model.sample(seed, stream_tag * 0x100000000ull + r);
                bool crossed = axis == Dir::X ? crossing_h(cfg, rg) : crossing_v(cfg, rg);
                return !crossed;
            },
            threads);
        return wilson_estimate(fails, replicas, seed);
    };

    QmEstimate est;
    est.c_fail = run(2 * Lm, Hm, i * Lm, 1, Dir::X);
    est.d_fail = run(Lm, 2 * Hm, i * Lm, 2, Dir::Y);
    est.q_hat = std::max(est.c_fail.mean, est.d_fail.mean);
    return est;
}

struct SelectionResult {
    bool feasible = false;
    int which_case = 0;        // 1, 2, 3 per the selection algorithm
    std::uint64_t L0_star = 0;
    std::uint64_t n = 0;
    double lower = 0.0;        // environment-scale bound at L0_star
    double upper = 0.0;        // percolation-condition bound at L0_star
};

// The three-case parameter selection: keep n1 when it fits the interval
// I(L0), grow n when below, grow L0 when above; infeasible when no L0 up to
// the cap admits an integer in the interval.
inline SelectionResult feasibility_and_selection(const MultiscaleParams& p, std::uint64_t n1,
                                                 std::uint64_t L0_cap = 1 << 20) {
    require(p.lambda * p.phi > 1.0, "feasibility_and_selection: need lambda*phi > 1");
    require(n1 >= 1, "feasibility_and_selection: n1 must be positive");
    // gamma*mu <= 1 shrinks the upper bound with L0; the search below then
    // reports infeasible at the cap, which is a value, not an error.
    auto lower_of = [&](std::uint64_t L0) {
        return (1.0 / (3.0 * p.c_tail)) *
               std::pow(static_cast<double>(L0), (1.0 + p.alpha) / (p.lambda * p.phi - 1.0));
    };
    auto upper_of = [&](std::uint64_t L0) {
        return p.c30_hat * std::pow(static_cast<double>(L0), p.gamma * p.mu - 1.0);
    };

    SelectionResult res;
    std::uint64_t L0 = p.L0;
    double lo = lower_of(L0), hi = upper_of(L0);
    double n1d = static_cast<double>(n1);

    if (n1d > lo && n1d < hi) {
        res = {true, 1, L0, n1, lo, hi};
        return res;
    }
    if (n1d <= lo) {
        // Case 2: same L0, first integer inside the interval above n1.
        while (L0 <= L0_cap) {
            lo = lower_of(L0);
            hi = upper_of(L0);
            std::uint64_t candidate = static_cast<std::uint64_t>(std::floor(lo)) + 1;
            if (candidate <= n1) candidate = n1 + 1;
            if (static_cast<double>(candidate) > lo && static_cast<double>(candidate) < hi) {
                res = {true, 2, L0, candidate, lo, hi};
                return res;
            }
            ++L0; // interval holds no usable integer; enlarge the scale
        }
        return res; // infeasible
    }
    // Case 3: n1 above the interval; enlarge L0 until n1 fits.
    while (L0 <= L0_cap) {
        lo = lower_of(L0);
        hi = upper_of(L0);
        if (n1d > lo && n1d < hi) {
            res = {true, 3, L0, n1, lo, hi};
            return res;
        }
        if (n1d <= lo) break; // overshot: the interval moved past n1
        ++L0;
    }
    return res; // infeasible
}

} // namespace slabperc
