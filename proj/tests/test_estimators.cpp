#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "slabperc/estimators.hpp"
#include "slabperc/oracle.hpp"
#include "support/oracles.hpp"

using namespace slabperc;

TEST_CASE("wilson estimates and degenerate events") {
    McEstimate sure = wilson_estimate(1000, 1000, 1);
    CHECK(sure.mean == 1.0);
    CHECK(sure.ci_hi == 1.0);
    CHECK(sure.ci_lo > 0.99);
    McEstimate never = wilson_estimate(0, 1000, 1);
    CHECK(never.mean == 0.0);
    CHECK(never.ci_lo == 0.0);
    CHECK_THROWS_AS(wilson_estimate(0, 0, 1), param_error);

    McEstimate half = wilson_estimate(500, 1000, 1);
    CHECK(half.ci_lo < 0.5);
    CHECK(half.ci_hi > 0.5);
    CHECK(half.ci_hi - half.ci_lo < 0.07);
}

TEST_CASE("generic event estimator against the enumerated 3/4 benchmark") {
    SlabLattice lat(2, 2, 0);
    RegionGraph rg(lat, lat.full_box());
    double exact = exact_event_probability(lat, 0.5, [&](const BondConfiguration& c) {
        return oracles::bfs_crossing_h(lat, c, lat.full_box());
    });
    REQUIRE(exact == Catch::Approx(0.75).epsilon(1e-12));

    ThresholdTable table(lat, 0.5);
    McEstimate est = estimate_event(
        table, [&](const BondConfiguration& c) { return crossing_h(c, rg); }, 10000, 42);
    CHECK(est.ci_lo <= exact);
    CHECK(est.ci_hi >= exact);

    CHECK(estimate_event(table, [](const BondConfiguration&) { return true; }, 500, 1).mean ==
          1.0);
    CHECK(estimate_event(table, [](const BondConfiguration&) { return false; }, 500, 1).mean ==
          0.0);
}

TEST_CASE("wilson coverage of the exact benchmark over 200 repetitions") {
    SlabLattice lat(2, 2, 0);
    CrossingExperiment ex(lat, lat.full_box(), Dir::X, 0.5);
    int covered = 0;
    for (std::uint64_t rep = 0; rep < 200; ++rep) {
        McEstimate est = ex.estimate(10000, 1000 + rep);
        if (est.ci_lo <= 0.75 && 0.75 <= est.ci_hi) ++covered;
    }
    CHECK(covered >= 186); // 93% of 200
}

TEST_CASE("fused crossing experiment equals the materialized path") {
    SlabLattice lat(7, 5, 1);
    CrossingExperiment ex(lat, lat.full_box(), Dir::X, 0.45);
    RegionGraph rg(lat, lat.full_box());
    ThresholdTable table(lat, 0.45);
    for (std::uint64_t r = 0; r < 300; ++r) {
        BondConfiguration cfg = sample(table, UniformField(99, r));
        CHECK(ex.evaluate(99, r) == crossing_h(cfg, rg));
    }
}

TEST_CASE("directed crossing probabilities f_p(n,m)") {
    CHECK(estimate_f(4, 4, 1.0, 0, 200, 1).mean == 1.0);
    CHECK(estimate_f(4, 4, 0.0, 0, 200, 1).mean == 0.0);

    // Long-direction crossing is strictly harder: f(2n,n) < f(n,2n).
    const std::uint64_t reps = 20000;
    McEstimate hard = estimate_f(32, 16, 0.5, 0, reps, 7);
    McEstimate easy = estimate_f(16, 32, 0.5, 0, reps, 7);
    double se = std::sqrt(hard.mean * (1 - hard.mean) / reps) +
                std::sqrt(easy.mean * (1 - easy.mean) / reps);
    CHECK(easy.mean - hard.mean > 3.0 * se);
}

TEST_CASE("estimates are reproducible across thread counts") {
    SlabLattice lat(17, 9, 0);
    CrossingExperiment ex(lat, lat.full_box(), Dir::X, 0.5);
    McEstimate a = ex.estimate(5000, 11, 1);
    McEstimate b = ex.estimate(5000, 11, 2);
    McEstimate c = ex.estimate(5000, 11, 0);
    CHECK(a.successes == b.successes);
    CHECK(a.successes == c.successes);
}

TEST_CASE("increasing events are exactly monotone in p under common random numbers") {
    SlabLattice lat(9, 9, 0);
    CrossingExperiment lo(lat, lat.full_box(), Dir::X, 0.45);
    CrossingExperiment hi(lat, lat.full_box(), Dir::X, 0.55);
    for (std::uint64_t r = 0; r < 2000; ++r)
        REQUIRE((!lo.evaluate(3, r) || hi.evaluate(3, r)));
}

TEST_CASE("correlation length search") {
    // p = 1 crosses every box: the search stops at n = 1.
    CorrLenResult sure = estimate_corrlen(1.0, 0.2, 0, 100, 64, 1);
    CHECK_FALSE(sure.saturated);
    CHECK(sure.value == 1);

    // Saturation is monotone in n_max.
    CorrLenResult small = estimate_corrlen(0.56, 0.2, 0, 1000, 4, 5);
    CorrLenResult large = estimate_corrlen(0.56, 0.2, 0, 1000, 128, 5);
    CHECK(small.saturated);
    CHECK_FALSE(large.saturated);
    CHECK(large.value > 4);

    CHECK_THROWS_AS(estimate_corrlen(0.0, 0.2, 0, 100, 8, 1), param_error);
    CHECK_THROWS_AS(estimate_corrlen(0.5, 1.5, 0, 100, 8, 1), param_error);
}

TEST_CASE("correlation length is nonincreasing in p under common random numbers") {
    std::uint32_t prev = 0;
    bool first = true;
    for (double p : {0.55, 0.58, 0.62}) {
        CorrLenResult res = estimate_corrlen(p, 0.2, 0, 1000, 256, 99);
        REQUIRE_FALSE(res.saturated);
        if (!first) CHECK(res.value <= prev);
        prev = res.value;
        first = false;
    }
}

TEST_CASE("critical point estimates anchor at the self-dual value for the plane") {
    PcResult res = estimate_pc(0, {32, 64}, 3000, 21);
    CHECK(res.estimate == Catch::Approx(0.5).margin(0.02));

    // Thicker slabs percolate strictly earlier.
    PcResult slab1 = estimate_pc(1, {32, 64}, 3000, 21);
    CHECK(slab1.estimate < res.estimate - (res.spread + slab1.spread));
    CHECK(slab1.estimate > 0.2);
    CHECK(slab1.estimate < 0.5);

    PcResult slab2 = estimate_pc(2, {32, 64}, 3000, 21);
    CHECK(slab2.estimate < slab1.estimate);
    CHECK(slab2.estimate > 0.2);

    CHECK_THROWS_AS(estimate_pc(0, {}, 1000, 1), param_error);
}

TEST_CASE("pivotal scanner agrees with brute-force pivotality") {
    for (auto [nx, ny, k, p] : {std::tuple{4, 4, 0, 0.5},
                                {3, 3, 1, 0.45},
                                {6, 2, 0, 0.55},
                                {2, 6, 0, 0.4}}) {
        SlabLattice lat(nx, ny, k);
        Box3 box = lat.full_box();
        VerticalPivotalScanner scanner(lat, box);
        RegionGraph rg(lat, box);
        auto v_event = [&](const BondConfiguration& c) { return crossing_v(c, rg); };
        ThresholdTable table(lat, p);
        for (std::uint64_t r = 0; r < 500; ++r) {
            BondConfiguration cfg = sample(table, UniformField(777, r));
            std::set<std::uint64_t> fast;
            scanner.scan(cfg, [&](std::uint64_t e) { fast.insert(e); });
            std::set<std::uint64_t> slow;
            for (std::uint64_t e = 0; e < lat.edge_count(); ++e)
                if (is_pivotal(cfg, e, v_event)) slow.insert(e);
            REQUIRE(fast == slow);
        }
    }
}

TEST_CASE("russo sum vanishes under redundant crossings and respects subsets") {
    SlabLattice lat(5, 5, 0);
    Box3 box = lat.full_box();
    MeanEstimate all_open = russo_sum(lat, box, 1.0, {}, 200, 1);
    CHECK(all_open.mean == 0.0);

    std::vector<std::uint64_t> strip;
    lat.for_region_edges({1, 3, 0, 4}, [&](std::uint64_t e, std::uint64_t, std::uint64_t) {
        strip.push_back(e);
    });
    MeanEstimate full = russo_sum(lat, box, 0.5, {}, 3000, 9);
    MeanEstimate sub = russo_sum(lat, box, 0.5, strip, 3000, 9);
    CHECK(sub.mean <= full.mean);
}

TEST_CASE("russo sum is consistent with the finite difference of P(V)") {
    const std::int32_t N = 8;
    SlabLattice lat(2 * N + 1, 2 * N + 1, 0);
    Box3 box = lat.full_box();
    const double p = 0.55, h = 0.01;
    const std::uint64_t reps = 40000;
    MeanEstimate russo = russo_sum(lat, box, p, {}, reps, 13);

    CrossingExperiment lo(lat, box, Dir::Y, p - h);
    CrossingExperiment hi(lat, box, Dir::Y, p + h);
    std::uint64_t gain = 0;
    for (std::uint64_t r = 0; r < reps; ++r)
        gain += hi.evaluate(13, r) && !lo.evaluate(13, r);
    double diff = static_cast<double>(gain) / reps;
    double fd = diff / (2 * h);
    double fd_se = std::sqrt(diff * (1 - diff) / reps) / (2 * h);
    double combined = 3.0 * std::sqrt(fd_se * fd_se + russo.se * russo.se);
    INFO("russo " << russo.mean << " fd " << fd << " tol " << combined);
    CHECK(std::abs(russo.mean - fd) <= combined);
}

TEST_CASE("power-law fit recovers exact synthetic data") {
    std::vector<std::pair<double, double>> pts;
    for (double x : {0.02, 0.04, 0.08, 0.16})
        pts.push_back({x, 7.0 * std::pow(x, -1.5)});
    PowerLawFit fit = fit_power_law(pts);
    CHECK(fit.amplitude == Catch::Approx(7.0).epsilon(1e-9));
    CHECK(fit.exponent == Catch::Approx(1.5).epsilon(1e-9));
    CHECK(fit.r_squared == Catch::Approx(1.0).margin(1e-9));

    CHECK_THROWS_AS(fit_power_law({{0.1, 5.0}}), param_error);
    CHECK_THROWS_AS(fit_power_law({{0.1, 5.0}, {0.2, 3.0}}), param_error);
    CHECK_THROWS_AS(fit_power_law({{0.1, 5.0}, {-0.2, 3.0}, {0.3, 2.0}}), param_error);
}
