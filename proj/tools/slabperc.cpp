// Experiment driver: every estimator and check in the library behind one
// reproducible command-line interface. A run is a pure function of its
// config document; identical configs give byte-identical CSV bodies.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "slabperc/common.hpp"
#include "slabperc/connectivity.hpp"
#include "slabperc/environment.hpp"
#include "slabperc/estimators.hpp"
#include "slabperc/io.hpp"
#include "slabperc/lattice.hpp"
#include "slabperc/multiscale.hpp"
#include "slabperc/oracle.hpp"
#include "slabperc/renorm.hpp"
#include "slabperc/rng.hpp"
#include "slabperc/sampler.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace slabperc;

namespace {

constexpr const char* kVersion = "0.1.0";

using Cell = std::pair<std::string, std::string>;
using Row = std::vector<Cell>;

struct RunContext {
    json cfg;
    std::string out_dir;
    bool write_details = true;
    std::uint64_t seed = 1;
    std::uint64_t replicas = 1000;
    unsigned threads = 0;
    std::vector<std::string> written; // files emitted under out_dir
};

template <typename T>
T get_or(const json& cfg, const std::string& key, T def) {
    if (!cfg.contains(key)) return def;
    return cfg.at(key).get<T>();
}

template <typename T>
T need(const json& cfg, const std::string& key) {
    if (!cfg.contains(key)) throw param_error("config: missing key '" + key + "'");
    return cfg.at(key).get<T>();
}

std::string fmt(double v) { return format_double(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(std::int64_t v) { return std::to_string(v); }
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "1" : "0"; }

void write_csv(RunContext& ctx, const std::string& name, const std::vector<Row>& rows) {
    if (rows.empty()) return;
    fs::create_directories(ctx.out_dir);
    std::string path = ctx.out_dir + "/" + name;
    std::ofstream os(path, std::ios::binary);
    CsvWriter csv(os);
    std::vector<std::string> header;
    for (const auto& cell : rows.front()) header.push_back(cell.first);
    csv.row(header);
    for (const auto& row : rows) {
        std::vector<std::string> cells;
        for (const auto& cell : row) cells.push_back(cell.second);
        csv.row(cells);
    }
    ctx.written.push_back(name);
}

void write_text(RunContext& ctx, const std::string& name, const std::string& body) {
    fs::create_directories(ctx.out_dir);
    std::ofstream os(ctx.out_dir + "/" + name, std::ios::binary);
    os << body;
    ctx.written.push_back(name);
}

// Environment selection shared by the sampling experiments: either a file,
// or generated from phi with its own stream, or empty (homogeneous model).
Environment load_environment(const RunContext& ctx, std::uint64_t window_x) {
    if (ctx.cfg.contains("env_file")) {
        std::ifstream is(need<std::string>(ctx.cfg, "env_file"));
        if (!is) throw param_error("cannot open env_file");
        Environment env = read_environment(is);
        require(env.window_x >= window_x, "env_file window too small for this experiment");
        return env;
    }
    if (ctx.cfg.contains("phi")) {
        RenewalParams rp{need<double>(ctx.cfg, "phi"), ctx.seed};
        return generate_environment(rp, window_x, get_or<std::uint64_t>(ctx.cfg, "env_stream", 0));
    }
    Environment env; // no enhanced columns
    env.window_x = window_x;
    return env;
}

// ------------------------------------------------------------------ env --
std::vector<Row> run_env(RunContext& ctx) {
    auto phi = need<double>(ctx.cfg, "phi");
    auto window = need<std::uint64_t>(ctx.cfg, "window");
    auto n = need<std::uint64_t>(ctx.cfg, "n");
    auto lambda = need<double>(ctx.cfg, "lambda");
    RenewalParams rp{phi, ctx.seed};
    Environment env = generate_environment(rp, window, get_or<std::uint64_t>(ctx.cfg, "env_stream", 0));
    auto cls = classify_intervals(env, n, lambda);
    if (ctx.write_details) {
        std::ostringstream os;
        write_environment(os, env);
        write_text(ctx, "environment.txt", os.str());
    }
    std::vector<Row> rows;
    for (std::size_t i = 0; i < cls.count(); ++i)
        rows.push_back({{"interval", fmt(static_cast<std::uint64_t>(i))},
                        {"gap", fmt(cls.gaps[i])},
                        {"good", fmt(static_cast<bool>(cls.good[i]))}});
    return rows;
}

// ------------------------------------------------------------- goodfreq --
std::vector<Row> run_goodfreq(RunContext& ctx) {
    auto phi = need<double>(ctx.cfg, "phi");
    auto n = need<std::uint64_t>(ctx.cfg, "n");
    auto lambda = need<double>(ctx.cfg, "lambda");
    auto envs = get_or<std::uint64_t>(ctx.cfg, "environments", ctx.replicas);
    RenewalParams rp{phi, ctx.seed};
    std::uint64_t window = 2 * n; // one interval per environment
    std::uint64_t good = parallel_count(
        envs,
        [&](std::uint64_t r) {
            Environment env = generate_environment(rp, window, r);
            return static_cast<bool>(classify_intervals(env, n, lambda).good[0]);
        },
        ctx.threads);
    double p_hat = static_cast<double>(good) / static_cast<double>(envs);
    double se = std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(envs));
    double bound = (phi > 2.0 && lambda > 1.0 / phi && lambda < 1.0)
                       ? good_probability_bound(n, lambda, phi)
                       : 0.0;
    return {{{"phi", fmt(phi)},
             {"lambda", fmt(lambda)},
             {"n", fmt(n)},
             {"environments", fmt(envs)},
             {"seed", fmt(ctx.seed)},
             {"good_frequency", fmt(p_hat)},
             {"bound", fmt(bound)},
             {"se", fmt(se)}}};
}

// --------------------------------------------------------------- sample --
std::vector<Row> run_sample(RunContext& ctx) {
    auto nx = need<std::int32_t>(ctx.cfg, "nx");
    auto ny = need<std::int32_t>(ctx.cfg, "ny");
    auto k = get_or<std::int32_t>(ctx.cfg, "k", 0);
    ModelParams mp{need<double>(ctx.cfg, "p"), get_or<double>(ctx.cfg, "q", need<double>(ctx.cfg, "p"))};
    SlabLattice lat(nx, ny, k);
    Environment env = load_environment(ctx, static_cast<std::uint64_t>(nx));
    ThresholdTable table(lat, env, mp, get_or<bool>(ctx.cfg, "strict_columns", false));
    BondConfiguration cfg = sample(table, UniformField(ctx.seed, get_or<std::uint64_t>(ctx.cfg, "replica", 0)));
    std::uint64_t enhanced = 0;
    for (std::uint64_t e = 0; e < lat.edge_count(); ++e)
        if (is_enhanced(lat.edge_at(e), env)) ++enhanced;
    if (ctx.write_details) {
        json header = {{"nx", nx},   {"ny", ny},   {"k", k},
                       {"p", mp.p},  {"q", mp.q},  {"seed", ctx.seed},
                       {"edges", lat.edge_count()}};
        std::ostringstream os;
        write_bitmap(os, header.dump(), cfg.open);
        write_text(ctx, "config.bits", os.str());
    }
    return {{{"edges", fmt(lat.edge_count())},
             {"open", fmt(static_cast<std::uint64_t>(cfg.open.count()))},
             {"open_fraction", fmt(static_cast<double>(cfg.open.count()) /
                                   static_cast<double>(lat.edge_count()))},
             {"enhanced_edges", fmt(enhanced)}}};
}

// ------------------------------------------------------------- crossing --
std::vector<Row> run_crossing(RunContext& ctx) {
    auto nx = need<std::int32_t>(ctx.cfg, "nx");
    auto ny = need<std::int32_t>(ctx.cfg, "ny");
    auto k = get_or<std::int32_t>(ctx.cfg, "k", 0);
    auto axis = get_or<std::string>(ctx.cfg, "axis", "h");
    double p = need<double>(ctx.cfg, "p");
    double q = get_or<double>(ctx.cfg, "q", p);
    SlabLattice lat(nx, ny, k);
    Environment env = load_environment(ctx, static_cast<std::uint64_t>(nx));
    ThresholdTable table(lat, env, {p, q}, get_or<bool>(ctx.cfg, "strict_columns", false));
    CrossingExperiment ex(lat, lat.full_box(), axis == "v" ? Dir::Y : Dir::X, table);
    McEstimate est = ex.estimate(ctx.replicas, ctx.seed, ctx.threads);
    return {{{"nx", fmt(nx)},
             {"ny", fmt(ny)},
             {"k", fmt(k)},
             {"axis", {axis}},
             {"p", fmt(p)},
             {"q", fmt(q)},
             {"replicas", fmt(est.replicas)},
             {"seed", fmt(est.seed)},
             {"successes", fmt(est.successes)},
             {"mean", fmt(est.mean)},
             {"ci_lo", fmt(est.ci_lo)},
             {"ci_hi", fmt(est.ci_hi)}}};
}

// -------------------------------------------------------------- corrlen --
std::vector<Row> run_corrlen(RunContext& ctx) {
    double p = need<double>(ctx.cfg, "p");
    double tau = need<double>(ctx.cfg, "tau");
    auto k = get_or<std::int32_t>(ctx.cfg, "k", 0);
    auto n_max = get_or<std::uint32_t>(ctx.cfg, "n_max", 512);
    CorrLenResult res = estimate_corrlen(p, tau, k, ctx.replicas, n_max, ctx.seed, ctx.threads);
    if (ctx.write_details) {
        std::vector<Row> probes;
        for (const auto& pr : res.probes)
            probes.push_back({{"n", fmt(static_cast<std::uint64_t>(pr.n))},
                              {"estimate", fmt(pr.estimate)}});
        write_csv(ctx, "probes.csv", probes);
    }
    return {{{"p", fmt(p)},
             {"tau", fmt(tau)},
             {"k", fmt(k)},
             {"replicas", fmt(ctx.replicas)},
             {"n_max", fmt(static_cast<std::uint64_t>(n_max))},
             {"seed", fmt(ctx.seed)},
             {"L", fmt(static_cast<std::uint64_t>(res.saturated ? 0 : res.value))},
             {"saturated", fmt(res.saturated)}}};
}

// ------------------------------------------------------------------- pc --
std::vector<Row> run_pc(RunContext& ctx) {
    auto k = get_or<std::int32_t>(ctx.cfg, "k", 0);
    auto sizes = need<std::vector<std::uint32_t>>(ctx.cfg, "sizes");
    PcResult res = estimate_pc(k, sizes, ctx.replicas, ctx.seed, ctx.threads);
    if (ctx.write_details) {
        std::vector<Row> rows;
        for (const auto& s : res.per_size)
            rows.push_back({{"size", fmt(static_cast<std::uint64_t>(s.size))},
                            {"p_half", fmt(s.p_half)}});
        write_csv(ctx, "sizes.csv", rows);
    }
    return {{{"k", fmt(k)},
             {"replicas", fmt(ctx.replicas)},
             {"seed", fmt(ctx.seed)},
             {"estimate", fmt(res.estimate)},
             {"spread", fmt(res.spread)}}};
}

// ---------------------------------------------------------------- russo --
std::vector<Row> run_russo(RunContext& ctx) {
    double p = need<double>(ctx.cfg, "p");
    auto N = need<std::int32_t>(ctx.cfg, "N");
    auto k = get_or<std::int32_t>(ctx.cfg, "k", 0);
    double h = get_or<double>(ctx.cfg, "h", 0.01);
    require(N >= 2 && N % 2 == 0, "russo: N must be even and >= 2");
    SlabLattice lat(2 * N + 1, 2 * N + 1, k);
    Box3 box = lat.full_box();

    MeanEstimate all = russo_sum(lat, box, p, {}, ctx.replicas, ctx.seed, ctx.threads);

    // The central strip R''_N.
    std::vector<std::uint64_t> strip_edges;
    Box3 strip{N / 2, 3 * N / 2, 0, 2 * N};
    lat.for_region_edges(strip, [&](std::uint64_t e, std::uint64_t, std::uint64_t) {
        strip_edges.push_back(e);
    });
    MeanEstimate strip_est = russo_sum(lat, box, p, strip_edges, ctx.replicas, ctx.seed, ctx.threads);

    std::vector<Row> rows;
    auto add = [&](const std::string& scope, double value, double se) {
        rows.push_back({{"p", fmt(p)},
                        {"N", fmt(N)},
                        {"k", fmt(k)},
                        {"replicas", fmt(ctx.replicas)},
                        {"seed", fmt(ctx.seed)},
                        {"scope", {scope}},
                        {"value", fmt(value)},
                        {"se", fmt(se)}});
    };
    add("all_edges", all.mean, all.se);
    add("strip", strip_est.mean, strip_est.se);

    if (h > 0.0) {
        // Central finite difference of P(V) with common random numbers.
        CrossingExperiment lo(lat, box, Dir::Y, p - h);
        CrossingExperiment hi(lat, box, Dir::Y, p + h);
        std::uint64_t gain = parallel_count(
            ctx.replicas,
            [&](std::uint64_t r) { return hi.evaluate(ctx.seed, r) && !lo.evaluate(ctx.seed, r); },
            ctx.threads);
        double diff = static_cast<double>(gain) / static_cast<double>(ctx.replicas);
        double derivative = diff / (2.0 * h);
        double se = std::sqrt(diff * (1.0 - diff) / static_cast<double>(ctx.replicas)) / (2.0 * h);
        add("finite_difference", derivative, se);
    }
    return rows;
}

// --------------------------------------------------------------- renorm --
std::vector<Row> run_renorm(RunContext& ctx) {
    auto n = need<std::int32_t>(ctx.cfg, "n");
    auto lambda = need<double>(ctx.cfg, "lambda");
    auto k = get_or<std::int32_t>(ctx.cfg, "k", 0);
    auto mx = get_or<std::int32_t>(ctx.cfg, "mx", 2);
    auto my = get_or<std::int32_t>(ctx.cfg, "my", 1);
    double p, q;
    if (ctx.cfg.contains("pc") && ctx.cfg.contains("epsilon")) {
        // Near-critical schedule: (p, q) = (pc - delta_n, pc + eps).
        double pc = need<double>(ctx.cfg, "pc");
        double eps = need<double>(ctx.cfg, "epsilon");
        p = pc - delta_schedule(n, eps, lambda);
        q = pc + eps;
    } else {
        p = need<double>(ctx.cfg, "p");
        q = get_or<double>(ctx.cfg, "q", p);
    }
    auto samples = get_or<std::uint64_t>(ctx.cfg, "samples", ctx.replicas);

    SlabLattice lat(2 * n * mx + 1, 2 * n * my + 1, k);
    std::uint64_t env_window = static_cast<std::uint64_t>(2 * n) * (mx + 2);
    RunContext env_ctx = ctx;
    Environment env = load_environment(env_ctx, env_window);
    if (env.window_x % (2 * static_cast<std::uint64_t>(n)) != 0)
        throw param_error("renorm: environment window must be a multiple of 2n");
    RenormSpec spec(lat, env, n, lambda);
    ThresholdTable table(lat, env, {p, q}, get_or<bool>(ctx.cfg, "strict_columns", false));
    SigmaBuilder builder(spec, mx, my);

    CoarseEdge f{{get_or<std::int32_t>(ctx.cfg, "edge_x", 0), get_or<std::int32_t>(ctx.cfg, "edge_y", 0)},
                 get_or<bool>(ctx.cfg, "edge_horizontal", true)};
    std::uint64_t hits_a = 0, hits_astar = 0, sigma_open = 0, favored_edges = 0;
    Bitset first_sigma;
    const std::uint64_t coarse_edges = builder.coarse_lattice().edge_count();
    for (std::uint64_t e = 0; e < coarse_edges; ++e)
        if (builder.favored(e)) ++favored_edges;
    for (std::uint64_t s = 0; s < samples; ++s) {
        BondConfiguration cfg = sample(table, UniformField(ctx.seed, s));
        RenormConfig rc = builder.evaluate(cfg);
        if (s == 0) first_sigma = rc.sigma;
        sigma_open += rc.sigma.count();
        hits_a += eval_A(cfg, spec, f) ? 1 : 0;
        hits_astar += eval_A_star(cfg, spec, f) ? 1 : 0;
    }
    if (ctx.write_details && get_or<bool>(ctx.cfg, "dump_sigma", false)) {
        json header = {{"n", n}, {"lambda", lambda}, {"mx", mx}, {"my", my},
                       {"p", p}, {"q", q},           {"seed", ctx.seed}};
        std::ostringstream os;
        write_bitmap(os, header.dump(), first_sigma);
        write_text(ctx, "sigma.bits", os.str());
    }

    double ns = static_cast<double>(samples);
    std::vector<Row> rows;
    auto add = [&](const std::string& metric, double value, double se) {
        rows.push_back({{"metric", {metric}}, {"value", fmt(value)}, {"se", fmt(se)}});
    };
    auto prop_se = [&](double m) { return std::sqrt(m * (1.0 - m) / ns); };
    double pa = hits_a / ns, pas = hits_astar / ns;
    add("p", p, 0.0);
    add("q", q, 0.0);
    add("favored_fraction", static_cast<double>(favored_edges) / static_cast<double>(coarse_edges), 0.0);
    add("edge_favored", spec.favored(f) ? 1.0 : 0.0, 0.0);
    add("p_A", pa, prop_se(pa));
    add("p_A_star", pas, prop_se(pas));
    add("sigma_density", sigma_open / (ns * static_cast<double>(coarse_edges)), 0.0);
    return rows;
}

// ----------------------------------------------------------- multiscale --
std::vector<Row> run_multiscale(RunContext& ctx) {
    MultiscaleParams mp;
    mp.alpha = get_or<double>(ctx.cfg, "alpha", mp.alpha);
    mp.gamma = get_or<double>(ctx.cfg, "gamma", mp.gamma);
    mp.mu = get_or<double>(ctx.cfg, "mu", mp.mu);
    mp.beta = get_or<double>(ctx.cfg, "beta", mp.beta);
    mp.L0 = get_or<std::uint64_t>(ctx.cfg, "L0", mp.L0);
    mp.phi1 = get_or<double>(ctx.cfg, "phi1", mp.phi1);
    mp.c27_hat = get_or<double>(ctx.cfg, "c27", mp.c27_hat);
    mp.c30_hat = get_or<double>(ctx.cfg, "c30", mp.c30_hat);
    mp.lambda = get_or<double>(ctx.cfg, "lambda", mp.lambda);
    mp.phi = get_or<double>(ctx.cfg, "phi", mp.phi);
    mp.n = get_or<std::uint64_t>(ctx.cfg, "n", mp.n);
    auto levels = get_or<std::size_t>(ctx.cfg, "levels", 3);

    std::vector<Row> summary;
    auto note = [&](const std::string& key, const std::string& value) {
        summary.push_back({{"key", {key}}, {"value", {value}}});
    };

    ValidationReport rep = validate_params(mp);
    {
        std::vector<Row> rows;
        for (const auto& c : rep.conditions)
            rows.push_back({{"name", {c.name}}, {"pass", fmt(c.pass)}, {"margin", fmt(c.margin)}});
        write_csv(ctx, "conditions.csv", rows);
    }
    note("ranges_pass", fmt(rep.ranges_pass));
    note("scale_conditions_pass", fmt(rep.scale_conditions_pass));

    auto L = build_scales(mp.L0, mp.gamma, levels);
    HeightList H = build_heights(L, mp.mu);
    {
        std::vector<Row> rows;
        for (std::size_t m = 0; m < L.size(); ++m) {
            rows.push_back({{"m", fmt(static_cast<std::uint64_t>(m))},
                            {"L", fmt(L[m])},
                            {"H", m < H.H.size() ? fmt(H.H[m]) : std::string("overflow")}});
        }
        write_csv(ctx, "scales.csv", rows);
    }

    if (ctx.write_details) {
        // Hierarchy export: scales, heights, and the labels of one sampled
        // environment covering a single top-level interval.
        json hier;
        hier["levels"] = L.size();
        hier["L"] = L;
        hier["H"] = H.H;
        hier["H_complete"] = H.complete;
        if (ctx.cfg.contains("phi")) {
            RenewalParams rp{mp.phi, ctx.seed};
            Environment env = generate_environment(
                rp, L.back() * 2 * mp.n, get_or<std::uint64_t>(ctx.cfg, "env_stream", 0));
            auto cls = classify_intervals(env, mp.n, mp.lambda);
            auto labels = label_hierarchy(cls, L);
            json bitmaps = json::array();
            for (const auto& level : labels) {
                json row = json::array();
                for (bool strong : level) row.push_back(strong ? 1 : 0);
                bitmaps.push_back(row);
            }
            hier["strong"] = bitmaps;
        }
        write_text(ctx, "hierarchy.json", hier.dump(2) + "\n");
    }

    if (ctx.cfg.contains("weakfrac")) {
        const json& wf = ctx.cfg.at("weakfrac");
        auto rows_out = weak_fraction_check(mp, L, get_or<std::size_t>(wf, "max_level", 0),
                                            get_or<std::uint64_t>(wf, "environments", 1000),
                                            ctx.seed, ctx.threads);
        std::vector<Row> rows;
        for (const auto& r : rows_out)
            rows.push_back({{"level", fmt(static_cast<std::uint64_t>(r.level))},
                            {"weak", fmt(r.weak)},
                            {"environments", fmt(r.environments)},
                            {"p_hat", fmt(r.p_hat)},
                            {"bound", fmt(r.bound)},
                            {"se", fmt(r.se)},
                            {"pass", fmt(r.pass)}});
        write_csv(ctx, "weakfrac.csv", rows);
        note("weakfrac_pass_all", fmt([&] {
                 for (const auto& r : rows_out)
                     if (!r.pass) return false;
                 return true;
             }()));
    }

    if (ctx.cfg.contains("decouple")) {
        const json& dc = ctx.cfg.at("decouple");
        auto fit = decoupling_fit(mp.phi, mp.n, mp.lambda, get_or<std::uint64_t>(dc, "j", 4),
                                  get_or<std::vector<std::uint64_t>>(dc, "r_grid", {4, 16, 64}),
                                  get_or<std::uint64_t>(dc, "environments", 2000), ctx.seed,
                                  ctx.threads);
        std::vector<Row> rows;
        for (const auto& r : fit.rows)
            rows.push_back({{"r", fmt(r.r)},
                            {"p_a", fmt(r.p_a)},
                            {"p_b", fmt(r.p_b)},
                            {"p_ab", fmt(r.p_ab)},
                            {"excess", fmt(r.excess)},
                            {"excess_se", fmt(r.excess_se)},
                            {"c27_r", fmt(r.c27_r)}});
        write_csv(ctx, "decoupling.csv", rows);
        note("c27_hat", fmt(fit.c27_hat));
    }

    if (ctx.cfg.contains("qm")) {
        const json& qm = ctx.cfg.at("qm");
        // All-good stub environment unless an explicit one is configured.
        std::size_t m = get_or<std::size_t>(qm, "m", 0);
        require(m < H.H.size(), "multiscale qm: height overflow at requested level");
        std::uint64_t need_intervals = (get_or<std::uint64_t>(qm, "i", 0) + 2) * L[m] + 2;
        Environment env = dense_environment(need_intervals * 2 * mp.n);
        auto cls = classify_intervals(env, mp.n, mp.lambda);
        auto labels = label_hierarchy(cls, std::vector<std::uint64_t>(L.begin(), L.begin() + m + 1));
        QmEstimate est = estimate_qm(cls, labels, L, H, m, get_or<std::uint64_t>(qm, "i", 0),
                                     need<double>(qm, "p_G"), need<double>(qm, "p_B"),
                                     get_or<std::uint64_t>(qm, "replicas", ctx.replicas),
                                     ctx.seed, ctx.threads);
        std::vector<Row> rows{{{"event", std::string("C_fail")},
                               {"mean", fmt(est.c_fail.mean)},
                               {"ci_lo", fmt(est.c_fail.ci_lo)},
                               {"ci_hi", fmt(est.c_fail.ci_hi)}},
                              {{"event", std::string("D_fail")},
                               {"mean", fmt(est.d_fail.mean)},
                               {"ci_lo", fmt(est.d_fail.ci_lo)},
                               {"ci_hi", fmt(est.d_fail.ci_hi)}}};
        write_csv(ctx, "qm.csv", rows);
        note("q_hat", fmt(est.q_hat));
    }

    if (ctx.cfg.contains("select")) {
        const json& sel = ctx.cfg.at("select");
        SelectionResult res = feasibility_and_selection(
            mp, need<std::uint64_t>(sel, "n1"), get_or<std::uint64_t>(sel, "cap", 1 << 20));
        std::vector<Row> rows{{{"feasible", fmt(res.feasible)},
                               {"case", fmt(res.which_case)},
                               {"L0_star", fmt(res.L0_star)},
                               {"n", fmt(res.n)},
                               {"lower", fmt(res.lower)},
                               {"upper", fmt(res.upper)}}};
        write_csv(ctx, "selection.csv", rows);
        note("selection_feasible", fmt(res.feasible));
    }

    return summary;
}

// --------------------------------------------------------------- oracle --
std::vector<Row> run_oracle(RunContext& ctx) {
    auto nx = need<std::int32_t>(ctx.cfg, "nx");
    auto ny = need<std::int32_t>(ctx.cfg, "ny");
    auto k = get_or<std::int32_t>(ctx.cfg, "k", 0);
    auto p_grid = need<std::vector<double>>(ctx.cfg, "p_grid");
    SlabLattice lat(nx, ny, k);
    RegionGraph rg(lat, lat.full_box());
    std::vector<Row> rows;
    for (double p : p_grid) {
        double ph = exact_event_probability(
            lat, p, [&](const BondConfiguration& c) { return crossing_h(c, rg); });
        double pv = exact_event_probability(
            lat, p, [&](const BondConfiguration& c) { return crossing_v(c, rg); });
        rows.push_back({{"p", fmt(p)},
                        {"nx", fmt(nx)},
                        {"ny", fmt(ny)},
                        {"k", fmt(k)},
                        {"exact_h", fmt(ph)},
                        {"exact_v", fmt(pv)}});
    }
    return rows;
}

using Runner = std::function<std::vector<Row>(RunContext&)>;

const std::map<std::string, Runner>& runners() {
    static const std::map<std::string, Runner> table = {
        {"env", run_env},         {"goodfreq", run_goodfreq}, {"sample", run_sample},
        {"crossing", run_crossing}, {"corrlen", run_corrlen}, {"pc", run_pc},
        {"russo", run_russo},     {"renorm", run_renorm},     {"multiscale", run_multiscale},
        {"oracle", run_oracle},
    };
    return table;
}

// ---------------------------------------------------------------- sweep --
std::vector<Row> run_sweep(RunContext& ctx) {
    const json& base = ctx.cfg.contains("base") ? ctx.cfg.at("base") : json::object();
    auto kind = need<std::string>(base.is_null() ? ctx.cfg : base, "kind");
    auto it = runners().find(kind);
    if (it == runners().end()) throw param_error("sweep: unknown base kind " + kind);
    const json& grid = need<json>(ctx.cfg, "grid");
    require(grid.is_object() && !grid.empty(), "sweep: grid must be a nonempty object");
    bool crn = get_or<bool>(ctx.cfg, "crn", true);

    std::vector<std::string> keys;
    std::vector<std::vector<json>> values;
    for (auto& [key, vals] : grid.items()) {
        require(vals.is_array() && !vals.empty(), "sweep: grid entry must be a nonempty array");
        keys.push_back(key);
        values.emplace_back(vals.begin(), vals.end());
    }

    std::vector<Row> out;
    std::vector<std::size_t> index(keys.size(), 0);
    std::uint64_t point = 0;
    while (true) {
        RunContext sub;
        sub.cfg = base;
        sub.out_dir = ctx.out_dir;
        sub.write_details = false;
        sub.replicas = get_or<std::uint64_t>(base, "replicas", ctx.replicas);
        sub.threads = ctx.threads;
        sub.seed = crn ? ctx.seed : ctx.seed + 0x9e3779b97f4a7c15ull * (point + 1);
        for (std::size_t i = 0; i < keys.size(); ++i) sub.cfg[keys[i]] = values[i][index[i]];
        auto rows = it->second(sub);
        for (auto& row : rows) {
            Row merged;
            for (std::size_t i = 0; i < keys.size(); ++i)
                merged.push_back({"grid_" + keys[i], values[i][index[i]].dump()});
            for (auto& cell : row) merged.push_back(cell);
            out.push_back(merged);
        }
        // Advance the cross-product index.
        std::size_t d = 0;
        while (d < keys.size()) {
            if (++index[d] < values[d].size()) break;
            index[d] = 0;
            ++d;
        }
        ++point;
        if (d == keys.size()) break;
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"slabperc: percolation on reinforced slabs, experiment driver"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    std::uint64_t replicas = 0;
    unsigned threads_opt = 0;
    bool have_seed = false, have_replicas = false, have_threads = false, have_out = false;

    std::vector<std::string> kinds = {"env",  "goodfreq", "sample", "crossing", "corrlen", "pc",
                                      "russo", "renorm",  "multiscale", "sweep", "oracle"};
    std::map<std::string, CLI::App*> subs;
    for (const auto& kind : kinds) {
        CLI::App* sub = app.add_subcommand(kind);
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--seed", seed)->each([&](const std::string&) { have_seed = true; });
        sub->add_option("--replicas", replicas)->each([&](const std::string&) { have_replicas = true; });
        sub->add_option("--threads", threads_opt)->each([&](const std::string&) { have_threads = true; });
        sub->add_option("--out", out_dir)->each([&](const std::string&) { have_out = true; });
        subs[kind] = sub;
    }

    CLI11_PARSE(app, argc, argv);

    std::string kind;
    for (const auto& [name, sub] : subs)
        if (sub->parsed()) kind = name;

    auto t0 = std::chrono::steady_clock::now();
    try {
        RunContext ctx;
        if (!config_path.empty()) {
            std::ifstream is(config_path);
            if (!is) throw param_error("cannot open config file " + config_path);
            ctx.cfg = json::parse(is);
        } else {
            ctx.cfg = json::object();
        }
        // CLI flags override top-level config keys.
        if (have_seed) ctx.cfg["seed"] = seed;
        if (have_replicas) ctx.cfg["replicas"] = replicas;
        if (have_threads) ctx.cfg["threads"] = threads_opt;
        if (have_out) ctx.cfg["out"] = out_dir;

        ctx.seed = get_or<std::uint64_t>(ctx.cfg, "seed", 1);
        ctx.replicas = get_or<std::uint64_t>(ctx.cfg, "replicas", 1000);
        ctx.threads = get_or<unsigned>(ctx.cfg, "threads", 0);
        ctx.out_dir = get_or<std::string>(ctx.cfg, "out", "runs/" + kind);
        ctx.cfg["kind"] = kind;

        std::vector<Row> rows;
        if (kind == "sweep") rows = run_sweep(ctx);
        else rows = runners().at(kind)(ctx);
        write_csv(ctx, "results.csv", rows);

        double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        json manifest;
        manifest["version"] = kVersion;
        manifest["kind"] = kind;
        manifest["config"] = ctx.cfg;
        manifest["wall_time_s"] = wall;
        json outputs = json::object();
        for (const auto& name : ctx.written) outputs[name] = file_digest(ctx.out_dir + "/" + name);
        manifest["outputs"] = outputs;
        fs::create_directories(ctx.out_dir);
        std::ofstream mos(ctx.out_dir + "/manifest.json", std::ios::binary);
        mos << manifest.dump(2) << "\n";
        return 0;
    } catch (const size_error& e) {
        json err = {{"error", "resource_cap"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 3;
    } catch (const param_error& e) {
        json err = {{"error", "config"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 2;
    } catch (const json::exception& e) {
        json err = {{"error", "config"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 2;
    } catch (const std::exception& e) {
        json err = {{"error", "internal"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
}
