// fspde: command-line driver for spectra, kernel reports and SPDE ensembles.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <fspde/estimators.hpp>
#include <fspde/fspde.hpp>
#include <fspde/io.hpp>

namespace fs = std::filesystem;
using namespace fspde;

namespace {

std::string invocation;

struct GeometryArgs {
    std::string fractal = "gasket";
    int level = 5;
    std::string boundary = "N";
    std::size_t modes = 0;
    int max_level = default_max_level;

    void attach(CLI::App* app) {
        app->add_option("--fractal", fractal, "built-in name (gasket, interval) or key-value spec file")->capture_default_str();
        app->add_option("--level", level, "graph approximation level m")->capture_default_str();
        app->add_option("--boundary", boundary, "N, D or a list of Neumann corners such as 0,2")->capture_default_str();
        app->add_option("--modes", modes, "number of eigenpairs K (0 = all)")->capture_default_str();
        app->add_option("--max-level", max_level, "refuse graphs deeper than this")->capture_default_str();
    }
    Json echo() const {
        return {{"fractal", fractal}, {"level", level}, {"boundary", boundary}, {"modes", modes}};
    }
};

struct Built {
    FractalSpec spec;
    GraphApproximation graph;
    Spectrum spectrum;
};

Built build(const GeometryArgs& a) {
    Built b;
    b.spec = load_fractal(a.fractal);
    const auto bc = BoundaryCondition::parse(a.boundary, b.spec.boundary_size());
    b.graph = build_graph(b.spec, a.level, a.max_level);
    b.spectrum = compute_spectrum(b.graph, bc, a.modes);
    return b;
}

std::vector<std::size_t> spread_probes(const Spectrum& sp, std::size_t count) {
    std::vector<std::size_t> free;
    for (std::size_t v = 0; v < sp.vertex_count(); ++v)
        if (!sp.eigenvectors().row(static_cast<Eigen::Index>(v)).isZero(0.0)) free.push_back(v);
    std::vector<std::size_t> out;
    const std::size_t n = std::min(count, free.size());
    for (std::size_t i = 0; i < n; ++i) out.push_back(free[(2 * i + 1) * free.size() / (2 * n)]);
    return out;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0) || !(hi > lo) || n < 2) throw UsageError("log grid needs 0 < lo < hi and at least two points");
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n - 1));
    return g;
}

Json fit_json(const SlopeEstimate& e) {
    return {{"slope", e.slope}, {"ci_low", e.ci_low}, {"ci_high", e.ci_high}, {"bootstrap_sd", e.stderr_},
            {"resamples", e.resamples}};
}

// ---------------------------------------------------------------------------

struct SpectrumCmd {
    GeometryArgs geo;
    std::string out = "fspde_out/spectrum";
    std::size_t k_min = 10, k_max = 240;

    int run() {
        const auto b = build(geo);
        OutputSet files(invocation, geo.echo());
        files.add("vertices.csv", vertices_csv(b.graph));
        files.add("spectrum.csv", spectrum_csv(b.spectrum));

        Json report;
        report["hausdorff_dimension"] = b.spec.hausdorff_dimension();
        report["spectral_dimension"] = b.spec.spectral_dimension();
        report["vertex_count"] = b.graph.vertex_count();
        report["modes"] = b.spectrum.size();
        report["spectral_gap"] = json_number(b.spectrum.spectral_gap());
        const std::size_t hi = std::min(k_max, b.spectrum.size());
        try {
            const auto w = weyl_fit(b.spectrum, k_min, hi);
            report["weyl"] = {{"k_min", w.k_min}, {"k_max", w.k_max}, {"slope", w.slope}, {"slope_stderr", w.slope_stderr},
                              {"counting_slope", w.counting_slope}, {"target", w.target}};
        } catch (const DomainError& e) {
            report["weyl"] = {{"skipped", e.what()}};
        }
        if (b.spec.name() == "interval" && b.spectrum.boundary().is_full_dirichlet()) {
            CsvTable t({"k", "lambda", "oracle", "relative_error"});
            for (std::size_t k = 1; k <= b.spectrum.size(); ++k) {
                const double oracle = std::pow(static_cast<double>(k) * std::numbers::pi, 2);
                t.cell(k).cell(b.spectrum.eigenvalue(k - 1)).cell(oracle).cell(b.spectrum.eigenvalue(k - 1) / oracle - 1.0);
                t.end_row();
            }
            files.add("interval_oracle.csv", t.str());
        }
        files.add_json("weyl_report.json", report);
        files.commit(out);
        std::cout << report.dump(2) << "\n";
        return 0;
    }
};

struct KernelCmd {
    GeometryArgs geo;
    std::string out = "fspde_out/kernel";
    double t_lo = 1e-6, t_hi = 1.0;
    std::size_t points = 40, probes = 20;
    std::optional<double> t_single;
    std::string x = "0", y = "0";
    bool force = false;

    int run() {
        const auto b = build(geo);
        OutputSet files(invocation, geo.echo());
        if (t_single) {
            const auto xv = b.graph.resolve(x), yv = b.graph.resolve(y);
            const auto kv = heat_kernel(b.spectrum, *t_single, xv, yv, {.force = force});
            files.add("kernel.csv", kernel_csv({{*t_single, xv, yv, kv.value, kv.tail_bound}}));
            files.commit(out);
            std::cout << format_double(kv.value) << "\n";
            return 0;
        }
        const auto probe_ids = spread_probes(b.spectrum, probes);
        const auto grid = log_grid(t_lo, t_hi, points);
        const ResistanceMetric metric(b.graph);
        std::vector<IncrementTriple> triples;
        NoiseStream pick(1, 0, 0);
        const auto nv = b.graph.vertex_count();
        for (int i = 0; i < 50; ++i)
            triples.push_back({static_cast<std::size_t>(pick.uniform() * static_cast<double>(nv)),
                               static_cast<std::size_t>(pick.uniform() * static_cast<double>(nv)),
                               static_cast<std::size_t>(pick.uniform() * static_cast<double>(nv))});
        const auto rep = kernel_bound_report(b.spectrum, grid, probe_ids, triples, &metric);

        std::vector<KernelRow> rows;
        PlotSeries diag{"mean p_t(x,x)", {}, {}, false}, guide{"slope -d_s/2", {}, {}, true};
        for (double t : grid) {
            double mean = 0.0;
            for (auto p : probe_ids) {
                const auto kv = heat_kernel(b.spectrum, t, p, p, {.force = true});
                rows.push_back({t, p, p, kv.value, kv.tail_bound});
                mean += kv.value;
            }
            diag.x.push_back(t);
            diag.y.push_back(mean / static_cast<double>(probe_ids.size()));
        }
        for (double t : rep.fit_times) {
            guide.x.push_back(t);
            guide.y.push_back(std::exp(rep.diagonal_fit.intercept) * std::pow(t, rep.target_slope));
        }
        Json report;
        report["window"] = {{"t_min", rep.window.t_min}, {"t_max", json_number(rep.window.t_max)}};
        report["diagonal_slope"] = rep.diagonal_fit.slope;
        report["diagonal_slope_stderr"] = rep.diagonal_fit.slope_stderr;
        report["probe_slope_min"] = rep.probe_slope_min;
        report["probe_slope_max"] = rep.probe_slope_max;
        report["target_slope"] = rep.target_slope;
        report["fit_points"] = rep.fit_times.size();
        report["c7"] = rep.c7;
        report["c8"] = rep.c8;
        report["c2"] = rep.c2;
        report["increment_samples"] = rep.increment_samples;
        files.add("kernel.csv", kernel_csv(rows));
        files.add_json("kernel_report.json", report);
        files.add("diagonal.svg", svg_loglog("on-diagonal heat kernel", "t", "p_t(x,x)", {diag, guide}));
        files.commit(out);
        std::cout << report.dump(2) << "\n";
        return 0;
    }
};

struct ResolventCmd {
    GeometryArgs geo;
    std::string out = "fspde_out/resolvent";
    double lambda = 1.0;
    std::size_t triples = 10000;
    std::uint64_t seed = 1;

    int run() {
        const auto b = build(geo);
        OutputSet files(invocation, geo.echo(), seed);
        const Matrix rho = resolvent_matrix(b.spectrum, lambda);
        const ResistanceMetric metric(b.graph);
        const auto nv = b.graph.vertex_count();
        NoiseStream pick(seed, 0, 0);
        CsvTable t({"x", "x_prime", "y", "r_xxp", "abs_difference", "margin"});
        PlotSeries scatter{"|rho(x,y) - rho(x',y)|", {}, {}, false}, bound{"2 R(x,x')", {}, {}, true};
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < triples; ++i) {
            const auto x = static_cast<std::size_t>(pick.uniform() * static_cast<double>(nv));
            const auto xp = static_cast<std::size_t>(pick.uniform() * static_cast<double>(nv));
            const auto y = static_cast<std::size_t>(pick.uniform() * static_cast<double>(nv));
            const double r = metric(x, xp);
            const double d = std::abs(rho(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) -
                                      rho(static_cast<Eigen::Index>(xp), static_cast<Eigen::Index>(y)));
            const double margin = d - 2.0 * r;
            worst = std::max(worst, margin);
            t.cell(x).cell(xp).cell(y).cell(r).cell(d).cell(margin);
            t.end_row();
            if (i < 2000) {
                scatter.x.push_back(r);
                scatter.y.push_back(d);
            }
        }
        for (double r : log_grid(1e-4, 4.0, 20)) {
            bound.x.push_back(r);
            bound.y.push_back(2.0 * r);
        }
        Json report{{"lambda", lambda}, {"triples", triples}, {"max_margin", worst}, {"holds", worst <= 1e-8}};
        files.add("lipschitz.csv", t.str());
        files.add_json("resolvent_report.json", report);
        files.add("lipschitz.svg", svg_loglog("resolvent Lipschitz margin", "R(x,x')", "difference", {scatter, bound}));
        files.set_summary({{"lipschitz_bound", worst <= 1e-8 ? "pass" : "fail"}});
        files.commit(out);
        std::cout << report.dump(2) << "\n";
        return 0;
    }
};

// ---------------------------------------------------------------------------
// Ensemble commands share config loading.

struct EnsembleArgs {
    std::string config;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    double max_censored = 0.05;
    std::string out;

    void attach(CLI::App* app, const std::string& default_out) {
        out = default_out;
        app->add_option("--config", config, "key-value config file (fractal, level, boundary, K, dt, T, snapshots, "
                                              "paths, seed, f, g, u0, stepper, noise, probes, probe_start, probe_stride, p)");
        app->add_option("--set", overrides, "override a config key, key=value (repeatable)");
        app->add_option("--seed", seed, "RNG seed");
        app->add_option("--paths", paths, "number of sample paths");
        app->add_option("--max-censored", max_censored, "censored-path fraction that aborts with exit 5")->capture_default_str();
        app->add_option("--out", out, "output directory")->capture_default_str();
    }

    SimConfig load(bool need_seed) const {
        KeyValues kv = config.empty() ? KeyValues{} : load_key_values(config);
        for (const auto& o : overrides) {
            const auto eq = o.find('=');
            if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + o + "'");
            kv[detail::trim(o.substr(0, eq))] = detail::trim(o.substr(eq + 1));
        }
        if (seed) kv["seed"] = std::to_string(*seed);
        if (paths) kv["paths"] = std::to_string(*paths);
        if (need_seed && !kv.count("seed")) throw UsageError("a seed is required (--seed or 'seed' in the config)");
        return SimConfig::from_key_values(kv);
    }
};

Json ensemble_summary(const Ensemble& ens, const Spectrum& sp, const SimConfig& cfg) {
    Json j;
    j["paths"] = ens.paths.size();
    j["censored_paths"] = ens.censored_count();
    j["censored_fraction"] = ens.censored_fraction();
    j["uncensored_until"] = json_number(ens.uncensored_until());
    j["probes"] = ens.probes;
    j["modes"] = sp.size();
    if (cfg.moment_p > 0.0) {
        const auto e = theoretical_holder_exponents(cfg.moment_p, sp.hausdorff_dimension());
        j["holder_exponents"] = {{"p", cfg.moment_p}, {"joint", e.joint}, {"spatial", e.spatial},
                                 {"temporal", e.temporal}, {"hypothesis_threshold_met", e.valid}};
        if (!e.valid) std::cerr << "warning: p <= (d_H + 1)^2, Holder claims do not apply\n";
    }
    return j;
}

struct SimulateCmd {
    EnsembleArgs args;
    std::size_t thin = 1;

    int run() {
        const auto cfg = args.load(true);
        const auto model = Model::build(cfg);
        const auto ens = simulate(cfg, model);
        ens.check_censoring(args.max_censored);
        OutputSet files(invocation, to_json(cfg.to_key_values()), cfg.seed);
        files.add("trajectory.csv", trajectory_csv(ens, thin));
        files.add("probes.csv", probe_csv(ens));
        files.add("moments.csv", moments_csv(ensemble_moments(ens, 2.0)));
        const auto summary = ensemble_summary(ens, model.spectrum, cfg);
        files.add_json("report.json", summary);
        files.set_extra("censoring", {{"censored_paths", ens.censored_count()}, {"censored_fraction", ens.censored_fraction()}});
        const auto m = files.commit(args.out);
        std::cout << m["files"].dump(2) << "\n";
        return 0;
    }
};

struct HolderCmd {
    EnsembleArgs args;
    double order = 2.0;
    double lag_min = 0.0, lag_max = 0.02;
    double r_min = 0.0, r_max = std::numeric_limits<double>::infinity();
    std::size_t min_paths = 100;
    std::string cauchy;

    int run() {
        std::vector<long long> levels;
        if (!cauchy.empty()) {
            const auto colon = cauchy.find(':');
            if (colon == std::string::npos) throw UsageError("--cauchy expects n_min:n_max");
            levels = {parse_integer(cauchy.substr(0, colon)), parse_integer(cauchy.substr(colon + 1))};
        }
        const auto cfg = args.load(true);
        const auto model = Model::build(cfg);
        if (!levels.empty() && build_partition(model.spec, static_cast<int>(levels[1])).max_length() > static_cast<std::size_t>(cfg.level))
            throw AddressError("Cauchy level " + std::to_string(levels[1]) + " is deeper than graph level " + std::to_string(cfg.level) + " resolves");
        const auto ens = simulate(cfg, model);
        ens.check_censoring(0.0);
        const ResistanceMetric metric(model.graph);
        IncrementOptions opt;
        opt.order = order;
        opt.min_paths = min_paths;
        opt.min_distance = r_min, opt.max_distance = r_max;
        const auto spatial = increment_moment_slope(ens, IncrementAxis::spatial, &metric, opt);
        opt.min_distance = lag_min, opt.max_distance = lag_max;
        const auto temporal = increment_moment_slope(ens, IncrementAxis::temporal, nullptr, opt);
        const double p = order / 2.0, dh = model.spectrum.hausdorff_dimension();

        Json report = ensemble_summary(ens, model.spectrum, cfg);
        report["order"] = order;
        report["spatial"] = fit_json(spatial.fit);
        report["spatial"]["target"] = p;
        report["temporal"] = fit_json(temporal.fit);
        report["temporal"]["target"] = p / (dh + 1.0);
        report["saturation_note"] = "targets assume the upper bounds are attained (additive noise)";

        OutputSet files(invocation, to_json(cfg.to_key_values()), cfg.seed);
        CsvTable t({"axis", "distance", "order", "estimate", "stderr", "samples"});
        std::vector<PlotSeries> plots;
        for (const auto* s : {&spatial.series, &temporal.series}) {
            PlotSeries ps{s->axis, {}, {}, false};
            for (const auto& pt : s->points) {
                t.cell(s->axis).cell(pt.distance).cell(s->order).cell(pt.estimate).cell(pt.stderr_).cell(pt.samples);
                t.end_row();
                ps.x.push_back(pt.distance);
                ps.y.push_back(pt.estimate);
            }
            plots.push_back(ps);
        }
        if (!cauchy.empty()) {
            std::vector<Vector> fields;
            for (const auto& tr : ens.paths) fields.push_back(tr.snapshots.back());
            const auto rate = delta_cauchy_rate(model.graph, fields, ens.probes, static_cast<int>(levels[0]),
                                                static_cast<int>(levels[1]), order);
            report["delta_cauchy"] = fit_json(rate.fit);
            report["delta_cauchy"]["bound_slope"] = rate.bound_slope;
            report["delta_cauchy"]["levels"] = rate.levels;
            report["delta_cauchy"]["moments"] = rate.moments;
        }
        files.add("increments.csv", t.str());
        files.add("moments.csv", moments_csv(ensemble_moments(ens, order)));
        files.add_json("holder_report.json", report);
        files.add("increments.svg", svg_loglog("increment moments", "R(x,y) or |s-t|", "E|increment|^2p", plots));
        files.commit(args.out);
        std::cout << report.dump(2) << "\n";
        return 0;
    }
};

struct IntermittencyCmd {
    EnsembleArgs args;
    std::size_t min_paths = 200;

    int run() {
        const auto cfg = args.load(true);
        const auto model = Model::build(cfg);
        const Vector u0 = initial_field(cfg.u0, model);
        require_intermittency_hypotheses(model.spectrum.boundary(), u0);
        const auto ens = simulate(cfg, model);
        ens.check_censoring(args.max_censored);
        LyapunovOptions opt;
        opt.min_paths = min_paths;
        const auto rep = intermittency_report(ens, model.spectrum, cfg.diffusion, u0, opt);

        Json report = ensemble_summary(ens, model.spectrum, cfg);
        report["L_g"] = rep.lg;
        report["alpha"] = rep.alpha;
        report["renewal_limit"] = rep.renewal_limit;
        report["inf_u0_sq"] = rep.inf_u0_sq;
        report["lyapunov_2"] = fit_json(rep.lyapunov.fit);
        report["lyapunov_2"]["window"] = {rep.lyapunov.window_start, rep.lyapunov.window_end};
        report["lyapunov_2"]["inconclusive"] = rep.lyapunov.inconclusive;
        report["lyapunov_2"]["c10"] = rep.lyapunov.c10;
        report["growth_rate"] = rep.growth_rate;
        report["min_ratio"] = rep.min_ratio;
        report["weakly_intermittent"] = rep.weakly_intermittent;

        OutputSet files(invocation, to_json(cfg.to_key_values()), cfg.seed);
        CsvTable t({"t", "min_second_moment"});
        PlotSeries s{"min_x E u(t,x)^2", rep.times, rep.second_moment_min, true};
        for (std::size_t i = 0; i < rep.times.size(); ++i) {
            t.cell(rep.times[i]).cell(rep.second_moment_min[i]);
            t.end_row();
        }
        files.add("second_moment.csv", t.str());
        files.add("moments.csv", moments_csv(ensemble_moments(ens, 2.0)));
        files.add_json("intermittency_report.json", report);
        files.add("second_moment.svg", svg_loglog("second moment growth", "t", "I(t)", {s}));
        files.set_summary({{"weakly_intermittent", rep.weakly_intermittent}});
        files.commit(args.out);
        std::cout << report.dump(2) << "\n";
        return 0;
    }
};

// Exploratory: lambda(p) for several p, compared with p^{2+d_H} growth. Not a verdict.
struct LyapunovScanCmd {
    EnsembleArgs args;
    std::vector<double> orders{1.0, 2.0, 3.0, 4.0};

    int run() {
        const auto cfg = args.load(true);
        const auto model = Model::build(cfg);
        const auto ens = simulate(cfg, model);
        ens.check_censoring(args.max_censored);
        Json rows = Json::array();
        std::vector<MomentRow> moments;
        for (double p : orders) {
            LyapunovOptions opt;
            opt.p = p;
            opt.min_paths = 1;
            opt.resamples = 200;
            const auto est = moment_lyapunov(ens, model.spectrum.hausdorff_dimension(), opt);
            Json r = fit_json(est.fit);
            r["p"] = p;
            r["inconclusive"] = est.inconclusive;
            r["ratio_to_p_pow_2_plus_dH"] = est.fit.slope / std::pow(p, 2.0 + model.spectrum.hausdorff_dimension());
            rows.push_back(r);
            const auto m = ensemble_moments(ens, p);
            moments.insert(moments.end(), m.begin(), m.end());
        }
        Json report = ensemble_summary(ens, model.spectrum, cfg);
        report["scan"] = rows;
        report["note"] = "exploratory only";
        OutputSet files(invocation, to_json(cfg.to_key_values()), cfg.seed);
        files.add("moments.csv", moments_csv(moments));
        files.add_json("lyapunov_scan.json", report);
        files.commit(args.out);
        std::cout << report.dump(2) << "\n";
        return 0;
    }
};

}  // namespace

int main(int argc, char** argv) {
    for (int i = 0; i < argc; ++i) invocation += (i ? " " : "") + std::string(argv[i]);
    CLI::App app{"Simulation and verification tools for SPDEs on p.c.f. self-similar fractals.\n"
                 "Thread count for simulations is read from FSPDE_THREADS."};
    app.require_subcommand(1);
    app.set_version_flag("--version", FSPDE_VERSION);

    SpectrumCmd spectrum;
    auto* sc = app.add_subcommand("spectrum", "eigenpairs, vertex table and Weyl fit");
    spectrum.geo.attach(sc);
    sc->add_option("--out", spectrum.out, "output directory")->capture_default_str();
    sc->add_option("--k-min", spectrum.k_min, "first index of the Weyl fit")->capture_default_str();
    sc->add_option("--k-max", spectrum.k_max, "last index of the Weyl fit")->capture_default_str();

    KernelCmd kernel;
    auto* kc = app.add_subcommand("kernel", "heat kernel values and bound report");
    kernel.geo.attach(kc);
    kc->add_option("--out", kernel.out, "output directory")->capture_default_str();
    kc->add_option("--t-min", kernel.t_lo, "smallest grid time")->capture_default_str();
    kc->add_option("--t-max", kernel.t_hi, "largest grid time")->capture_default_str();
    kc->add_option("--points", kernel.points, "log-spaced grid size")->capture_default_str();
    kc->add_option("--probes", kernel.probes, "diagonal probe vertices")->capture_default_str();
    kc->add_option("--t", kernel.t_single, "evaluate p_t(x,y) at a single time");
    kc->add_option("--x", kernel.x, "vertex id or word:corner")->capture_default_str();
    kc->add_option("--y", kernel.y, "vertex id or word:corner")->capture_default_str();
    kc->add_flag("--force", kernel.force, "evaluate even when the truncation tail exceeds 1%");

    ResolventCmd resolvent;
    auto* rc = app.add_subcommand("resolvent", "resolvent density Lipschitz scan");
    resolvent.geo.attach(rc);
    rc->add_option("--out", resolvent.out, "output directory")->capture_default_str();
    rc->add_option("--lambda", resolvent.lambda, "resolvent parameter")->capture_default_str();
    rc->add_option("--triples", resolvent.triples, "random (x, x', y) triples")->capture_default_str();
    rc->add_option("--seed", resolvent.seed, "triple sampler seed")->capture_default_str();

    SimulateCmd simulate_cmd;
    auto* simc = app.add_subcommand("simulate", "run an ensemble and write trajectories");
    simulate_cmd.args.attach(simc, "fspde_out/simulate");
    simc->add_option("--thin", simulate_cmd.thin, "keep every n-th vertex in trajectory.csv")->capture_default_str();

    HolderCmd holder;
    auto* hc = app.add_subcommand("holder", "increment-moment scaling of an ensemble");
    holder.args.attach(hc, "fspde_out/holder");
    hc->add_option("--order", holder.order, "moment order 2p")->capture_default_str();
    hc->add_option("--lag-min", holder.lag_min, "smallest temporal lag in the fit")->capture_default_str();
    hc->add_option("--lag-max", holder.lag_max, "largest temporal lag in the fit")->capture_default_str();
    hc->add_option("--r-min", holder.r_min, "smallest resistance distance in the fit")->capture_default_str();
    hc->add_option("--r-max", holder.r_max, "largest resistance distance in the fit");
    hc->add_option("--min-paths", holder.min_paths, "refuse with fewer paths")->capture_default_str();
    hc->add_option("--cauchy", holder.cauchy, "delta-approximant levels n_min:n_max");

    IntermittencyCmd inter;
    auto* ic = app.add_subcommand("intermittency", "second-moment Lyapunov exponent and verdict");
    inter.args.attach(ic, "fspde_out/intermittency");
    ic->add_option("--min-paths", inter.min_paths, "refuse with fewer paths")->capture_default_str();

    LyapunovScanCmd scan;
    auto* lc = app.add_subcommand("lyapunov-scan", "exploratory lambda(p) for several p");
    scan.args.attach(lc, "fspde_out/lyapunov_scan");
    lc->add_option("--orders", scan.orders, "moment orders p")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ExitCode::usage);
    }
    try {
        if (*sc) return spectrum.run();
        if (*kc) return kernel.run();
        if (*rc) return resolvent.run();
        if (*simc) return simulate_cmd.run();
        if (*hc) return holder.run();
        if (*ic) return inter.run();
        if (*lc) return scan.run();
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.exit_code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::usage);
    }
    return 0;
}
