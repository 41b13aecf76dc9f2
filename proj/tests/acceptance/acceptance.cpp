// One PASS/FAIL line per acceptance criterion. Exit status is 0 when every
// failing criterion is on the documented expected-failure list (see README).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include <fspde/fspde.hpp>
#include <fspde/io.hpp>

using namespace fspde;

namespace {

constexpr double pi = std::numbers::pi;
const std::string config_dir = FSPDE_CONFIG_DIR;

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    std::vector<double> g;
    for (std::size_t i = 0; i < n; ++i)
        g.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n - 1)));
    return g;
}

std::vector<std::size_t> spread(const Spectrum& sp, std::size_t n) {
    std::vector<std::size_t> free;
    for (std::size_t v = 0; v < sp.vertex_count(); ++v)
        if (!sp.eigenvectors().row(static_cast<Eigen::Index>(v)).isZero(0.0)) free.push_back(v);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(free[(2 * i + 1) * free.size() / (2 * n)]);
    return out;
}

SimConfig load_config(const std::string& name) { return SimConfig::from_key_values(load_key_values(config_dir + "/" + name)); }

// ---------------------------------------------------------------------------

Outcome interval_oracle() {
    const auto g = build_graph(unit_interval(), 10);
    const auto sp = compute_spectrum(g, BoundaryCondition::dirichlet(2), 40);
    double worst_ev = 0.0;
    for (std::size_t k = 1; k <= 10; ++k) {
        const double exact = k * k * pi * pi;
        worst_ev = std::max(worst_ev, std::abs(sp.eigenvalue(k - 1) - exact) / exact);
    }
    const auto mid = g.resolve("1:0");
    double oracle = 0.0;
    for (int k = 1; k < 200; ++k) oracle += 2.0 * std::pow(std::sin(k * pi * 0.5), 2) * std::exp(-k * k * pi * pi * 0.1);
    const double kernel_err = std::abs(heat_kernel(sp, 0.1, mid, mid).value - oracle);
    const ResistanceMetric r(g);
    double metric_err = 0.0;
    for (std::size_t x = 0; x < g.vertex_count(); x += 7)
        for (std::size_t y = 0; y < g.vertex_count(); y += 13)
            metric_err = std::max(metric_err, std::abs(r(x, y) - std::abs(interval_coordinate(g, x) - interval_coordinate(g, y))));
    return {worst_ev < 2e-3 && kernel_err < 1e-6 && metric_err < 1e-10,
            fmt("max rel eigenvalue err %.2e, kernel err %.2e, |R - |x-y|| %.2e", worst_ev, kernel_err, metric_err)};
}

Outcome weyl_exponent() {
    const auto g = build_graph(sierpinski_gasket(), 6);
    const double target = 2.0 / g.spec().spectral_dimension();
    bool pass = true;
    std::string detail;
    for (const char* bc : {"N", "D"}) {
        const auto sp = compute_spectrum(g, BoundaryCondition::parse(bc, 3), 300);
        const auto w = weyl_fit(sp, 10, 240);
        pass = pass && std::abs(w.slope - target) <= 0.05;
        detail += fmt("%s: slope %.4f (counting-function %.4f) ", bc, w.slope, w.counting_slope);
    }
    return {pass, detail + fmt("target %.4f +- 0.05", target)};
}

Outcome kernel_bounds() {
    const auto g = build_graph(sierpinski_gasket(), 6);
    const auto sp = compute_spectrum(g, BoundaryCondition::neumann(3));
    const auto probes = spread(sp, 20);
    const auto rep = kernel_bound_report(sp, log_grid(1e-6, 1.0, 40), probes);
    const double slope_err = std::abs(rep.diagonal_fit.slope - rep.target_slope);
    double far = 0.0;
    for (auto x : probes) far = std::max(far, std::abs(heat_kernel(sp, 5.0, x, x).value - 1.0));
    const Matrix ps = heat_kernel_matrix(sp, 0.01), pt = heat_kernel_matrix(sp, 0.02), pst = heat_kernel_matrix(sp, 0.03);
    const double ck = (ps * sp.masses().asDiagonal() * pt - pst).cwiseAbs().maxCoeff();
    return {slope_err <= 0.05 && far < 1e-4 && ck < 1e-8,
            fmt("diagonal slope %.4f vs %.4f on [%.2e, %.2e], |p_5(x,x) - 1| %.1e, Chapman-Kolmogorov %.1e",
                rep.diagonal_fit.slope, rep.target_slope, rep.window.t_min, rep.window.t_max, far, ck)};
}

Outcome resolvent_lipschitz() {
    const auto g = build_graph(sierpinski_gasket(), 6);
    const auto sp = compute_spectrum(g, BoundaryCondition::neumann(3));
    const Matrix rho = resolvent_matrix(sp, 1.0);
    const ResistanceMetric metric(g);
    NoiseStream pick(1, 0, 0);
    const auto nv = static_cast<double>(g.vertex_count());
    double worst = -std::numeric_limits<double>::infinity(), worst_distinct = worst;
    for (int i = 0; i < 10000; ++i) {
        const auto x = static_cast<std::size_t>(pick.uniform() * nv);
        const auto xp = static_cast<std::size_t>(pick.uniform() * nv);
        const auto y = static_cast<std::size_t>(pick.uniform() * nv);
        const double d = std::abs(rho(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) -
                                  rho(static_cast<Eigen::Index>(xp), static_cast<Eigen::Index>(y)));
        worst = std::max(worst, d - 2.0 * metric(x, xp));
        if (x != xp) worst_distinct = std::max(worst_distinct, d - 2.0 * metric(x, xp));
    }
    return {worst <= 1e-8, fmt("max margin %.3e over 10^4 triples (%.3e with x != x')", worst, worst_distinct)};
}

Outcome semigroup_increment() {
    const auto g = build_graph(sierpinski_gasket(), 6);
    std::size_t violations = 0, checked = 0;
    for (const char* bc : {"N", "D"}) {
        const auto sp = compute_spectrum(g, BoundaryCondition::parse(bc, 3));
        for (double t0 : log_grid(1e-5, 10.0, 20))
            for (double t : log_grid(1e-5, 10.0, 20)) {
                ++checked;
                if (semigroup_increment_norm(sp, t0, t) > semigroup_increment_bound(t0, t) * (1.0 + 1e-12)) ++violations;
            }
    }
    return {violations == 0, fmt("%zu violations over %zu (t0, t) pairs, N and D", violations, checked)};
}

Outcome partition_audit() {
    std::size_t bad = 0, cells = 0;
    for (const auto& spec : {sierpinski_gasket(), unit_interval()}) {
        Partition prev = build_partition(spec, 0);
        for (int n = 0; n <= 8; ++n) {
            const auto part = build_partition(spec, n);
            const auto a = audit_partition(spec, part, n ? &prev : nullptr);
            if (!a.ok()) ++bad;
            cells += a.words;
            prev = part;
        }
    }
    return {bad == 0, fmt("%zu failing levels, %zu cells audited", bad, cells)};
}

// Criteria 7 and 8 share the gasket ensemble.
struct SheResult {
    Outcome regularity;
    Outcome cauchy;
};

SheResult she_regularity() {
    IncrementOptions opt;
    auto slopes = [&](const std::string& cfg_name, double lag_max, int cauchy_max, CauchyRate* rate) {
        const auto cfg = load_config(cfg_name);
        const auto m = Model::build(cfg);
        const auto ens = simulate(cfg, m);
        const ResistanceMetric metric(m.graph);
        IncrementOptions o = opt;
        const auto spatial = increment_moment_slope(ens, IncrementAxis::spatial, &metric, o);
        o.max_distance = lag_max;
        const auto temporal = increment_moment_slope(ens, IncrementAxis::temporal, nullptr, o);
        if (rate) {
            std::vector<Vector> fields;
            for (const auto& tr : ens.paths) fields.push_back(tr.snapshots.back());
            *rate = delta_cauchy_rate(m.graph, fields, ens.probes, 0, cauchy_max);
        }
        return std::pair{spatial.fit, temporal.fit};
    };
    CauchyRate rate;
    const double dh = sierpinski_gasket().hausdorff_dimension();
    const auto [gs, gt] = slopes("she_gasket.cfg", 0.02, 4, &rate);
    const auto [is, it] = slopes("she_interval.cfg", 0.0013, 0, nullptr);
    const bool gasket_ok = std::abs(gs.slope - 1.0) <= 0.07 && std::abs(gt.slope - 1.0 / (dh + 1.0)) <= 0.07;
    const bool interval_ok = std::abs(is.slope - 1.0) <= 0.05 && std::abs(it.slope - 0.5) <= 0.05;
    SheResult r;
    r.regularity = {gasket_ok && interval_ok,
                    fmt("gasket spatial %.3f [%.3f, %.3f], temporal %.3f [%.3f, %.3f] vs %.4f; interval spatial %.3f, temporal %.3f",
                        gs.slope, gs.ci_low, gs.ci_high, gt.slope, gt.ci_low, gt.ci_high, 1.0 / (dh + 1.0), is.slope, it.slope)};
    r.cauchy = {rate.fit.ci_low <= rate.bound_slope,
                fmt("slope %.3f, CI [%.3f, %.3f], bound %.4f, n = 0..3 against n = 4 (criterion 7 ensemble)", rate.fit.slope, rate.fit.ci_low,
                    rate.fit.ci_high, rate.bound_slope)};
    return r;
}

Outcome picard_equivalence() {
    SimConfig c;
    c.level = 3;
    c.dt = 1e-3;
    c.horizon = 0.016;
    c.seed = 5;
    c.diffusion = Coefficient::linear(1.0);
    c.u0 = "const:1";
    const auto m = Model::build(c);
    const auto noise = noise_realization(c, m, 0);
    const auto stepped = integrate_path(c, m, noise);
    const auto fixed = picard_mild_solve(c, m, noise);
    double diff = 0.0;
    for (std::size_t j = 0; j < stepped.size(); ++j) diff = std::max(diff, (stepped[j] - fixed.values[j]).cwiseAbs().maxCoeff());
    return {diff < 1e-8 && noise.size() == 16, fmt("sup difference %.2e after %zu Picard iterations, %zu steps", diff, fixed.iterations, noise.size())};
}

Outcome weak_intermittency() {
    const auto pam = load_config("pam_gasket.cfg");
    const auto m = Model::build(pam);
    const auto ens = simulate(pam, m);
    const auto rep = intermittency_report(ens, m.spectrum, pam.diffusion, initial_field(pam.u0, m));

    const auto ctl = load_config("she_gasket_control.cfg");
    const auto mc = Model::build(ctl);
    const auto ens_c = simulate(ctl, mc);
    LyapunovOptions opt;
    opt.min_paths = 400;
    const auto est_c = moment_lyapunov(ens_c, mc.spectrum.hausdorff_dimension(), opt);
    const auto& f = rep.lyapunov.fit;
    return {rep.weakly_intermittent && est_c.fit.ci_contains(0.0),
            fmt("PAM lambda(2) %.3f CI [%.3f, %.3f] (%zu paths); control %.3f CI [%.3f, %.3f]", f.slope, f.ci_low,
                f.ci_high, ens.paths.size(), est_c.fit.slope, est_c.fit.ci_low, est_c.fit.ci_high)};
}

Outcome kappa_renewal() {
    const double ds = sierpinski_gasket().spectral_dimension();
    const KappaParams k(ds);
    double round_trip = 0.0;
    for (double y : {1e-4, 0.01, 1.0, 100.0, 1e4}) round_trip = std::max(round_trip, std::abs(kappa(kappa_inverse(y, k), k) - y) / y);
    auto slope = [&](double a) { return (std::log(kappa(a * 1.01, k)) - std::log(kappa(a, k))) / std::log(1.01); };
    const double s0 = slope(1e-12), s1 = slope(1e12);
    double renewal = 0.0;
    for (double alpha : {0.5, 1.0, 3.0}) {
        const auto sol = renewal_solve(alpha, ds, 1.0, 60.0 / alpha, 4000);
        renewal = std::max(renewal, std::abs(sol.values.back() / sol.limit - 1.0));
    }
    const bool ok = kappa(0.0, k) == 0.0 && round_trip < 1e-10 && std::abs(s0 - 1.0) <= 0.01 &&
                    std::abs(s1 - (1.0 - ds / 2.0)) <= 0.01 && renewal < 0.01;
    return {ok, fmt("round trip %.1e, slopes %.4f / %.4f (targets 1 / %.4f), renewal rel err %.2e", round_trip, s0, s1,
                    1.0 - ds / 2.0, renewal)};
}

Outcome determinism() {
    auto cfg = load_config("pam_gasket.cfg");
    cfg.level = 3;
    cfg.horizon = 0.1;
    cfg.paths = 24;
    const auto m = Model::build(cfg);
    auto digest = [&](const char* threads) {
        setenv("FSPDE_THREADS", threads, 1);
        const auto ens = simulate(cfg, m);
        unsetenv("FSPDE_THREADS");
        return sha256_hex(trajectory_csv(ens)) + sha256_hex(probe_csv(ens));
    };
    const auto a = digest("1"), b = digest("4"), c = digest("1"), d = digest("3");
    return {a == b && a == c && a == d, "digest " + a.substr(0, 16) + (a == b && a == c && a == d ? " identical" : " differs") +
                                            " across 2 runs at 1 thread and runs at 3 and 4 threads"};
}

}  // namespace

int main() {
    const std::set<int> expected_failures = {2};
    struct Criterion {
        int id;
        std::string name;
        std::function<Outcome()> run;
    };
    SheResult she;
    bool she_done = false;
    auto she_part = [&](bool cauchy) {
        if (!she_done) she = she_regularity(), she_done = true;
        return cauchy ? she.cauchy : she.regularity;
    };
    const std::vector<Criterion> criteria = {
        {1, "interval oracle", interval_oracle},
        {2, "Weyl exponent", weyl_exponent},
        {3, "heat kernel bounds", kernel_bounds},
        {4, "resolvent Lipschitz", resolvent_lipschitz},
        {5, "semigroup increment", semigroup_increment},
        {6, "partition and measure", partition_audit},
        {7, "SHE regularity", [&] { return she_part(false); }},
        {8, "delta-approximant rate", [&] { return she_part(true); }},
        {9, "Picard equivalence", picard_equivalence},
        {10, "weak intermittency", weak_intermittency},
        {11, "kappa and renewal", kappa_renewal},
        {12, "determinism", determinism},
    };
    int unexpected = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool expected = expected_failures.count(c.id) > 0;
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << c.id << " " << c.name << ": " << o.detail
                  << fmt(" (%.1f s)", secs) << (!o.pass && expected ? " [expected failure, see README]" : "") << std::endl;
        if (!o.pass && !expected) ++unexpected;
    }
    return unexpected == 0 ? 0 : 1;
}
