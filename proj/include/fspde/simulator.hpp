#pragma once

// Mild-solution simulation of du = Delta_b u dt + f(t,u) dt + g(t,u) dW on a
// graph approximation. Noise is vertex white noise with covariance dt M^{-1};
// time stepping is left-endpoint exponential Euler, or the exact modal OU
// update when f and g are constant.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <sstream>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "coefficients.hpp"
#include "errors.hpp"
#include "fractal.hpp"
#include "graph.hpp"
#include "kernels.hpp"
#include "keyvalue.hpp"
#include "laplacian.hpp"
#include "rng.hpp"

namespace fspde {

enum class Stepper { exp_euler, exact_additive };

inline std::string to_string(Stepper s) { return s == Stepper::exp_euler ? "exp-euler" : "exact-additive"; }

inline Stepper parse_stepper(const std::string& s) {
    if (s == "exp-euler") return Stepper::exp_euler;
    if (s == "exact-additive") return Stepper::exact_additive;
    throw UsageError("unknown stepper '" + s + "' (expected exp-euler or exact-additive)");
}

struct SimConfig {
    std::string fractal = "gasket";
    int level = 4;
    std::string boundary = "N";
    std::size_t modes = 0;  // 0 = full spectrum
    double dt = 1e-3;
    double horizon = 0.1;
    std::vector<double> snapshots;  // defaults to {horizon}
    std::size_t paths = 1;
    std::uint64_t seed = 0;
    Coefficient drift;
    Coefficient diffusion;
    std::string u0 = "const:0";
    Stepper stepper = Stepper::exp_euler;
    std::string noise = "vertex-white";
    std::vector<std::string> probes;  // vertex ids or word:corner addresses
    double probe_start = 0.0;
    std::size_t probe_stride = 1;
    double moment_p = 0.0;  // user's moment parameter p; 0 = not stated

    std::size_t steps() const { return static_cast<std::size_t>(std::llround(horizon / dt)); }

    void validate() const {
        if (!(dt > 0.0)) throw UsageError("dt must be positive");
        if (!(horizon >= dt)) throw UsageError("T must be at least dt");
        if (std::abs(static_cast<double>(steps()) * dt - horizon) > 1e-9 * horizon)
            throw UsageError("T must be an integer multiple of dt");
        if (paths == 0) throw UsageError("paths must be positive");
        if (probe_stride == 0) throw UsageError("probe_stride must be positive");
        if (noise != "vertex-white") throw UsageError("unsupported noise mode '" + noise + "'");
        if (stepper == Stepper::exact_additive && (!drift.is_constant() || !diffusion.is_constant()))
            throw UsageError("exact-additive stepper requires constant f and g");
        for (double s : snapshot_times_or_default()) {
            const double k = s / dt;
            if (s < 0.0 || s > horizon * (1.0 + 1e-12) || std::abs(k - std::round(k)) > 1e-6)
                throw UsageError("snapshot time " + short_num(s) + " is not on the time grid");
        }
    }

    std::vector<double> snapshot_times_or_default() const {
        return snapshots.empty() ? std::vector<double>{horizon} : snapshots;
    }

    static SimConfig from_key_values(const KeyValues& kv) {
        SimConfig c;
        static const std::set<std::string> known = {"fractal", "level", "boundary", "K", "modes", "dt", "T",
                                                    "snapshots", "paths", "seed", "f", "g", "u0", "stepper",
                                                    "noise", "probes", "probe_start", "probe_stride", "p"};
        for (const auto& [key, value] : kv)
            if (!known.count(key)) throw UsageError("unknown config key '" + key + "'");
        auto get = [&](const char* key) -> const std::string* {
            auto it = kv.find(key);
            return it == kv.end() ? nullptr : &it->second;
        };
        if (auto v = get("fractal")) c.fractal = *v;
        if (auto v = get("level")) c.level = static_cast<int>(parse_integer(*v));
        if (auto v = get("boundary")) c.boundary = *v;
        if (auto v = get("K")) c.modes = static_cast<std::size_t>(parse_integer(*v));
        if (auto v = get("modes")) c.modes = static_cast<std::size_t>(parse_integer(*v));
        if (auto v = get("dt")) c.dt = parse_double(*v);
        if (auto v = get("T")) c.horizon = parse_double(*v);
        if (auto v = get("snapshots")) c.snapshots = parse_double_list(*v);
        if (auto v = get("paths")) {
            const auto n = parse_integer(*v);
            if (n <= 0) throw UsageError("paths must be positive");
            c.paths = static_cast<std::size_t>(n);
        }
        if (auto v = get("seed")) c.seed = std::stoull(*v);
        if (auto v = get("f")) c.drift = Coefficient::parse(*v);
        if (auto v = get("g")) c.diffusion = Coefficient::parse(*v);
        if (auto v = get("u0")) c.u0 = *v;
        if (auto v = get("stepper")) c.stepper = parse_stepper(*v);
        if (auto v = get("noise")) c.noise = *v;
        if (auto v = get("probes")) c.probes = detail::split_tokens(*v, " ,;");
        if (auto v = get("probe_start")) c.probe_start = parse_double(*v);
        if (auto v = get("probe_stride")) c.probe_stride = static_cast<std::size_t>(parse_integer(*v));
        if (auto v = get("p")) c.moment_p = parse_double(*v);
        c.validate();
        return c;
    }

    KeyValues to_key_values() const {
        auto num = [](double v) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return std::string(buf);
        };
        auto join = [](const auto& items, auto fmt) {
            std::string s;
            for (const auto& x : items) s += (s.empty() ? "" : ",") + fmt(x);
            return s;
        };
        KeyValues kv;
        kv["fractal"] = fractal;
        kv["level"] = std::to_string(level);
        kv["boundary"] = boundary;
        kv["K"] = std::to_string(modes);
        kv["dt"] = num(dt);
        kv["T"] = num(horizon);
        kv["snapshots"] = join(snapshot_times_or_default(), num);
        kv["paths"] = std::to_string(paths);
        kv["seed"] = std::to_string(seed);
        kv["f"] = drift.str();
        kv["g"] = diffusion.str();
        kv["u0"] = u0;
        kv["stepper"] = to_string(stepper);
        kv["noise"] = noise;
        if (!probes.empty()) kv["probes"] = join(probes, [](const std::string& s) { return s; });
        kv["probe_start"] = num(probe_start);
        kv["probe_stride"] = std::to_string(probe_stride);
        if (moment_p > 0.0) kv["p"] = num(moment_p);
        return kv;
    }
};

/// Graph and spectrum shared read-only by all paths of a run.
struct Model {
    FractalSpec spec;
    GraphApproximation graph;
    Spectrum spectrum;

    static Model build(const SimConfig& cfg) {
        Model m;
        m.spec = load_fractal(cfg.fractal);
        m.graph = build_graph(m.spec, cfg.level);
        m.spectrum = compute_spectrum(m.graph, BoundaryCondition::parse(cfg.boundary, m.spec.boundary_size()), cfg.modes);
        return m;
    }
};

/// "const:c", "bump" (exp(-R(x, corner 0)/0.25)), "mode:k" (phi_k, 1-based) or "file:path".
inline Vector initial_field(const std::string& text, const Model& model) {
    const auto nv = static_cast<Eigen::Index>(model.graph.vertex_count());
    const auto colon = text.find(':');
    const auto head = text.substr(0, colon);
    const auto rest = colon == std::string::npos ? std::string{} : text.substr(colon + 1);
    Vector u;
    if (head == "const") {
        u = Vector::Constant(nv, parse_double(rest));
    } else if (head == "bump") {
        const ResistanceMetric r(model.graph);
        const auto origin = model.graph.boundary_vertex(0);
        u.resize(nv);
        for (Eigen::Index v = 0; v < nv; ++v) u[v] = std::exp(-r(static_cast<std::size_t>(v), origin) / 0.25);
    } else if (head == "mode") {
        const auto k = parse_integer(rest);
        if (k < 1 || static_cast<std::size_t>(k) > model.spectrum.size()) throw UsageError("mode index out of range");
        u = model.spectrum.eigenvectors().col(k - 1);
    } else if (head == "file") {
        std::ifstream in(rest);
        if (!in) throw UsageError("cannot open initial field '" + rest + "'");
        // values separated by whitespace or commas
        std::vector<double> values;
        std::string token;
        while (in >> token)
            for (const auto& piece : detail::split_tokens(token, ",")) values.push_back(parse_double(piece));
        if (static_cast<Eigen::Index>(values.size()) != nv)
            throw UsageError("initial field file must list one value per vertex");
        u = Eigen::Map<const Vector>(values.data(), nv);
    } else {
        throw UsageError("unknown initial condition '" + text + "'");
    }
    if (!u.allFinite())
        throw HypothesisViolation("walshhyp", "initial condition must be bounded");
    return u;
}

inline std::vector<std::size_t> resolve_probes(const SimConfig& cfg, const GraphApproximation& g,
                                               const Spectrum& sp) {
    std::vector<std::size_t> out;
    if (cfg.probes.size() == 1 && cfg.probes[0] == "all") {
        for (std::size_t v = 0; v < g.vertex_count(); ++v)
            if (!sp.eigenvectors().row(static_cast<Eigen::Index>(v)).isZero(0.0)) out.push_back(v);
        return out;
    }
    if (!cfg.probes.empty()) {
        for (const auto& p : cfg.probes) out.push_back(g.resolve(p));
        return out;
    }
    // Eight free vertices spread over the id range.
    std::vector<std::size_t> free;
    for (std::size_t v = 0; v < g.vertex_count(); ++v)
        if (!sp.eigenvectors().row(static_cast<Eigen::Index>(v)).isZero(0.0)) free.push_back(v);
    const std::size_t n = std::min<std::size_t>(8, free.size());
    for (std::size_t i = 0; i < n; ++i) out.push_back(free[(2 * i + 1) * free.size() / (2 * n)]);
    return out;
}

/// Coordinatewise independent N(0, dt / m_x).
inline Vector sample_noise(const Vector& masses, double dt, NoiseStream& stream) {
    Vector eta(masses.size());
    if (dt == 0.0) {
        eta.setZero();
        return eta;
    }
    if (dt < 0.0) throw DomainError("noise increment requires dt >= 0");
    for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = std::sqrt(dt / masses[i]) * stream.normal();
    return eta;
}

inline Vector sample_noise(const GraphApproximation& g, double dt, NoiseStream& stream) {
    return sample_noise(g.mass_vector(), dt, stream);
}

/// One exponential-Euler step u' = S_dt (u + f(t,u) dt + g(t,u) eta).
inline Vector step(const Spectrum& sp, const Vector& state, double t, const SimConfig& cfg, const Vector& eta) {
    Vector x = state;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        x[i] += cfg.drift(t, state[i]) * cfg.dt + cfg.diffusion(t, state[i]) * eta[i];
    Vector out = semigroup_apply(sp, cfg.dt, x);
    if (!out.allFinite()) throw BlowUpError(0, static_cast<std::size_t>(std::llround(t / cfg.dt)), t + cfg.dt);
    return out;
}

struct Trajectory {
    std::size_t path = 0;
    std::vector<Vector> snapshots;  // aligned with Ensemble::snapshot_times, truncated if censored
    Matrix probe_values;            // rows: Ensemble::probe_times, cols: probes; NaN after censoring
    bool censored = false;
    double censor_time = 0.0;
};

struct Ensemble {
    SimConfig config;
    std::vector<std::size_t> probes;
    std::vector<double> probe_times;
    std::vector<double> snapshot_times;
    std::vector<Trajectory> paths;

    std::size_t censored_count() const {
        return static_cast<std::size_t>(std::count_if(paths.begin(), paths.end(), [](const auto& p) { return p.censored; }));
    }
    double censored_fraction() const {
        return paths.empty() ? 0.0 : static_cast<double>(censored_count()) / static_cast<double>(paths.size());
    }
    /// Earliest censoring time, or +inf.
    double uncensored_until() const {
        double t = std::numeric_limits<double>::infinity();
        for (const auto& p : paths)
            if (p.censored) t = std::min(t, p.censor_time);
        return t;
    }
    /// Throws the first blow-up when the censored fraction exceeds `threshold`.
    void check_censoring(double threshold) const {
        if (censored_fraction() <= threshold) return;
        for (const auto& p : paths)
            if (p.censored)
                throw BlowUpError(p.path, static_cast<std::size_t>(std::llround(p.censor_time / config.dt)), p.censor_time);
    }
};

inline unsigned thread_count() {
    if (const char* env = std::getenv("FSPDE_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return static_cast<unsigned>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace detail {

// Runs work(i) for i in [0, n) on a pool; results must be written to per-index slots.
template <typename Work>
void parallel_for(std::size_t n, unsigned threads, Work&& work) {
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) work(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    work(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

struct TimeGrid {
    std::size_t steps = 0;
    std::vector<std::size_t> snapshot_steps;
    std::size_t probe_first = 0;
    std::size_t probe_stride = 1;

    explicit TimeGrid(const SimConfig& cfg) : steps(cfg.steps()), probe_stride(cfg.probe_stride) {
        for (double s : cfg.snapshot_times_or_default())
            snapshot_steps.push_back(static_cast<std::size_t>(std::llround(s / cfg.dt)));
        probe_first = static_cast<std::size_t>(std::ceil(cfg.probe_start / cfg.dt - 1e-9));
    }
    std::size_t probe_rows() const { return probe_first > steps ? 0 : (steps - probe_first) / probe_stride + 1; }
    std::optional<std::size_t> probe_row(std::size_t j) const {
        if (j < probe_first || (j - probe_first) % probe_stride != 0) return std::nullopt;
        return (j - probe_first) / probe_stride;
    }
};

}  // namespace detail

/// Runs `cfg.paths` independent paths. Output depends only on (seed, config).
inline Ensemble simulate(const SimConfig& cfg, const Model& model) {
    cfg.validate();
    const auto& sp = model.spectrum;
    const Vector u0 = initial_field(cfg.u0, model);
    const Vector masses = model.graph.mass_vector();
    const detail::TimeGrid grid(cfg);
    const auto nv = static_cast<Eigen::Index>(model.graph.vertex_count());

    Ensemble ens;
    ens.config = cfg;
    ens.probes = resolve_probes(cfg, model.graph, sp);
    for (std::size_t r = 0; r < grid.probe_rows(); ++r)
        ens.probe_times.push_back(static_cast<double>(grid.probe_first + r * grid.probe_stride) * cfg.dt);
    for (auto s : grid.snapshot_steps) ens.snapshot_times.push_back(static_cast<double>(s) * cfg.dt);
    ens.paths.resize(cfg.paths);
    for (std::size_t p = 0; p < cfg.paths; ++p) {
        ens.paths[p].path = p;
        ens.paths[p].probe_values = Matrix::Constant(static_cast<Eigen::Index>(grid.probe_rows()),
                                                     static_cast<Eigen::Index>(ens.probes.size()),
                                                     std::numeric_limits<double>::quiet_NaN());
    }
    auto record = [&](Trajectory& tr, std::size_t j, const auto& field_at, const auto& full_field) {
        if (auto row = grid.probe_row(j))
            for (std::size_t i = 0; i < ens.probes.size(); ++i)
                tr.probe_values(static_cast<Eigen::Index>(*row), static_cast<Eigen::Index>(i)) = field_at(ens.probes[i]);
        for (auto s : grid.snapshot_steps)
            if (s == j) tr.snapshots.push_back(full_field());
    };

    if (cfg.stepper == Stepper::exact_additive) {
        // Modal OU: a' = e^{-l dt} a + f <1,phi> (1 - e^{-l dt})/l + g zeta, Var zeta = (1 - e^{-2 l dt})/(2 l).
        const auto k = static_cast<Eigen::Index>(sp.size());
        Vector decay(k), drift_gain(k), noise_sd(k);
        const Vector ones_coeff = sp.project(Vector::Ones(nv));
        for (Eigen::Index i = 0; i < k; ++i) {
            const double l = sp.eigenvalue(static_cast<std::size_t>(i));
            decay[i] = std::exp(-l * cfg.dt);
            drift_gain[i] = l > 0.0 ? -std::expm1(-l * cfg.dt) / l : cfg.dt;
            noise_sd[i] = l > 0.0 ? std::sqrt(-std::expm1(-2.0 * l * cfg.dt) / (2.0 * l)) : std::sqrt(cfg.dt);
        }
        const double f = cfg.drift(0.0, 0.0), g = cfg.diffusion(0.0, 0.0);
        const Vector a0 = sp.project(u0);
        const Matrix& phi = sp.eigenvectors();
        detail::parallel_for(cfg.paths, thread_count(), [&](std::size_t p) {
            auto& tr = ens.paths[p];
            Vector a = a0;
            auto at = [&](std::size_t v) { return phi.row(static_cast<Eigen::Index>(v)).dot(a); };
            auto full = [&]() -> Vector { return phi * a; };
            record(tr, 0, at, full);
            for (std::size_t j = 0; j < grid.steps; ++j) {
                NoiseStream stream(cfg.seed, p, j);
                for (Eigen::Index i = 0; i < k; ++i)
                    a[i] = decay[i] * a[i] + f * ones_coeff[i] * drift_gain[i] + g * noise_sd[i] * stream.normal();
                record(tr, j + 1, at, full);
            }
        });
        return ens;
    }

    // Exponential Euler, paths batched in fixed blocks so results do not depend on the thread count.
    constexpr std::size_t block = 16;
    const Matrix propagator = semigroup_matrix(sp, cfg.dt);
    const std::size_t blocks = (cfg.paths + block - 1) / block;
    detail::parallel_for(blocks, thread_count(), [&](std::size_t b) {
        const std::size_t first = b * block;
        const auto width = static_cast<Eigen::Index>(std::min(block, cfg.paths - first));
        Matrix u = u0.replicate(1, width);
        Matrix x(nv, width);
        std::vector<bool> alive(static_cast<std::size_t>(width), true);
        for (Eigen::Index c = 0; c < width; ++c) {
            auto& tr = ens.paths[first + static_cast<std::size_t>(c)];
            record(tr, 0, [&](std::size_t v) { return u(static_cast<Eigen::Index>(v), c); },
                   [&]() -> Vector { return u.col(c); });
        }
        for (std::size_t j = 0; j < grid.steps; ++j) {
            const double t = static_cast<double>(j) * cfg.dt;
            for (Eigen::Index c = 0; c < width; ++c) {
                if (!alive[static_cast<std::size_t>(c)]) {
                    x.col(c).setZero();
                    continue;
                }
                NoiseStream stream(cfg.seed, first + static_cast<std::size_t>(c), j);
                for (Eigen::Index i = 0; i < nv; ++i) {
                    const double ui = u(i, c);
                    const double eta = std::sqrt(cfg.dt / masses[i]) * stream.normal();
                    x(i, c) = ui + cfg.drift(t, ui) * cfg.dt + cfg.diffusion(t, ui) * eta;
                }
            }
            u.noalias() = propagator * x;
            for (Eigen::Index c = 0; c < width; ++c) {
                const auto ci = static_cast<std::size_t>(c);
                if (!alive[ci]) continue;
                auto& tr = ens.paths[first + ci];
                if (!u.col(c).allFinite()) {
                    alive[ci] = false;
                    tr.censored = true;
                    tr.censor_time = static_cast<double>(j + 1) * cfg.dt;
                    continue;
                }
                record(tr, j + 1, [&](std::size_t v) { return u(static_cast<Eigen::Index>(v), c); },
                       [&]() -> Vector { return u.col(c); });
            }
        }
    });
    return ens;
}

inline Ensemble simulate(const SimConfig& cfg) { return simulate(cfg, Model::build(cfg)); }

/// The noise increments simulate() draws for one path under exp-euler.
inline std::vector<Vector> noise_realization(const SimConfig& cfg, const Model& model, std::size_t path) {
    std::vector<Vector> out;
    const Vector masses = model.graph.mass_vector();
    for (std::size_t j = 0; j < cfg.steps(); ++j) {
        NoiseStream stream(cfg.seed, path, j);
        out.push_back(sample_noise(masses, cfg.dt, stream));
    }
    return out;
}

/// Exponential-Euler trajectory on all grid times for a fixed noise realization.
inline std::vector<Vector> integrate_path(const SimConfig& cfg, const Model& model, const std::vector<Vector>& noise) {
    std::vector<Vector> out{initial_field(cfg.u0, model)};
    for (std::size_t j = 0; j < noise.size(); ++j)
        out.push_back(step(model.spectrum, out.back(), static_cast<double>(j) * cfg.dt, cfg, noise[j]));
    return out;
}

struct PicardResult {
    std::vector<Vector> values;  // u(t_j), j = 0..steps
    std::size_t iterations = 0;
    double last_change = 0.0;
};

/// Fixed point of u(t_j) = S_{t_j} u0 + sum_{i<j} S_{t_j - t_i}(f(t_i,u(t_i)) dt + g(t_i,u(t_i)) eta_i),
/// evaluated directly as the modal convolution sum.
inline PicardResult picard_mild_solve(const SimConfig& cfg, const Model& model, const std::vector<Vector>& noise,
                                      std::size_t max_iterations = 200, double tolerance = 1e-10) {
    const auto& sp = model.spectrum;
    const std::size_t steps = noise.size();
    const Vector u0 = initial_field(cfg.u0, model);
    const Vector& lambda = sp.eigenvalues();

    std::vector<Vector> base(steps + 1);
    const Vector a0 = sp.project(u0);
    for (std::size_t j = 0; j <= steps; ++j)
        base[j] = sp.synthesize((-(static_cast<double>(j) * cfg.dt) * lambda.array()).exp().matrix().cwiseProduct(a0));

    PicardResult res;
    res.values = base;
    for (res.iterations = 1; res.iterations <= max_iterations; ++res.iterations) {
        std::vector<Vector> coeffs(steps);
        for (std::size_t i = 0; i < steps; ++i) {
            const double t = static_cast<double>(i) * cfg.dt;
            const Vector& u = res.values[i];
            Vector w(u.size());
            for (Eigen::Index x = 0; x < u.size(); ++x)
                w[x] = cfg.drift(t, u[x]) * cfg.dt + cfg.diffusion(t, u[x]) * noise[i][x];
            coeffs[i] = sp.project(w);
        }
        std::vector<Vector> next(steps + 1);
        double change = 0.0;
        for (std::size_t j = 0; j <= steps; ++j) {
            Vector a = Vector::Zero(static_cast<Eigen::Index>(sp.size()));
            for (std::size_t i = 0; i < j; ++i)
                a += (-(static_cast<double>(j - i) * cfg.dt) * lambda.array()).exp().matrix().cwiseProduct(coeffs[i]);
            next[j] = base[j] + sp.synthesize(a);
            if (!next[j].allFinite()) throw NumericalRefusal("Picard iterate became non-finite (contraction failure)");
            change = std::max(change, (next[j] - res.values[j]).cwiseAbs().maxCoeff());
        }
        res.values = std::move(next);
        res.last_change = change;
        if (change < tolerance) return res;
    }
    throw NumericalRefusal("Picard iteration did not contract within " + std::to_string(max_iterations) +
                           " iterations (last sup-change " + short_num(res.last_change) + ")");
}

}  // namespace fspde
