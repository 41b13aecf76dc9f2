#pragma once

// Ensemble estimators: theoretical Holder exponents, increment-moment slopes,
// delta-approximant Cauchy rates, kappa and its inverse, the renewal equation
// of the second-moment lower bound, moment Lyapunov exponents and the
// intermittency verdict.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "coefficients.hpp"
#include "errors.hpp"
#include "graph.hpp"
#include "kernels.hpp"
#include "rng.hpp"
#include "simulator.hpp"

namespace fspde {

// ---------------------------------------------------------------------------
// Closed-form exponents

struct HolderExponents {
    double joint = 0.0;     // in [0,T] x F with respect to R_infinity
    double spatial = 0.0;   // in F with respect to R
    double temporal = 0.0;  // in [0,T]
    bool valid = false;     // p > (d_H + 1)^2
};

/// Pass p = +infinity for the limit 1/p -> 0.
inline HolderExponents theoretical_holder_exponents(double p, double d_h) {
    const double inv_p = std::isinf(p) ? 0.0 : 1.0 / p;
    const double a = d_h + 1.0;
    HolderExponents e;
    e.joint = 0.5 * (1.0 / a - a * inv_p);
    e.spatial = 0.5 * (1.0 - d_h * inv_p);
    e.temporal = 0.5 * (1.0 / a - inv_p);
    e.valid = p > a * a;
    return e;
}

// ---------------------------------------------------------------------------
// Eigenvalue growth

struct WeylFit {
    std::size_t k_min = 0, k_max = 0;
    double slope = 0.0;          // OLS of log lambda_k on log k over integer k
    double slope_stderr = 0.0;
    double counting_slope = 0.0; // inverse of the slope of log N(lambda) on a log-uniform lambda grid
    double target = 0.0;         // 2 / d_s
};

/// k is 1-based; lambda_k must be positive on [k_min, k_max].
inline WeylFit weyl_fit(const Spectrum& sp, std::size_t k_min, std::size_t k_max, std::size_t grid = 200) {
    if (k_min < 1 || k_max <= k_min + 1 || k_max > sp.size()) throw DomainError("Weyl window outside the computed spectrum");
    WeylFit w;
    w.k_min = k_min, w.k_max = k_max;
    w.target = 2.0 / sp.spectral_dimension();
    std::vector<double> lk, ll;
    for (std::size_t k = k_min; k <= k_max; ++k) {
        const double l = sp.eigenvalue(k - 1);
        if (!(l > 0.0)) throw DomainError("Weyl window contains a zero eigenvalue");
        lk.push_back(std::log(static_cast<double>(k)));
        ll.push_back(std::log(l));
    }
    const auto f = fit_line(lk, ll);
    w.slope = f.slope, w.slope_stderr = f.slope_stderr;

    const double a = std::log(sp.eigenvalue(k_min - 1)), b = std::log(sp.eigenvalue(k_max - 1));
    const Vector& ev = sp.eigenvalues();
    std::vector<double> lx, ln;
    for (std::size_t i = 0; i < grid; ++i) {
        const double l = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(grid - 1));
        const auto count = std::count_if(ev.data(), ev.data() + ev.size(), [&](double v) { return v <= l * (1.0 + 1e-12); });
        lx.push_back(std::log(l));
        ln.push_back(std::log(static_cast<double>(count)));
    }
    w.counting_slope = 1.0 / fit_line(lx, ln).slope;
    return w;
}

// ---------------------------------------------------------------------------
// kappa(alpha) = alpha / (1 + alpha^{d_s/2} Gamma(1 - d_s/2))

class KappaParams {
public:
    explicit KappaParams(double d_s) : d_s_(d_s) {
        if (!(d_s >= 1.0 && d_s < 2.0)) throw DomainError("kappa requires d_s in [1, 2)");
        gamma_ = std::tgamma(1.0 - d_s / 2.0);
    }
    double spectral_dimension() const noexcept { return d_s_; }
    double gamma() const noexcept { return gamma_; }

private:
    double d_s_;
    double gamma_;
};

inline double kappa(double alpha, const KappaParams& k) {
    if (!(alpha >= 0.0)) throw DomainError("kappa requires alpha >= 0");
    if (alpha == 0.0) return 0.0;
    return alpha / (1.0 + std::pow(alpha, k.spectral_dimension() / 2.0) * k.gamma());
}

/// Bisection to relative precision 1e-12.
inline double kappa_inverse(double y, const KappaParams& k) {
    if (!(y >= 0.0)) throw DomainError("kappa inverse requires y >= 0");
    if (y == 0.0) return 0.0;
    double lo = 0.0, hi = std::max(1.0, y);
    while (kappa(hi, k) < y) {
        lo = hi;
        hi *= 2.0;
    }
    while (hi - lo > 1e-13 * hi) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (kappa(mid, k) < y ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Renewal equation
//   f(t) = e^{-alpha t} I0 + int_0^t kappa(alpha) e^{-alpha (t-s)} (1 + (t-s)^{-d_s/2}) f(s) ds

struct RenewalSolution {
    std::vector<double> times;
    std::vector<double> values;
    double limit = 0.0;  // closed-form t -> infinity value
};

inline double renewal_limit(double alpha, double d_s, double inf_u0_sq) {
    const double g = std::tgamma(1.0 - d_s / 2.0);
    const double a = std::pow(alpha, d_s / 2.0);
    return (1.0 + a * g) / (1.0 + a * (1.0 - d_s / 2.0) * g) * inf_u0_sq;
}

/// Product integration on a uniform grid: e^{-alpha tau} f is interpolated
/// linearly per panel and integrated exactly against 1 + tau^{-d_s/2}.
inline RenewalSolution renewal_solve(double alpha, double d_s, double inf_u0_sq, const std::vector<double>& t_grid) {
    if (!(d_s < 2.0)) throw DomainError("renewal kernel is not integrable for d_s >= 2");
    if (!(d_s > 0.0)) throw DomainError("renewal requires d_s > 0");
    if (!(alpha > 0.0)) throw DomainError("renewal requires alpha > 0");
    if (t_grid.size() < 2 || t_grid.front() != 0.0) throw DomainError("renewal grid must start at 0");
    const std::size_t n = t_grid.size() - 1;
    const double h = t_grid.back() / static_cast<double>(n);
    for (std::size_t i = 0; i <= n; ++i)
        if (std::abs(t_grid[i] - static_cast<double>(i) * h) > 1e-9 * h) throw DomainError("renewal grid must be uniform");

    const double beta = d_s / 2.0;
    const double kap = alpha / (1.0 + std::pow(alpha, beta) * std::tgamma(1.0 - beta));

    // Panel m covers tau in [m h, (m+1) h]; near[m] weights the node at tau = m h,
    // far[m] the node at tau = (m+1) h.
    std::vector<double> near(n), far(n);
    for (std::size_t m = 0; m < n; ++m) {
        const double a = static_cast<double>(m) * h, b = a + h;
        const double w0 = h + (std::pow(b, 1.0 - beta) - std::pow(a, 1.0 - beta)) / (1.0 - beta);
        const double w1 = 0.5 * (b * b - a * a) + (std::pow(b, 2.0 - beta) - std::pow(a, 2.0 - beta)) / (2.0 - beta);
        far[m] = (w1 - a * w0) / h;
        near[m] = (b * w0 - w1) / h;
    }
    std::vector<double> decay(n + 1);
    for (std::size_t i = 0; i <= n; ++i) decay[i] = std::exp(-alpha * static_cast<double>(i) * h);

    RenewalSolution sol;
    sol.times = t_grid;
    sol.values.assign(n + 1, 0.0);
    sol.values[0] = inf_u0_sq;
    for (std::size_t k = 1; k <= n; ++k) {
        // g(tau = i h) = e^{-alpha i h} f(t_k - i h)
        double acc = 0.0;
        for (std::size_t m = 0; m < k; ++m) {
            acc += far[m] * decay[m + 1] * sol.values[k - m - 1];
            if (m > 0) acc += near[m] * decay[m] * sol.values[k - m];
        }
        sol.values[k] = (decay[k] * inf_u0_sq + kap * acc) / (1.0 - kap * near[0]);
    }
    sol.limit = renewal_limit(alpha, d_s, inf_u0_sq);
    return sol;
}

inline RenewalSolution renewal_solve(double alpha, double d_s, double inf_u0_sq, double t_max, std::size_t steps) {
    std::vector<double> grid(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) grid[i] = t_max * static_cast<double>(i) / static_cast<double>(steps);
    return renewal_solve(alpha, d_s, inf_u0_sq, grid);
}

// ---------------------------------------------------------------------------
// Bootstrap helpers

struct SlopeEstimate {
    double slope = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double stderr_ = 0.0;  // bootstrap standard deviation
    std::size_t resamples = 0;

    double ci_half_width() const { return 0.5 * (ci_high - ci_low); }
    bool ci_contains(double v) const { return ci_low <= v && v <= ci_high; }
};

namespace detail {

inline double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(i);
    return i + 1 < v.size() ? v[i] * (1.0 - frac) + v[i + 1] * frac : v[i];
}

/// `per_path(p, j)` is path p's contribution to point j; the statistic at j is
/// the mean over paths. Fits log(mean_j) against x_j (optionally log-transformed)
/// and bootstraps the slope over paths.
template <typename PerPath>
SlopeEstimate bootstrap_log_slope(std::size_t paths, const std::vector<double>& x, PerPath&& per_path,
                                  std::size_t resamples, std::uint64_t seed) {
    const std::size_t points = x.size();
    auto fit = [&](const std::vector<std::size_t>& pick) {
        std::vector<double> y(points, 0.0);
        for (std::size_t j = 0; j < points; ++j) {
            double s = 0.0;
            for (auto p : pick) s += per_path(p, j);
            y[j] = std::log(s / static_cast<double>(pick.size()));
        }
        return fit_line(x, y).slope;
    };
    std::vector<std::size_t> all(paths);
    std::iota(all.begin(), all.end(), std::size_t{0});
    SlopeEstimate est;
    est.slope = fit(all);
    est.resamples = resamples;
    if (resamples == 0) {
        est.ci_low = est.ci_high = est.slope;
        return est;
    }
    std::vector<double> draws;
    draws.reserve(resamples);
    std::vector<std::size_t> pick(paths);
    for (std::size_t r = 0; r < resamples; ++r) {
        NoiseStream stream(seed, 0xB007u, r);
        for (auto& p : pick) p = static_cast<std::size_t>(stream.uniform() * static_cast<double>(paths));
        const double s = fit(pick);
        if (std::isfinite(s)) draws.push_back(s);
    }
    if (draws.size() < 2) throw NumericalRefusal("bootstrap produced no finite slopes");
    est.ci_low = quantile(draws, 0.025);
    est.ci_high = quantile(draws, 0.975);
    const double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / static_cast<double>(draws.size());
    double var = 0.0;
    for (double d : draws) var += (d - mean) * (d - mean);
    est.stderr_ = std::sqrt(var / static_cast<double>(draws.size() - 1));
    return est;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Moment series and increment slopes

struct MomentPoint {
    double distance = 0.0;  // mean R(x,y) or lag |s - t| of the bin
    double estimate = 0.0;  // E|increment|^order
    double stderr_ = 0.0;
    std::size_t samples = 0;  // increments per path in the bin
};

struct MomentSeries {
    std::string axis;
    double order = 2.0;
    std::size_t paths = 0;
    std::vector<MomentPoint> points;
};

struct IncrementSlope {
    MomentSeries series;
    SlopeEstimate fit;
};

struct IncrementOptions {
    double order = 2.0;             // 2p
    std::size_t pair_budget = 4000;  // spatial pairs kept across all bins
    std::size_t bins = 10;
    double min_distance = 0.0;       // fit window; 0 / inf = unrestricted
    double max_distance = std::numeric_limits<double>::infinity();
    std::size_t snapshot = static_cast<std::size_t>(-1);  // default: last snapshot
    std::size_t min_paths = 100;
    std::size_t resamples = 400;
    std::uint64_t seed = 7;
};

enum class IncrementAxis { spatial, temporal };

namespace detail {

inline void require_span(const std::vector<double>& d) {
    if (d.size() < 3) throw NumericalRefusal("fewer than three distance bins inside the fit window");
    const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
    if (*hi < 10.0 * *lo) throw NumericalRefusal("increment distances span less than one decade");
}

}  // namespace detail

/// Least-squares slope of log E|increment|^{2p} against log distance.
inline IncrementSlope increment_moment_slope(const Ensemble& ens, IncrementAxis axis, const ResistanceMetric* metric,
                                             const IncrementOptions& opt = {}) {
    const std::size_t paths = ens.paths.size();
    if (paths < opt.min_paths)
        throw NumericalRefusal("increment slope needs at least " + std::to_string(opt.min_paths) + " paths");
    if (ens.censored_count() > 0) throw NumericalRefusal("ensemble contains censored paths");
    IncrementSlope out;
    out.series.order = opt.order;
    out.series.paths = paths;
    std::vector<std::vector<double>> per_path;  // [path][bin]

    if (axis == IncrementAxis::spatial) {
        if (!metric) throw UsageError("spatial increments need a resistance metric");
        out.series.axis = "spatial";
        const std::size_t snap = opt.snapshot == static_cast<std::size_t>(-1) ? ens.snapshot_times.size() - 1 : opt.snapshot;
        const auto nv = metric->size();
        // Log-binned pairs, thinned deterministically to the budget.
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        std::vector<double> dist;
        double dmin = std::numeric_limits<double>::infinity(), dmax = 0.0;
        for (std::size_t x = 0; x < nv; ++x)
            for (std::size_t y = x + 1; y < nv; ++y) {
                const double r = (*metric)(x, y);
                const bool fixed = ens.paths[0].snapshots.at(snap)[static_cast<Eigen::Index>(x)] == 0.0 &&
                                   ens.paths[0].snapshots.at(snap)[static_cast<Eigen::Index>(y)] == 0.0;
                if (r <= 0.0 || r < opt.min_distance || r > opt.max_distance || fixed) continue;
                pairs.emplace_back(x, y);
                dist.push_back(r);
                dmin = std::min(dmin, r), dmax = std::max(dmax, r);
            }
        if (pairs.empty()) throw NumericalRefusal("no vertex pairs inside the distance window");
        const double lmin = std::log(dmin), lspan = std::log(dmax) - lmin + 1e-12;
        std::vector<std::vector<std::size_t>> members(opt.bins);
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const auto b = std::min(opt.bins - 1, static_cast<std::size_t>((std::log(dist[i]) - lmin) / lspan * static_cast<double>(opt.bins)));
            members[b].push_back(i);
        }
        const std::size_t per_bin = std::max<std::size_t>(1, opt.pair_budget / opt.bins);
        std::vector<std::vector<std::size_t>> kept;
        for (auto& m : members) {
            if (m.empty()) continue;
            if (m.size() > per_bin) {
                NoiseStream stream(opt.seed, 0x5AAu, kept.size());
                for (std::size_t i = 0; i < per_bin; ++i) {
                    const auto j = i + static_cast<std::size_t>(stream.uniform() * static_cast<double>(m.size() - i));
                    std::swap(m[i], m[std::min(j, m.size() - 1)]);
                }
                m.resize(per_bin);
            }
            kept.push_back(m);
        }
        per_path.assign(paths, std::vector<double>(kept.size(), 0.0));
        for (std::size_t b = 0; b < kept.size(); ++b) {
            MomentPoint pt;
            for (auto i : kept[b]) pt.distance += dist[i];
            pt.distance /= static_cast<double>(kept[b].size());
            pt.samples = kept[b].size();
            for (std::size_t p = 0; p < paths; ++p) {
                const Vector& u = ens.paths[p].snapshots.at(snap);
                double s = 0.0;
                for (auto i : kept[b])
                    s += std::pow(std::abs(u[static_cast<Eigen::Index>(pairs[i].first)] - u[static_cast<Eigen::Index>(pairs[i].second)]), opt.order);
                per_path[p][b] = s / static_cast<double>(kept[b].size());
            }
            out.series.points.push_back(pt);
        }
    } else {
        out.series.axis = "temporal";
        if (ens.probe_times.size() < 3) throw NumericalRefusal("temporal increments need a recorded probe series");
        const double spacing = ens.probe_times[1] - ens.probe_times[0];
        const auto rows = ens.probe_times.size();
        std::vector<std::size_t> lags;
        for (std::size_t lag = 1; lag < rows; lag *= 2) {
            const double h = static_cast<double>(lag) * spacing;
            if (h >= opt.min_distance * (1.0 - 1e-9) && h <= opt.max_distance * (1.0 + 1e-9)) lags.push_back(lag);
        }
        per_path.assign(paths, std::vector<double>(lags.size(), 0.0));
        const auto probes = static_cast<Eigen::Index>(ens.probes.size());
        for (std::size_t b = 0; b < lags.size(); ++b) {
            MomentPoint pt;
            pt.distance = static_cast<double>(lags[b]) * spacing;
            const auto count = rows - lags[b];
            pt.samples = count * ens.probes.size();
            for (std::size_t p = 0; p < paths; ++p) {
                const Matrix& v = ens.paths[p].probe_values;
                double s = 0.0;
                for (std::size_t r = 0; r < count; ++r)
                    for (Eigen::Index i = 0; i < probes; ++i)
                        s += std::pow(std::abs(v(static_cast<Eigen::Index>(r + lags[b]), i) - v(static_cast<Eigen::Index>(r), i)), opt.order);
                per_path[p][b] = s / static_cast<double>(pt.samples);
            }
            out.series.points.push_back(pt);
        }
    }

    std::vector<double> d, logd;
    for (auto& pt : out.series.points) {
        d.push_back(pt.distance);
        logd.push_back(std::log(pt.distance));
    }
    detail::require_span(d);
    for (std::size_t b = 0; b < out.series.points.size(); ++b) {
        double mean = 0.0, sq = 0.0;
        for (std::size_t p = 0; p < paths; ++p) mean += per_path[p][b];
        mean /= static_cast<double>(paths);
        for (std::size_t p = 0; p < paths; ++p) sq += (per_path[p][b] - mean) * (per_path[p][b] - mean);
        out.series.points[b].estimate = mean;
        out.series.points[b].stderr_ = std::sqrt(sq / static_cast<double>(paths - 1) / static_cast<double>(paths));
    }
    out.fit = detail::bootstrap_log_slope(paths, logd, [&](std::size_t p, std::size_t j) { return per_path[p][j]; },
                                          opt.resamples, opt.seed);
    return out;
}

// ---------------------------------------------------------------------------
// Delta-approximant Cauchy rate

struct CauchyRate {
    std::vector<int> levels;
    std::vector<double> moments;  // E|<U,f_n> - <U,f_nmax>|^{2p}, averaged over probes
    SlopeEstimate fit;            // natural-log moment per unit n
    double bound_slope = 0.0;     // -p log 2
};

/// `fields[p]` is path p's field at a fixed time.
inline CauchyRate delta_cauchy_rate(const GraphApproximation& g, const std::vector<Vector>& fields,
                                    const std::vector<std::size_t>& probes, int n_min, int n_max, double order = 2.0,
                                    std::size_t resamples = 400, std::uint64_t seed = 11) {
    if (n_min < 0 || n_max <= n_min + 1) throw DomainError("Cauchy rate needs n_max >= n_min + 2");
    if (fields.empty() || probes.empty()) throw DomainError("Cauchy rate needs fields and probes");
    const Vector mass = g.mass_vector();
    // pairing[n][x] as weight vectors m_v f^x_n(v)
    std::vector<std::vector<Vector>> weights(static_cast<std::size_t>(n_max + 1));
    for (int n = n_min; n <= n_max; ++n) {
        const auto part = build_partition(g.spec(), n);
        for (auto x : probes) weights[static_cast<std::size_t>(n)].push_back(mass.cwiseProduct(delta_approximant(g, part, x)));
    }
    const std::size_t paths = fields.size();
    std::vector<std::vector<double>> per_path(paths);
    for (std::size_t p = 0; p < paths; ++p) {
        for (int n = n_min; n < n_max; ++n) {
            double s = 0.0;
            for (std::size_t i = 0; i < probes.size(); ++i) {
                const double d = weights[static_cast<std::size_t>(n)][i].dot(fields[p]) -
                                 weights[static_cast<std::size_t>(n_max)][i].dot(fields[p]);
                s += std::pow(std::abs(d), order);
            }
            per_path[p].push_back(s / static_cast<double>(probes.size()));
        }
    }
    CauchyRate out;
    std::vector<double> x;
    for (int n = n_min; n < n_max; ++n) {
        out.levels.push_back(n);
        x.push_back(static_cast<double>(n));
        double m = 0.0;
        for (std::size_t p = 0; p < paths; ++p) m += per_path[p][static_cast<std::size_t>(n - n_min)];
        out.moments.push_back(m / static_cast<double>(paths));
    }
    out.bound_slope = -(order / 2.0) * std::log(2.0);
    out.fit = detail::bootstrap_log_slope(paths, x, [&](std::size_t p, std::size_t j) { return per_path[p][j]; },
                                          resamples, seed);
    return out;
}

// ---------------------------------------------------------------------------
// Moment Lyapunov exponent

struct LyapunovOptions {
    double p = 2.0;
    double window_start = -1.0;  // default: second half of the uncensored probe window
    double window_end = -1.0;
    std::size_t max_points = 64;
    std::size_t min_paths = 200;
    std::size_t resamples = 1000;
    std::uint64_t seed = 13;
};

struct LyapunovEstimate {
    SlopeEstimate fit;
    double window_start = 0.0;
    double window_end = 0.0;
    std::vector<double> times;
    std::vector<double> moments;  // E|u(t,x)|^p averaged over probes
    bool inconclusive = false;    // CI half-width exceeds |slope|
    double c10 = 0.0;             // lambda(p) / p^{1+d_H}, reported only
};

inline LyapunovEstimate moment_lyapunov(const Ensemble& ens, double d_h, const LyapunovOptions& opt = {}) {
    const std::size_t paths = ens.paths.size();
    if (paths < opt.min_paths)
        throw NumericalRefusal("moment Lyapunov estimate needs at least " + std::to_string(opt.min_paths) + " paths");
    if (ens.probe_times.size() < 3) throw NumericalRefusal("no probe series recorded");
    const double uncensored = ens.uncensored_until();
    const double last = ens.probe_times.back();
    LyapunovEstimate est;
    est.window_end = opt.window_end > 0.0 ? opt.window_end : std::min(last, uncensored - ens.config.dt);
    est.window_start = opt.window_start >= 0.0 ? opt.window_start : ens.probe_times.front() + 0.5 * (est.window_end - ens.probe_times.front());
    if (est.window_end >= uncensored) throw NumericalRefusal("fit window reaches censored times");
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < ens.probe_times.size(); ++r)
        if (ens.probe_times[r] >= est.window_start - 1e-12 && ens.probe_times[r] <= est.window_end + 1e-12) rows.push_back(r);
    if (rows.size() < 3) throw NumericalRefusal("fewer than three probe times inside the fit window");
    if (rows.size() > opt.max_points) {
        std::vector<std::size_t> thin;
        for (std::size_t i = 0; i < opt.max_points; ++i)
            thin.push_back(rows[i * (rows.size() - 1) / (opt.max_points - 1)]);
        rows = thin;
    }
    const auto probes = ens.probes.size();
    std::vector<std::vector<double>> per_path(paths, std::vector<double>(rows.size()));
    for (std::size_t p = 0; p < paths; ++p)
        for (std::size_t j = 0; j < rows.size(); ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < probes; ++i)
                s += std::pow(std::abs(ens.paths[p].probe_values(static_cast<Eigen::Index>(rows[j]), static_cast<Eigen::Index>(i))), opt.p);
            per_path[p][j] = s / static_cast<double>(probes);
        }
    for (auto r : rows) est.times.push_back(ens.probe_times[r]);
    for (std::size_t j = 0; j < rows.size(); ++j) {
        double m = 0.0;
        for (std::size_t p = 0; p < paths; ++p) m += per_path[p][j];
        est.moments.push_back(m / static_cast<double>(paths));
    }
    est.fit = detail::bootstrap_log_slope(paths, est.times, [&](std::size_t p, std::size_t j) { return per_path[p][j]; },
                                          opt.resamples, opt.seed);
    est.inconclusive = est.fit.ci_half_width() > std::abs(est.fit.slope);
    est.c10 = est.fit.slope / std::pow(opt.p, 1.0 + d_h);
    return est;
}

// ---------------------------------------------------------------------------
// Intermittency

struct IntermittencyReport {
    double lg = 0.0;             // inf |g(z)/z|
    double alpha = 0.0;          // kappa^{-1}(L_g^2)
    double renewal_limit = 0.0;  // closed-form renewal limit at alpha (0 when L_g = 0)
    double inf_u0_sq = 0.0;
    LyapunovEstimate lyapunov;   // p = 2
    std::vector<double> times;
    std::vector<double> second_moment_min;  // I(t) = min over probes of E u(t,x)^2
    double growth_rate = 0.0;    // fitted r in I(t) ~ e^{r t}
    double min_ratio = 0.0;      // min_t I(t) / inf u0^2
    bool weakly_intermittent = false;
};

inline void require_intermittency_hypotheses(const BoundaryCondition& bc, const Vector& u0) {
    if (!bc.is_full_neumann())
        throw HypothesisViolation("lowerhyp", "the second-moment lower bound is stated for Neumann boundary conditions");
    if (!u0.allFinite() || !(u0.minCoeff() > 0.0))
        throw HypothesisViolation("lowerhyp", "initial condition must be bounded with a positive infimum");
}

inline IntermittencyReport intermittency_report(const Ensemble& ens, const Spectrum& sp, const Coefficient& g,
                                                const Vector& u0, const LyapunovOptions& opt = {}) {
    require_intermittency_hypotheses(sp.boundary(), u0);
    IntermittencyReport rep;
    rep.lg = g.linear_growth_lower();
    const KappaParams kp(sp.spectral_dimension());
    rep.alpha = kappa_inverse(rep.lg * rep.lg, kp);
    rep.inf_u0_sq = u0.minCoeff() * u0.minCoeff();
    rep.renewal_limit = rep.alpha > 0.0 ? renewal_limit(rep.alpha, sp.spectral_dimension(), rep.inf_u0_sq) : rep.inf_u0_sq;

    LyapunovOptions o = opt;
    o.p = 2.0;
    rep.lyapunov = moment_lyapunov(ens, sp.hausdorff_dimension(), o);

    const double uncensored = ens.uncensored_until();
    rep.min_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < ens.probe_times.size(); ++r) {
        if (ens.probe_times[r] >= uncensored) break;
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < ens.probes.size(); ++i) {
            double m = 0.0;
            for (const auto& path : ens.paths) {
                const double v = path.probe_values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i));
                m += v * v;
            }
            worst = std::min(worst, m / static_cast<double>(ens.paths.size()));
        }
        rep.times.push_back(ens.probe_times[r]);
        rep.second_moment_min.push_back(worst);
        rep.min_ratio = std::min(rep.min_ratio, worst / rep.inf_u0_sq);
    }
    std::vector<double> t, logi;
    for (std::size_t i = 0; i < rep.times.size(); ++i)
        if (rep.times[i] >= rep.lyapunov.window_start && rep.times[i] <= rep.lyapunov.window_end) {
            t.push_back(rep.times[i]);
            logi.push_back(std::log(rep.second_moment_min[i]));
        }
    if (t.size() >= 2) rep.growth_rate = fit_line(t, logi).slope;
    rep.weakly_intermittent = rep.lyapunov.fit.ci_low > 0.0;
    return rep;
}

}  // namespace fspde
