#pragma once

// Heat kernel, semigroup, resolvent density and operator-norm increments,
// all evaluated as truncated eigen-sums over a Spectrum.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "graph.hpp"
#include "laplacian.hpp"

namespace fspde {

struct KernelPolicy {
    bool force = false;
    double max_relative_tail = 0.01;
};

struct KernelValue {
    double value = 0.0;
    double tail_bound = 0.0;  // e^{-lambda_K t} B_K
    std::size_t modes = 0;
};

/// Bound on the first omitted term of the eigen-sum at time t.
inline double truncation_tail(const Spectrum& sp, double t) {
    return std::exp(-sp.largest_eigenvalue() * t) * sp.sup_norm_sq();
}

inline KernelValue heat_kernel(const Spectrum& sp, double t, std::size_t x, std::size_t y,
                               const KernelPolicy& policy = {}) {
    if (!(t > 0.0)) throw DomainError("heat kernel requires t > 0");
    if (x >= sp.vertex_count() || y >= sp.vertex_count()) throw AddressError("vertex id out of range");
    KernelValue out;
    out.modes = sp.size();
    const auto& phi = sp.eigenvectors();
    const auto ix = static_cast<Eigen::Index>(x), iy = static_cast<Eigen::Index>(y);
    if (phi.row(ix).isZero(0.0) || phi.row(iy).isZero(0.0)) return out;  // Dirichlet corner
    for (std::size_t k = 0; k < sp.size(); ++k) {
        const auto ik = static_cast<Eigen::Index>(k);
        out.value += std::exp(-sp.eigenvalue(k) * t) * phi(ix, ik) * phi(iy, ik);
    }
    out.tail_bound = truncation_tail(sp, t);
    if (!policy.force && out.tail_bound > policy.max_relative_tail * std::abs(out.value))
        throw NumericalRefusal("heat kernel under-resolved at t = " + short_num(t) + ": tail bound " +
                               short_num(out.tail_bound) + " vs value " + short_num(out.value));
    return out;
}

/// Full matrix [p_t(x,y)].
inline Matrix heat_kernel_matrix(const Spectrum& sp, double t) {
    if (!(t > 0.0)) throw DomainError("heat kernel requires t > 0");
    const Vector decay = (-t * sp.eigenvalues().array()).exp().matrix();
    return sp.eigenvectors() * decay.asDiagonal() * sp.eigenvectors().transpose();
}

/// S_t h = sum_k e^{-lambda_k t} <h, phi_k>_mu phi_k.
inline Vector semigroup_apply(const Spectrum& sp, double t, const Vector& h) {
    if (!(t >= 0.0)) throw DomainError("semigroup requires t >= 0");
    if (static_cast<std::size_t>(h.size()) != sp.vertex_count()) throw DomainError("vector size mismatch");
    Vector coeffs = sp.project(h);
    coeffs.array() *= (-t * sp.eigenvalues().array()).exp();
    return sp.synthesize(coeffs);
}

/// Matrix of S_t acting on vertex vectors: Phi diag(e^{-lambda t}) Phi^T M.
inline Matrix semigroup_matrix(const Spectrum& sp, double t) {
    if (!(t >= 0.0)) throw DomainError("semigroup requires t >= 0");
    const Vector decay = (-t * sp.eigenvalues().array()).exp().matrix();
    return sp.eigenvectors() * decay.asDiagonal() * (sp.eigenvectors().transpose() * sp.masses().asDiagonal());
}

/// rho_lambda(x,y) = sum_k phi_k(x) phi_k(y) / (lambda + lambda_k).
inline double resolvent_density(const Spectrum& sp, double lambda, std::size_t x, std::size_t y) {
    if (!(lambda > 0.0)) throw DomainError("resolvent requires lambda > 0");
    if (x >= sp.vertex_count() || y >= sp.vertex_count()) throw AddressError("vertex id out of range");
    const auto& phi = sp.eigenvectors();
    double s = 0.0;
    for (std::size_t k = 0; k < sp.size(); ++k) {
        const auto ik = static_cast<Eigen::Index>(k);
        s += phi(static_cast<Eigen::Index>(x), ik) * phi(static_cast<Eigen::Index>(y), ik) / (lambda + sp.eigenvalue(k));
    }
    return s;
}

inline Matrix resolvent_matrix(const Spectrum& sp, double lambda) {
    if (!(lambda > 0.0)) throw DomainError("resolvent requires lambda > 0");
    const Vector w = (lambda + sp.eigenvalues().array()).inverse().matrix();
    return sp.eigenvectors() * w.asDiagonal() * sp.eigenvectors().transpose();
}

/// ||S_{t0} - S_{t0+t}|| = max_k (e^{-lambda_k t0} - e^{-lambda_k (t0+t)}); bounded by t/(t0+t).
inline double semigroup_increment_norm(const Spectrum& sp, double t0, double t) {
    if (!(t0 > 0.0) || !(t > 0.0)) throw DomainError("semigroup increment requires t0 > 0 and t > 0");
    double best = 0.0;
    for (std::size_t k = 0; k < sp.size(); ++k) {
        const double l = sp.eigenvalue(k);
        best = std::max(best, std::exp(-l * t0) * -std::expm1(-l * t));
    }
    return best;
}

inline double semigroup_increment_bound(double t0, double t) { return t / (t0 + t); }

// ---------------------------------------------------------------------------
// Resolved window and bound report

struct ResolvedWindow {
    double t_min = 0.0;
    double t_max = 0.0;
    bool empty() const noexcept { return !(t_min < t_max); }
};

/// t_min: smallest t whose tail bound is below `max_relative_tail` of p_t(x,x)
/// for every probe; t_max = 0.1 / lambda_2.
inline ResolvedWindow resolved_window(const Spectrum& sp, const std::vector<std::size_t>& probes,
                                      double max_relative_tail = 0.01) {
    ResolvedWindow w;
    const double gap = sp.spectral_gap();
    w.t_max = gap > 0.0 ? 0.1 / gap : std::numeric_limits<double>::infinity();
    auto resolved = [&](double t) {
        for (auto x : probes) {
            const auto v = heat_kernel(sp, t, x, x, {.force = true});
            if (v.tail_bound > max_relative_tail * v.value) return false;
        }
        return true;
    };
    double lo = 1e-12, hi = 1.0 / std::max(gap, 1e-12);
    if (resolved(lo)) {
        w.t_min = lo;
        return w;
    }
    if (!resolved(hi)) {
        w.t_min = std::numeric_limits<double>::infinity();
        return w;
    }
    for (int it = 0; it < 200 && hi / lo > 1.0 + 1e-12; ++it) {
        const double mid = std::sqrt(lo * hi);
        (resolved(mid) ? hi : lo) = mid;
    }
    w.t_min = hi;
    return w;
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    std::size_t points = 0;
};

/// Ordinary least squares y = a + b x.
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    LineFit f;
    f.points = x.size();
    if (x.size() != y.size() || x.size() < 2) throw DomainError("line fit needs at least two points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
    mx /= n, my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0) throw DomainError("line fit needs distinct abscissae");
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (x.size() > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - f.intercept - f.slope * x[i];
            rss += r * r;
        }
        f.slope_stderr = std::sqrt(rss / (n - 2.0) / sxx);
    }
    return f;
}

struct KernelBoundReport {
    ResolvedWindow window;
    std::vector<double> fit_times;      // grid points used in the slope fit
    LineFit diagonal_fit;               // log mean_x p_t(x,x) against log t
    double probe_slope_min = 0.0;
    double probe_slope_max = 0.0;
    double target_slope = 0.0;          // -d_s/2
    double c7 = 0.0;                    // min p_t(x,x) / (1 + t^{-d_s/2}) over grid and probes
    double c8 = 0.0;                    // max of the same ratio
    double c2 = 0.0;                    // sup |p_t(x,y) - p_t(x',y)|^2 / (R(x,x') t^{-1-d_s/2})
    std::size_t increment_samples = 0;
};

struct IncrementTriple {
    std::size_t x = 0;
    std::size_t x_prime = 0;
    std::size_t y = 0;
};

/// Fits the small-time diagonal decay on the resolved part of `t_grid` and
/// collects the empirical envelope constants. `metric` may be null, in which
/// case the spatial-increment constant is skipped.
inline KernelBoundReport kernel_bound_report(const Spectrum& sp, const std::vector<double>& t_grid,
                                             const std::vector<std::size_t>& probes,
                                             const std::vector<IncrementTriple>& triples = {},
                                             const ResistanceMetric* metric = nullptr) {
    if (probes.empty()) throw DomainError("kernel bound report needs probe vertices");
    KernelBoundReport rep;
    const double ds = sp.spectral_dimension();
    rep.target_slope = -ds / 2.0;
    rep.window = resolved_window(sp, probes);

    std::vector<double> lt, lp;
    std::vector<std::vector<double>> per_probe(probes.size());
    for (double t : t_grid) {
        if (t < rep.window.t_min || t > rep.window.t_max) continue;
        double mean = 0.0;
        for (std::size_t i = 0; i < probes.size(); ++i) {
            const double v = heat_kernel(sp, t, probes[i], probes[i]).value;
            per_probe[i].push_back(std::log(v));
            mean += v;
        }
        rep.fit_times.push_back(t);
        lt.push_back(std::log(t));
        lp.push_back(std::log(mean / static_cast<double>(probes.size())));
    }
    if (lt.size() < 3)
        throw NumericalRefusal("fewer than three grid times inside the resolved window [" +
                               short_num(rep.window.t_min) + ", " + short_num(rep.window.t_max) + "]");
    rep.diagonal_fit = fit_line(lt, lp);
    rep.probe_slope_min = std::numeric_limits<double>::infinity();
    rep.probe_slope_max = -std::numeric_limits<double>::infinity();
    for (const auto& series : per_probe) {
        const double s = fit_line(lt, series).slope;
        rep.probe_slope_min = std::min(rep.probe_slope_min, s);
        rep.probe_slope_max = std::max(rep.probe_slope_max, s);
    }

    rep.c7 = std::numeric_limits<double>::infinity();
    rep.c8 = 0.0;
    for (double t : t_grid) {
        if (t < rep.window.t_min) continue;
        const double shape = 1.0 + std::pow(t, -ds / 2.0);
        for (auto x : probes) {
            const double ratio = heat_kernel(sp, t, x, x).value / shape;
            rep.c7 = std::min(rep.c7, ratio);
            rep.c8 = std::max(rep.c8, ratio);
        }
    }

    if (metric) {
        for (double t : rep.fit_times) {
            const double scale = std::pow(t, -1.0 - ds / 2.0);
            for (const auto& tr : triples) {
                if (tr.x == tr.x_prime) continue;
                const double r = (*metric)(tr.x, tr.x_prime);
                const double d = heat_kernel(sp, t, tr.x, tr.y, {.force = true}).value -
                                 heat_kernel(sp, t, tr.x_prime, tr.y, {.force = true}).value;
                rep.c2 = std::max(rep.c2, d * d / (r * scale));
                ++rep.increment_samples;
            }
        }
    }
    return rep;
}

}  // namespace fspde
