#pragma once

// Boundary conditions, the constrained stiffness/mass system of -Delta_b on a
// graph approximation, and its dense generalized eigendecomposition.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "errors.hpp"
#include "graph.hpp"
#include "keyvalue.hpp"

namespace fspde {

/// Neumann at the listed V0 corners, Dirichlet at the others.
class BoundaryCondition {
public:
    BoundaryCondition() = default;
    explicit BoundaryCondition(std::vector<bool> neumann) : neumann_(std::move(neumann)) {}

    static BoundaryCondition neumann(std::size_t v0) { return BoundaryCondition(std::vector<bool>(v0, true)); }
    static BoundaryCondition dirichlet(std::size_t v0) { return BoundaryCondition(std::vector<bool>(v0, false)); }

    /// "N", "D", or a list of Neumann corner indices such as "0" or "0,2".
    static BoundaryCondition parse(const std::string& token, std::size_t v0) {
        const auto t = detail::trim(token);
        if (t == "N") return neumann(v0);
        if (t == "D") return dirichlet(v0);
        std::vector<bool> mask(v0, false);
        std::vector<long long> corners;
        try {
            corners = parse_integer_list(t);
        } catch (const UsageError&) {
            throw UsageError("invalid boundary '" + token + "': expected N, D or a corner list");
        }
        if (corners.empty()) throw UsageError("invalid boundary '" + token + "'");
        for (auto c : corners) {
            if (c < 0 || static_cast<std::size_t>(c) >= v0)
                throw UsageError("boundary corner " + std::to_string(c) + " out of range");
            mask[static_cast<std::size_t>(c)] = true;
        }
        return BoundaryCondition(std::move(mask));
    }

    std::size_t size() const noexcept { return neumann_.size(); }
    bool is_neumann(std::size_t corner) const { return neumann_.at(corner); }
    bool is_full_neumann() const { return std::all_of(neumann_.begin(), neumann_.end(), [](bool b) { return b; }); }
    bool is_full_dirichlet() const { return std::none_of(neumann_.begin(), neumann_.end(), [](bool b) { return b; }); }

    std::string str() const {
        if (is_full_neumann()) return "N";
        if (is_full_dirichlet()) return "D";
        std::string s;
        for (std::size_t p = 0; p < neumann_.size(); ++p)
            if (neumann_[p]) s += (s.empty() ? "" : ",") + std::to_string(p);
        return s;
    }

    bool operator==(const BoundaryCondition&) const = default;

private:
    std::vector<bool> neumann_;
};

/// Stiffness H and lumped mass M restricted to the free (non-Dirichlet) vertices.
struct OperatorSystem {
    BoundaryCondition bc;
    int level = 0;
    double hausdorff_dimension = 0.0;
    double spectral_dimension = 0.0;
    std::size_t vertex_count = 0;
    std::vector<std::size_t> free_vertices;
    Eigen::SparseMatrix<double> stiffness;
    Vector mass;            // on free vertices
    Vector vertex_masses;   // on all vertices

    std::size_t dimension() const noexcept { return free_vertices.size(); }

    /// Restriction of a full vertex vector to the free coordinates.
    Vector restrict(const Vector& full) const {
        Vector r(static_cast<Eigen::Index>(free_vertices.size()));
        for (std::size_t i = 0; i < free_vertices.size(); ++i)
            r[static_cast<Eigen::Index>(i)] = full[static_cast<Eigen::Index>(free_vertices[i])];
        return r;
    }
    Vector extend(const Vector& free) const {
        Vector r = Vector::Zero(static_cast<Eigen::Index>(vertex_count));
        for (std::size_t i = 0; i < free_vertices.size(); ++i)
            r[static_cast<Eigen::Index>(free_vertices[i])] = free[static_cast<Eigen::Index>(i)];
        return r;
    }
};

inline OperatorSystem assemble_operator(const GraphApproximation& g, const BoundaryCondition& bc) {
    const auto v0 = g.spec().boundary_size();
    if (bc.size() != v0) throw UsageError("boundary condition size does not match |V0|");
    OperatorSystem sys;
    sys.bc = bc;
    sys.level = g.level();
    sys.hausdorff_dimension = g.spec().hausdorff_dimension();
    sys.spectral_dimension = g.spec().spectral_dimension();
    sys.vertex_count = g.vertex_count();
    sys.vertex_masses = g.mass_vector();

    constexpr auto removed = static_cast<std::size_t>(-1);
    std::vector<std::size_t> index(g.vertex_count(), removed);
    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
        const int corner = g.boundary_corner(v);
        if (corner >= 0 && !bc.is_neumann(static_cast<std::size_t>(corner))) continue;
        index[v] = sys.free_vertices.size();
        sys.free_vertices.push_back(v);
    }
    const auto n = static_cast<Eigen::Index>(sys.free_vertices.size());
    std::vector<Eigen::Triplet<double>> t;
    for (const auto& e : g.edges()) {
        const auto iu = index[e.u], iv = index[e.v];
        if (iu != removed) t.emplace_back(iu, iu, e.conductance);
        if (iv != removed) t.emplace_back(iv, iv, e.conductance);
        if (iu != removed && iv != removed) {
            t.emplace_back(iu, iv, -e.conductance);
            t.emplace_back(iv, iu, -e.conductance);
        }
    }
    sys.stiffness.resize(n, n);
    sys.stiffness.setFromTriplets(t.begin(), t.end());
    sys.mass.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) sys.mass[i] = g.mass(sys.free_vertices[static_cast<std::size_t>(i)]);
    return sys;
}

/// Eigenpairs of -Delta_b at one level, M-orthonormal, ascending.
class Spectrum {
public:
    Spectrum() = default;
    Spectrum(BoundaryCondition bc, int level, double d_h, double d_s, Vector eigenvalues, Matrix eigenvectors,
             Vector vertex_masses, std::size_t full_dimension)
        : bc_(std::move(bc)), level_(level), d_h_(d_h), d_s_(d_s), lambda_(std::move(eigenvalues)),
          phi_(std::move(eigenvectors)), masses_(std::move(vertex_masses)), full_dimension_(full_dimension) {
        sup_sq_ = 0.0;
        for (Eigen::Index k = 0; k < phi_.cols(); ++k)
            sup_sq_ = std::max(sup_sq_, phi_.col(k).cwiseAbs().maxCoeff() * phi_.col(k).cwiseAbs().maxCoeff());
    }

    const BoundaryCondition& boundary() const noexcept { return bc_; }
    int level() const noexcept { return level_; }
    double hausdorff_dimension() const noexcept { return d_h_; }
    double spectral_dimension() const noexcept { return d_s_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(lambda_.size()); }
    std::size_t vertex_count() const noexcept { return static_cast<std::size_t>(phi_.rows()); }
    /// Dimension of the constrained system; size() < full_dimension() means the spectrum is truncated.
    std::size_t full_dimension() const noexcept { return full_dimension_; }

    const Vector& eigenvalues() const noexcept { return lambda_; }
    double eigenvalue(std::size_t k) const { return lambda_[static_cast<Eigen::Index>(k)]; }
    /// Column k holds phi_{k+1} on all vertices (zero at Dirichlet corners).
    const Matrix& eigenvectors() const noexcept { return phi_; }
    double phi(std::size_t k, std::size_t x) const {
        return phi_(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(k));
    }
    const Vector& masses() const noexcept { return masses_; }

    /// B_K = max_k ||phi_k||_inf^2.
    double sup_norm_sq() const noexcept { return sup_sq_; }
    double largest_eigenvalue() const { return lambda_.size() ? lambda_[lambda_.size() - 1] : 0.0; }
    /// First strictly positive eigenvalue.
    double spectral_gap() const {
        for (Eigen::Index k = 0; k < lambda_.size(); ++k)
            if (lambda_[k] > 0.0) return lambda_[k];
        return 0.0;
    }

    /// Coefficients <h, phi_k>_mu.
    Vector project(const Vector& h) const { return phi_.transpose() * masses_.cwiseProduct(h); }
    Vector synthesize(const Vector& coeffs) const { return phi_ * coeffs; }

    double inner(const Vector& a, const Vector& b) const { return masses_.cwiseProduct(a).dot(b); }
    double norm(const Vector& a) const { return std::sqrt(inner(a, a)); }

    /// Keeps the first `k` modes.
    Spectrum truncated(std::size_t k) const {
        if (k > size()) throw DomainError("cannot truncate to more modes than available");
        return Spectrum(bc_, level_, d_h_, d_s_, lambda_.head(static_cast<Eigen::Index>(k)),
                        phi_.leftCols(static_cast<Eigen::Index>(k)), masses_, full_dimension_);
    }

private:
    BoundaryCondition bc_;
    int level_ = 0;
    double d_h_ = 0.0;
    double d_s_ = 0.0;
    Vector lambda_;
    Matrix phi_;
    Vector masses_;
    std::size_t full_dimension_ = 0;
    double sup_sq_ = 0.0;
};

/// Solves H phi = lambda M phi through the symmetric matrix M^{-1/2} H M^{-1/2}.
/// K = 0 requests the full spectrum.
inline Spectrum eigensolve(const OperatorSystem& sys, std::size_t modes = 0) {
    const auto n = static_cast<Eigen::Index>(sys.dimension());
    if (modes == 0) modes = sys.dimension();
    if (modes > sys.dimension())
        throw DomainError("requested " + std::to_string(modes) + " modes but system dimension is " +
                          std::to_string(sys.dimension()));
    const Vector inv_sqrt_m = sys.mass.cwiseSqrt().cwiseInverse();
    Matrix a = Matrix(sys.stiffness);
    a = inv_sqrt_m.asDiagonal() * a * inv_sqrt_m.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Matrix> es(a);
    if (es.info() != Eigen::Success)
        throw NumericalRefusal("symmetric eigensolver did not converge (dimension " + std::to_string(n) + ")");

    const auto k = static_cast<Eigen::Index>(modes);
    Vector lambda = es.eigenvalues().head(k);
    // Values within rounding of zero are the Neumann ground state.
    const double zero_tol = static_cast<double>(n) * std::numeric_limits<double>::epsilon() *
                            std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < k; ++i)
        if (lambda[i] < zero_tol) lambda[i] = 0.0;

    Matrix phi = Matrix::Zero(static_cast<Eigen::Index>(sys.vertex_count), k);
    for (Eigen::Index j = 0; j < k; ++j) {
        Vector col = inv_sqrt_m.cwiseProduct(es.eigenvectors().col(j));
        // Sign convention: first non-negligible entry in vertex order is positive.
        const double scale = col.cwiseAbs().maxCoeff();
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(col[i]) > 1e-8 * scale) {
                if (col[i] < 0.0) col = -col;
                break;
            }
        }
        for (Eigen::Index i = 0; i < n; ++i)
            phi(static_cast<Eigen::Index>(sys.free_vertices[static_cast<std::size_t>(i)]), j) = col[i];
    }
    return Spectrum(sys.bc, sys.level, sys.hausdorff_dimension, sys.spectral_dimension, std::move(lambda),
                    std::move(phi), sys.vertex_masses, sys.dimension());
}

inline Spectrum compute_spectrum(const GraphApproximation& g, const BoundaryCondition& bc, std::size_t modes = 0) {
    return eigensolve(assemble_operator(g, bc), modes);
}

}  // namespace fspde
