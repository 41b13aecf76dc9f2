#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <Eigen/SVD>

#include <fspde/kernels.hpp>
#include <fspde/rng.hpp>

using namespace fspde;

namespace {

constexpr double pi = std::numbers::pi;

const Spectrum& interval_dirichlet() {
    static const auto sp = compute_spectrum(build_graph(unit_interval(), 10), BoundaryCondition::dirichlet(2));
    return sp;
}

const Spectrum& gasket3() {
    static const auto sp = compute_spectrum(build_graph(sierpinski_gasket(), 3), BoundaryCondition::neumann(3));
    return sp;
}

}  // namespace

TEST(HeatKernel, IntervalSineSeries) {
    const auto& sp = interval_dirichlet();
    const auto g = build_graph(unit_interval(), 10);
    const auto mid = g.resolve("1:0");
    EXPECT_NEAR(interval_coordinate(g, mid), 0.5, 0.0);
    double oracle = 0.0;
    for (int k = 1; k < 200; ++k) oracle += 2.0 * std::pow(std::sin(k * pi / 2.0), 2) * std::exp(-k * k * pi * pi * 0.1);
    const auto v = heat_kernel(sp, 0.1, mid, mid);
    EXPECT_NEAR(v.value, oracle, 1e-6);
    EXPECT_LT(v.tail_bound, 1e-12);
}

TEST(HeatKernel, IntervalNeumannCosineSeries) {
    const auto g = build_graph(unit_interval(), 9);
    const auto sp = compute_spectrum(g, BoundaryCondition::neumann(2));
    const auto x = g.resolve("01:0"), y = g.resolve("110:1");
    const double xs = interval_coordinate(g, x), ys = interval_coordinate(g, y);
    for (double t : {0.01, 0.05, 0.3}) {
        double oracle = 1.0;
        for (int k = 1; k < 400; ++k)
            oracle += 2.0 * std::cos(k * pi * xs) * std::cos(k * pi * ys) * std::exp(-k * k * pi * pi * t);
        EXPECT_NEAR(heat_kernel(sp, t, x, y).value, oracle, 1e-5) << "t=" << t;
    }
}

TEST(HeatKernel, SymmetricPositiveAndMassPreserving) {
    const auto& sp = gasket3();
    const Matrix p = heat_kernel_matrix(sp, 0.01);
    EXPECT_LT((p - p.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_GT(p.minCoeff(), 0.0);
    const Vector row_mass = p * sp.masses();
    EXPECT_LT((row_mass.array() - 1.0).abs().maxCoeff(), 1e-10);
}

TEST(HeatKernel, ChapmanKolmogorov) {
    const auto& sp = gasket3();
    const Matrix ps = heat_kernel_matrix(sp, 0.003), pt = heat_kernel_matrix(sp, 0.007), pst = heat_kernel_matrix(sp, 0.01);
    const Matrix composed = ps * sp.masses().asDiagonal() * pt;
    EXPECT_LT((composed - pst).cwiseAbs().maxCoeff() / pst.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(HeatKernel, LargeTimeNeumannLimit) {
    const auto& sp = gasket3();
    for (std::size_t x = 0; x < sp.vertex_count(); x += 5) EXPECT_NEAR(heat_kernel(sp, 5.0, x, x).value, 1.0, 1e-10);
}

TEST(HeatKernel, RefusesUnresolvedTimes) {
    const auto sp = gasket3().truncated(10);
    EXPECT_THROW(heat_kernel(sp, 1e-6, 3, 3), NumericalRefusal);
    EXPECT_NO_THROW(heat_kernel(sp, 1e-6, 3, 3, {.force = true}));
    EXPECT_THROW(heat_kernel(sp, 0.0, 3, 3), DomainError);
    EXPECT_THROW(heat_kernel(sp, 1.0, 9999, 3), AddressError);
}

TEST(HeatKernel, DirichletVertexIsZero) {
    const auto g = build_graph(sierpinski_gasket(), 3);
    const auto sp = compute_spectrum(g, BoundaryCondition::dirichlet(3));
    const auto v = heat_kernel(sp, 1e-9, g.boundary_vertex(0), 5);
    EXPECT_EQ(v.value, 0.0);
    EXPECT_EQ(v.tail_bound, 0.0);
}

TEST(Semigroup, MatrixAgreesWithApply) {
    const auto& sp = gasket3();
    const Vector h = Vector::LinSpaced(static_cast<Eigen::Index>(sp.vertex_count()), 0.0, 1.0).array().square();
    EXPECT_LT((semigroup_matrix(sp, 0.02) * h - semigroup_apply(sp, 0.02, h)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((semigroup_apply(sp, 0.0, h) - h).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(sp.inner(semigroup_apply(sp, 0.5, h), Vector::Ones(h.size())), sp.inner(h, Vector::Ones(h.size())), 1e-12);
    EXPECT_THROW(semigroup_apply(sp, -1.0, h), DomainError);
}

TEST(Semigroup, IncrementNormMatchesOperatorNorm) {
    const auto g = build_graph(sierpinski_gasket(), 2);
    const auto sp = compute_spectrum(g, BoundaryCondition::neumann(3));
    const Vector sq = sp.masses().cwiseSqrt();
    for (double t0 : {1e-3, 0.05}) {
        for (double t : {1e-4, 0.02, 1.0}) {
            const Matrix d = semigroup_matrix(sp, t0) - semigroup_matrix(sp, t0 + t);
            const Matrix sym = sq.asDiagonal() * d * sq.cwiseInverse().asDiagonal();
            const double direct = Eigen::JacobiSVD<Matrix>(sym).singularValues()(0);
            EXPECT_NEAR(semigroup_increment_norm(sp, t0, t), direct, 1e-10);
            EXPECT_LE(semigroup_increment_norm(sp, t0, t), semigroup_increment_bound(t0, t) + 1e-15);
        }
    }
}

TEST(Resolvent, InvertsOperator) {
    const auto g = build_graph(sierpinski_gasket(), 3);
    const auto sp = compute_spectrum(g, BoundaryCondition::neumann(3));
    const Matrix r = resolvent_matrix(sp, 2.0);
    const Matrix op = 2.0 * Matrix(sp.masses().asDiagonal()) + Matrix(g.laplacian());
    EXPECT_LT((op * r - Matrix::Identity(r.rows(), r.cols())).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_NEAR(resolvent_density(sp, 2.0, 4, 11), r(4, 11), 1e-12);
    EXPECT_THROW(resolvent_density(sp, 0.0, 1, 1), DomainError);
}

TEST(Resolvent, ReproducesPointValues) {
    // E_m(rho(x,.), f) + lambda <rho(x,.), f> = f(x) for f vanishing at Dirichlet corners
    const auto g = build_graph(sierpinski_gasket(), 4);
    for (const char* bc : {"N", "D"}) {
        const auto sp = compute_spectrum(g, BoundaryCondition::parse(bc, 3));
        const Matrix r = resolvent_matrix(sp, 1.0);
        NoiseStream s(3, 0, 0);
        Vector f(static_cast<Eigen::Index>(g.vertex_count()));
        for (auto& v : f) v = s.normal();
        f = sp.synthesize(sp.project(f));  // drop the Dirichlet corner values
        double worst = 0.0;
        for (Eigen::Index x = 0; x < f.size(); x += 5) {
            const Vector rx = r.col(x);
            const double form = rx.dot(g.laplacian() * f) + sp.inner(rx, f);
            worst = std::max(worst, std::abs(form - f[x]));
        }
        EXPECT_LT(worst, 1e-6) << bc;
    }
}

TEST(Resolvent, IntervalGreenFunction) {
    const auto g = build_graph(unit_interval(), 10);
    const auto& sp = interval_dirichlet();
    const double lam = 3.0, s = std::sqrt(lam);
    const auto x = g.resolve("01:0"), y = g.resolve("110:1");
    const double xs = interval_coordinate(g, x), ys = interval_coordinate(g, y);
    const double exact = std::sinh(s * xs) * std::sinh(s * (1.0 - ys)) / (s * std::sinh(s));
    EXPECT_NEAR(resolvent_density(sp, lam, x, y), exact, 1e-6);
}

TEST(Resolvent, LipschitzInResistance) {
    const auto g = build_graph(sierpinski_gasket(), 4);
    const auto sp = compute_spectrum(g, BoundaryCondition::neumann(3));
    const ResistanceMetric r(g);
    const Matrix rho = resolvent_matrix(sp, 1.0);
    const auto n = static_cast<Eigen::Index>(g.vertex_count());
    for (Eigen::Index x = 0; x < n; x += 3)
        for (Eigen::Index xp = 1; xp < n; xp += 4)
            for (Eigen::Index y = 0; y < n; y += 7)
                EXPECT_LE(std::abs(rho(x, y) - rho(xp, y)), 2.0 * r(static_cast<std::size_t>(x), static_cast<std::size_t>(xp)) + 1e-8);
}

TEST(Window, ResolvedAndFitted) {
    const auto g = build_graph(sierpinski_gasket(), 5);
    const auto sp = compute_spectrum(g, BoundaryCondition::neumann(3));
    const std::vector<std::size_t> probes{10, 50, 120, 200, 300};
    const auto w = resolved_window(sp, probes);
    EXPECT_FALSE(w.empty());
    EXPECT_NEAR(w.t_max, 0.1 / sp.spectral_gap(), 1e-15);
    std::vector<double> grid;
    for (int i = 0; i <= 60; ++i) grid.push_back(std::pow(10.0, -6.0 + 6.0 * i / 60.0));
    const auto rep = kernel_bound_report(sp, grid, probes);
    EXPECT_NEAR(rep.diagonal_fit.slope, -sp.spectral_dimension() / 2.0, 0.05);
    EXPECT_GT(rep.c7, 0.0);
    EXPECT_GE(rep.c8, rep.c7);
    EXPECT_THROW(kernel_bound_report(sp, {1e-9, 2e-9, 3e-9}, probes), NumericalRefusal);
}

TEST(Fit, ExactLine) {
    const auto f = fit_line({1, 2, 3, 4}, {3, 5, 7, 9});
    EXPECT_NEAR(f.slope, 2.0, 1e-14);
    EXPECT_NEAR(f.intercept, 1.0, 1e-14);
    EXPECT_NEAR(f.slope_stderr, 0.0, 1e-12);
    EXPECT_THROW(fit_line({1}, {1}), DomainError);
    EXPECT_THROW(fit_line({1, 1}, {1, 2}), DomainError);
}
