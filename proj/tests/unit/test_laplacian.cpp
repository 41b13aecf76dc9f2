#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <fspde/laplacian.hpp>

using namespace fspde;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST(Boundary, Parse) {
    EXPECT_TRUE(BoundaryCondition::parse("N", 3).is_full_neumann());
    EXPECT_TRUE(BoundaryCondition::parse(" D ", 3).is_full_dirichlet());
    const auto b = BoundaryCondition::parse("0,2", 3);
    EXPECT_TRUE(b.is_neumann(0));
    EXPECT_FALSE(b.is_neumann(1));
    EXPECT_TRUE(b.is_neumann(2));
    EXPECT_THROW(BoundaryCondition::parse("X", 3), UsageError);
    EXPECT_THROW(BoundaryCondition::parse("3", 3), UsageError);
    EXPECT_THROW(BoundaryCondition::parse("", 3), UsageError);
}

TEST(Spectrum, IntervalDirichletMatchesDiscreteSines) {
    const int m = 8;
    const double h = std::ldexp(1.0, -m);
    const auto sp = compute_spectrum(build_graph(unit_interval(), m), BoundaryCondition::dirichlet(2));
    ASSERT_EQ(sp.size(), (std::size_t{1} << m) - 1);
    for (std::size_t k = 1; k <= 20; ++k) {
        const double exact = 4.0 / (h * h) * std::pow(std::sin(static_cast<double>(k) * pi * h / 2.0), 2);
        EXPECT_NEAR(sp.eigenvalue(k - 1) / exact, 1.0, 1e-10);
    }
}

TEST(Spectrum, IntervalNeumannMatchesDiscreteCosines) {
    const int m = 7;
    const double h = std::ldexp(1.0, -m);
    const auto sp = compute_spectrum(build_graph(unit_interval(), m), BoundaryCondition::neumann(2));
    EXPECT_EQ(sp.eigenvalue(0), 0.0);
    for (std::size_t k = 1; k <= 20; ++k) {
        const double exact = 4.0 / (h * h) * std::pow(std::sin(static_cast<double>(k) * pi * h / 2.0), 2);
        EXPECT_NEAR(sp.eigenvalue(k) / exact, 1.0, 1e-10);
    }
}

TEST(Spectrum, IntervalLevelTenWithinTwoTenthsPercent) {
    const auto sp = compute_spectrum(build_graph(unit_interval(), 10), BoundaryCondition::dirichlet(2), 10);
    for (std::size_t k = 1; k <= 10; ++k)
        EXPECT_LT(std::abs(sp.eigenvalue(k - 1) / std::pow(static_cast<double>(k) * pi, 2) - 1.0), 2e-3);
}

TEST(Spectrum, MassOrthonormal) {
    const auto g = build_graph(sierpinski_gasket(), 3);
    for (const auto& bc : {BoundaryCondition::neumann(3), BoundaryCondition::dirichlet(3), BoundaryCondition::parse("1", 3)}) {
        const auto sp = compute_spectrum(g, bc);
        const Matrix gram = sp.eigenvectors().transpose() * sp.masses().asDiagonal() * sp.eigenvectors();
        EXPECT_LT((gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Spectrum, NeumannGroundStateIsConstant) {
    const auto sp = compute_spectrum(build_graph(sierpinski_gasket(), 4), BoundaryCondition::neumann(3));
    EXPECT_EQ(sp.eigenvalue(0), 0.0);
    EXPECT_GT(sp.eigenvalue(1), 0.0);
    const Vector phi0 = sp.eigenvectors().col(0);
    EXPECT_LT((phi0.array() - 1.0).abs().maxCoeff(), 1e-10);
    EXPECT_DOUBLE_EQ(sp.spectral_gap(), sp.eigenvalue(1));
}

TEST(Spectrum, DirichletVanishesOnBoundary) {
    const auto g = build_graph(sierpinski_gasket(), 3);
    const auto sp = compute_spectrum(g, BoundaryCondition::parse("0", 3));
    for (std::size_t k = 0; k < sp.size(); ++k) {
        EXPECT_EQ(sp.phi(k, g.boundary_vertex(1)), 0.0);
        EXPECT_EQ(sp.phi(k, g.boundary_vertex(2)), 0.0);
    }
    EXPECT_EQ(sp.full_dimension(), g.vertex_count() - 2);
    EXPECT_GT(sp.eigenvalue(0), 0.0);
}

TEST(Spectrum, LowestDirichletEigenvalueSettles) {
    const auto g4 = build_graph(sierpinski_gasket(), 4), g5 = build_graph(sierpinski_gasket(), 5);
    const auto s4 = compute_spectrum(g4, BoundaryCondition::dirichlet(3), 5);
    const auto s5 = compute_spectrum(g5, BoundaryCondition::dirichlet(3), 5);
    EXPECT_NEAR(s5.eigenvalue(0) / s4.eigenvalue(0), 1.0, 0.02);
}

TEST(Spectrum, SupNormAndTruncation) {
    const auto sp = compute_spectrum(build_graph(sierpinski_gasket(), 3), BoundaryCondition::neumann(3));
    double b = 0.0;
    for (Eigen::Index k = 0; k < sp.eigenvectors().cols(); ++k) b = std::max(b, sp.eigenvectors().col(k).cwiseAbs2().maxCoeff());
    EXPECT_DOUBLE_EQ(sp.sup_norm_sq(), b);
    const auto t = sp.truncated(10);
    EXPECT_EQ(t.size(), 10u);
    EXPECT_EQ(t.full_dimension(), sp.full_dimension());
    EXPECT_THROW(sp.truncated(sp.size() + 1), DomainError);
    EXPECT_THROW(compute_spectrum(build_graph(sierpinski_gasket(), 1), BoundaryCondition::neumann(3), 100), DomainError);
}

TEST(Spectrum, ProjectSynthesizeRoundTrip) {
    const auto sp = compute_spectrum(build_graph(sierpinski_gasket(), 3), BoundaryCondition::neumann(3));
    Vector h = Vector::LinSpaced(static_cast<Eigen::Index>(sp.vertex_count()), -1.0, 2.0);
    EXPECT_LT((sp.synthesize(sp.project(h)) - h).cwiseAbs().maxCoeff(), 1e-10);
}
