#include <gtest/gtest.h>

#include <cmath>

#include <fspde/graph.hpp>

using namespace fspde;

TEST(Graph, GasketCounts) {
    const auto spec = sierpinski_gasket();
    for (int m = 0; m <= 5; ++m) {
        const auto g = build_graph(spec, m);
        const auto expect = (static_cast<std::size_t>(std::pow(3, m + 1)) + 3) / 2;
        EXPECT_EQ(g.vertex_count(), expect) << "m=" << m;
        EXPECT_EQ(g.cell_count(), static_cast<std::size_t>(std::pow(3, m)));
        EXPECT_EQ(g.edges().size(), static_cast<std::size_t>(std::pow(3, m + 1)));
        EXPECT_TRUE(g.connected());
    }
}

TEST(Graph, MassesSumToOne) {
    for (const auto& spec : {sierpinski_gasket(), unit_interval()}) {
        const auto g = build_graph(spec, 4);
        EXPECT_NEAR(g.mass_vector().sum(), 1.0, 1e-13);
    }
}

TEST(Graph, LevelZeroTriangleResistance) {
    const auto g = build_graph(sierpinski_gasket(), 0);
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = a + 1; b < 3; ++b) EXPECT_NEAR(effective_resistance(g, a, b), 2.0 / 3.0, 1e-14);
}

TEST(Graph, ResistanceCompatibleAcrossLevels) {
    // Boundary-to-boundary resistance is the same at every level of a harmonic structure.
    for (int m = 1; m <= 5; ++m) {
        const auto g = build_graph(sierpinski_gasket(), m);
        EXPECT_NEAR(effective_resistance(g, g.boundary_vertex(0), g.boundary_vertex(1)), 2.0 / 3.0, 1e-12);
    }
}

TEST(Graph, IntervalResistanceIsEuclidean) {
    const auto g = build_graph(unit_interval(), 6);
    const ResistanceMetric r(g);
    for (std::size_t x = 0; x < g.vertex_count(); x += 7)
        for (std::size_t y = 0; y < g.vertex_count(); y += 5)
            EXPECT_NEAR(r(x, y), std::abs(interval_coordinate(g, x) - interval_coordinate(g, y)), 1e-12);
}

TEST(Graph, MetricMatchesDirectSolve) {
    const auto g = build_graph(sierpinski_gasket(), 3);
    const ResistanceMetric r(g);
    for (std::size_t x : {0u, 5u, 17u})
        for (std::size_t y : {1u, 9u, 40u}) EXPECT_NEAR(r(x, y), effective_resistance(g, x, y), 1e-12);
    EXPECT_EQ(r(4, 4), 0.0);
}

TEST(Graph, ResistanceIsAMetric) {
    const auto g = build_graph(sierpinski_gasket(), 3);
    const ResistanceMetric r(g);
    const auto n = g.vertex_count();
    for (std::size_t x = 0; x < n; x += 3)
        for (std::size_t y = 0; y < n; y += 4)
            for (std::size_t z = 0; z < n; z += 5) EXPECT_LE(r(x, z), r(x, y) + r(y, z) + 1e-12);
}

TEST(Graph, AddressResolution) {
    const auto g = build_graph(sierpinski_gasket(), 3);
    EXPECT_EQ(g.resolve(":0"), g.boundary_vertex(0));
    EXPECT_EQ(g.resolve("0:1"), g.resolve("1:0"));    // gluing psi_0(q_1) = psi_1(q_0)
    EXPECT_EQ(g.resolve("01:2"), g.resolve("02:1"));
    EXPECT_EQ(g.resolve("12"), 12u);
    EXPECT_THROW(g.resolve("0123:0"), AddressError);
    EXPECT_THROW(g.resolve("0:7"), AddressError);
    EXPECT_THROW(g.resolve("9999"), AddressError);
    EXPECT_THROW(g.resolve("ab:1"), AddressError);
    for (std::size_t v = 0; v < g.vertex_count(); ++v) EXPECT_EQ(g.resolve(g.address(v)), v);
}

TEST(Graph, ResourceLimit) {
    EXPECT_THROW(build_graph(sierpinski_gasket(), 9), ResourceError);
    EXPECT_THROW(build_graph(sierpinski_gasket(), 6, 5), ResourceError);
}

TEST(Delta, IntegratesToOne) {
    const auto g = build_graph(sierpinski_gasket(), 6);
    for (int n = 0; n <= 4; ++n)
        for (std::size_t x : {0ul, 100ul, 555ul, 1000ul}) {
            const Vector f = delta_approximant(g, n, x);
            EXPECT_NEAR(g.mass_vector().dot(f), 1.0, 1e-12);
            EXPECT_GT(f[static_cast<Eigen::Index>(x)], 0.0);
        }
}

TEST(Delta, InteriorValueIsInverseMass) {
    const auto g = build_graph(sierpinski_gasket(), 4);
    const auto x = g.resolve("0:1");  // junction of cells 0 and 1
    const auto nb = neighbourhood(g, 2, x);
    EXPECT_EQ(nb.cells.size(), 2u);
    const Vector f = delta_approximant(g, 2, x);
    EXPECT_NEAR(f[static_cast<Eigen::Index>(x)], 1.0 / nb.mass, 1e-12);
}

TEST(Delta, NeedsDeepEnoughGraph) {
    const auto g = build_graph(sierpinski_gasket(), 3);
    EXPECT_THROW(delta_approximant(g, 5, 0), AddressError);
}

TEST(Delta, SmoothFieldConverges) {
    // Pairing of a Lipschitz function in R against f^x_n approaches its value at x.
    const auto g = build_graph(sierpinski_gasket(), 6);
    const ResistanceMetric r(g);
    const auto x = g.resolve("012:1");
    Vector h(static_cast<Eigen::Index>(g.vertex_count()));
    for (std::size_t v = 0; v < g.vertex_count(); ++v) h[static_cast<Eigen::Index>(v)] = r(v, g.boundary_vertex(0));
    for (int n = 1; n <= 4; ++n) {
        const Vector w = g.mass_vector().cwiseProduct(delta_approximant(g, n, x));
        const double err = std::abs(w.dot(h) - h[static_cast<Eigen::Index>(x)]);
        EXPECT_LE(err, std::ldexp(1.0, -n) * 2.0) << "n=" << n;
    }
}
