#include <gtest/gtest.h>

#include <fspde/coefficients.hpp>

using namespace fspde;

TEST(Coefficient, ParseBuiltins) {
    EXPECT_TRUE(Coefficient::parse("zero").is_zero());
    EXPECT_TRUE(Coefficient::parse("const:0").is_zero());
    const auto c = Coefficient::parse("const:2.5");
    EXPECT_TRUE(c.is_constant());
    EXPECT_DOUBLE_EQ(c(0.0, 7.0), 2.5);
    const auto l = Coefficient::parse(" linear:-0.5 ");
    EXPECT_FALSE(l.is_constant());
    EXPECT_DOUBLE_EQ(l(1.0, 4.0), -2.0);
    EXPECT_DOUBLE_EQ(l.lipschitz(), 0.5);
}

TEST(Coefficient, LinearGrowthConstant) {
    EXPECT_DOUBLE_EQ(Coefficient::parse("linear:0.5").linear_growth_lower(), 0.5);
    EXPECT_DOUBLE_EQ(Coefficient::parse("const:3").linear_growth_lower(), 0.0);
    EXPECT_DOUBLE_EQ(Coefficient::parse("zero").linear_growth_lower(), 0.0);
}

TEST(Coefficient, Table) {
    // 2z on [-1,1], slope 1 beyond: inf |g(z)/z| is the limit 1 at infinity.
    const auto t = Coefficient::parse("table:-1:-2,0:0,1:2,2:3");
    EXPECT_DOUBLE_EQ(t(0.0, 0.5), 1.0);
    EXPECT_DOUBLE_EQ(t(0.0, 3.0), 4.0);   // linear extrapolation
    EXPECT_DOUBLE_EQ(t(0.0, -2.0), -4.0);
    EXPECT_DOUBLE_EQ(t.lipschitz(), 2.0);
    EXPECT_NEAR(t.linear_growth_lower(), 1.0, 1e-12);
    EXPECT_EQ(Coefficient::parse(t.str()).str(), t.str());
}

TEST(Coefficient, RoundTrip) {
    for (const char* s : {"zero", "const:0.10000000000000001", "linear:3"}) {
        const auto c = Coefficient::parse(s);
        EXPECT_EQ(Coefficient::parse(c.str()).str(), c.str());
    }
}

TEST(Coefficient, Errors) {
    EXPECT_THROW(Coefficient::parse("cubic:1"), UsageError);
    EXPECT_THROW(Coefficient::parse("const:"), UsageError);
    EXPECT_THROW(Coefficient::parse("table:1"), UsageError);
    EXPECT_THROW(Coefficient::parse("table:0:1"), UsageError);
    EXPECT_THROW(Coefficient::parse("table:1:1,1:2"), UsageError);
}
