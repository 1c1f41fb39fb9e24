#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "storesim/distribution.hpp"
#include "storesim/errors.hpp"
#include "storesim/quadrature.hpp"
#include "storesim/rng.hpp"

using namespace storesim;

// Known-answer vectors for Philox4x64-10, cross-checked against numpy's
// implementation (raw cipher output for the stated counter and key).
TEST(Philox, KnownAnswers) {
    const std::uint64_t M = ~std::uint64_t{0};
    struct Kat {
        Philox4x64::Block ctr;
        Philox4x64::Key key;
        Philox4x64::Block out;
    };
    const Kat kats[] = {
        {{0, 0, 0, 0},
         {0, 0},
         {0x16554d9eca36314cULL, 0xdb20fe9d672d0fdcULL, 0xd7e772cee186176bULL,
          0x7e68b68aec7ba23bULL}},
        {{M, M, M, M},
         {M, M},
         {0x87b092c3013fe90bULL, 0x438c3c67be8d0224ULL, 0x9cc7d7c69cd777b6ULL,
          0xa09caebf594f0ba0ULL}},
        {{7, 0, 0, 0},
         {42, 0},
         {0xd97b87792327f6f1ULL, 0xbd98f083584c2058ULL, 0x718641e5691cefc6ULL,
          0x182ed409c4583e39ULL}},
        {{0xa4093822299f31d0ULL, 0x082efa98ec4e6c89ULL, 0x452821e638d01377ULL,
          0xbe5466cf34e90c6cULL},
         {0x243f6a8885a308d3ULL, 0x13198a2e03707344ULL},
         {0xfa09f4b6bf8ef8b6ULL, 0xf97c5ca6aa476cefULL, 0xd9e79e84b97a5616ULL,
          0x42df281adc0d1bf8ULL}},
    };
    for (const auto& k : kats) EXPECT_EQ(Philox4x64::encrypt(k.ctr, k.key), k.out);
}

TEST(Philox, StreamMatchesCipherAndSeeks) {
    Philox4x64 g(42, 0);
    std::vector<std::uint64_t> first(12);
    for (auto& x : first) x = g();
    for (std::uint64_t b = 0; b < 3; ++b) {
        auto blk = Philox4x64::encrypt({b, 0, 0, 0}, {42, 0});
        for (int j = 0; j < 4; ++j) EXPECT_EQ(first[b * 4 + j], blk[j]);
    }
    Philox4x64 h(42, 0);
    h.discard(7);
    EXPECT_EQ(h(), first[7]);
    h.seek(2);
    EXPECT_EQ(h(), first[8]);
}

TEST(Philox, StreamsDiffer) {
    Philox4x64 a(1, 0), b(1, 1), c(2, 0);
    std::uint64_t x = a();
    EXPECT_NE(x, b());
    EXPECT_NE(x, c());
}

TEST(UnitOpen, NeverHitsEndpoints) {
    EXPECT_GT(to_unit_open(0), 0.0);
    EXPECT_LT(to_unit_open(~std::uint64_t{0}), 1.0);
    EXPECT_DOUBLE_EQ(to_unit_open(std::uint64_t{1} << 63), 0.5 + 0x1.0p-53);
}

TEST(Laplace, ClosedForms) {
    LaplaceModel lap(0.0, 2.0);
    EXPECT_DOUBLE_EQ(lap.cdf(0.0), 0.5);
    EXPECT_NEAR(lap.cdf(-2.0), 0.5 * std::exp(-1.0), 1e-15);
    EXPECT_NEAR(lap.quantile(lap.cdf(3.7)), 3.7, 1e-12);
    EXPECT_NEAR(lap.quantile(lap.cdf(-5.1)), -5.1, 1e-12);
    EXPECT_NEAR(lap.expected_negative(), 1.0, 1e-15);
    EXPECT_NEAR(lap.expected_positive(), 1.0, 1e-15);
    EXPECT_NEAR(lap.stddev(), 2.0 * std::sqrt(2.0), 1e-15);
    EXPECT_THROW(LaplaceModel(0.0, 0.0), InvalidArgument);
}

TEST(Laplace, PartialExpectationsMatchQuadrature) {
    LaplaceModel lap(1.5, 3.0);
    for (double t : {-10.0, -1.5, 0.0, 2.0, 7.0}) {
        double pos = integrate([&](double x) { return std::max(x + t, 0.0) * lap.pdf(x); },
                               -INFINITY, INFINITY, {-t, 1.5});
        double neg = integrate([&](double x) { return std::max(-(x + t), 0.0) * lap.pdf(x); },
                               -INFINITY, INFINITY, {-t, 1.5});
        EXPECT_NEAR(lap.expected_positive(t), pos, 1e-10);
        EXPECT_NEAR(lap.expected_negative(t), neg, 1e-10);
    }
}

TEST(Empirical, StepCdfAndMoments) {
    EmpiricalDistribution e({3.0, 1.0, 2.0, 2.0});
    EXPECT_DOUBLE_EQ(e.cdf(2.0), 0.75);
    EXPECT_DOUBLE_EQ(e.cdf_left(2.0), 0.25);
    EXPECT_DOUBLE_EQ(e.cdf(0.9), 0.0);
    EXPECT_DOUBLE_EQ(e.quantile(0.5), 2.0);
    EXPECT_DOUBLE_EQ(e.quantile(0.76), 3.0);
    EXPECT_DOUBLE_EQ(e.mean(), 2.0);
    EXPECT_DOUBLE_EQ(e.expected_positive(-2.0), 0.25);
    EXPECT_DOUBLE_EQ(e.expected_negative(-2.0), 0.25);
    EXPECT_THROW(e.pdf(0.0), UnsupportedModel);
    EXPECT_THROW(EmpiricalDistribution({}), InsufficientData);
}

TEST(Describe, Labels) {
    EXPECT_EQ(describe(LaplaceModel(0, 13.99)), "laplace(mu=0,b=13.99)");
    EXPECT_EQ(describe(EmpiricalDistribution({1.0, 2.0})), "empirical(n=2)");
}

TEST(Quadrature, SmoothAndKinked) {
    EXPECT_NEAR(integrate([](double x) { return std::sin(x); }, 0, M_PI), 2.0, 1e-13);
    EXPECT_NEAR(integrate([](double x) { return std::exp(-x); }, 0, INFINITY), 1.0, 1e-13);
    EXPECT_NEAR(integrate([](double x) { return std::abs(x - 0.3); }, -1, 1, {0.3}),
                0.5 * (1.3 * 1.3 + 0.7 * 0.7), 1e-14);
    EXPECT_NEAR(integrate([](double x) { return std::exp(-std::abs(x)); }, -INFINITY, INFINITY,
                          {0.0}),
                2.0, 1e-13);
    EXPECT_EQ(integrate([](double) { return 1.0; }, 2, 2), 0.0);
}
