#include "hydrosense/numcore.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace {

using namespace hydrosense;

Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(rows.size(), rows.begin()->size());
    std::size_t r = 0;
    for (const auto& row : rows) {
        std::size_t c = 0;
        for (double v : row) m(r, c++) = v;
        ++r;
    }
    return m;
}

TEST(Matvec, IdentityReturnsInput) {
    const Matrix I = from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
    EXPECT_EQ(matvec(I, Vector{1, 2, 3}), (Vector{1, 2, 3}));
}

TEST(Matvec, ZeroMatrixAnnihilates) {
    const Matrix Z(2, 4);
    EXPECT_EQ(matvec(Z, Vector{3, -1, 7, 2}), (Vector{0, 0}));
}

TEST(Matvec, HandComputedProduct) {
    const Matrix W = from_rows({{1, 2}, {3, 4}});
    EXPECT_EQ(matvec(W, Vector{5, 6}), (Vector{17, 39}));
}

TEST(Matvec, DimensionMismatchIsContractViolation) {
    const Matrix W(2, 3);
    EXPECT_THROW(matvec(W, Vector{1, 2}), ContractViolation);
}

TEST(Matvec, IsLinear) {
    std::mt19937_64 gen(11);
    std::normal_distribution<double> d;
    for (int trial = 0; trial < 50; ++trial) {
        Matrix W(7, 5);
        for (double& v : W.flat()) v = d(gen);
        Vector x(5), y(5), mix(5);
        const double a = d(gen), b = d(gen);
        for (std::size_t k = 0; k < 5; ++k) {
            x[k] = d(gen);
            y[k] = d(gen);
            mix[k] = a * x[k] + b * y[k];
        }
        const Vector lhs = matvec(W, mix);
        const Vector wx = matvec(W, x), wy = matvec(W, y);
        for (std::size_t r = 0; r < 7; ++r) {
            const double rhs = a * wx[r] + b * wy[r];
            EXPECT_LE(std::abs(lhs[r] - rhs), 1e-12 * std::max(1.0, std::abs(rhs)));
        }
    }
}

TEST(Matvec, TransposeAndOuterAgreeWithLoops) {
    const Matrix W = from_rows({{1, 2, 3}, {4, 5, 6}});
    Vector out(3, 1.0);
    matTvec_acc(W, Vector{1, -1}, out);
    EXPECT_EQ(out, (Vector{1 - 3, 1 - 3, 1 - 3}));

    Matrix A(2, 3);
    add_outer(A, Vector{1, 2}, Vector{3, 4, 5});
    EXPECT_EQ(A, from_rows({{3, 4, 5}, {6, 8, 10}}));
    EXPECT_DOUBLE_EQ(dot(Vector{1, 2, 3}, Vector{4, 5, 6}), 32.0);
}

TEST(Sigmoid, SymmetryPointAndReflection) {
    EXPECT_EQ(sigmoid(0.0), 0.5);
    for (double x : {0.3, 2.0, 7.5}) EXPECT_NEAR(sigmoid(-x), 1.0 - sigmoid(x), 1e-15);
}

TEST(Sigmoid, StaysInsideOpenIntervalForModerateInputs) {
    for (double x = -30.0; x <= 30.0; x += 0.25) {
        const double y = sigmoid(x);
        EXPECT_GT(y, 0.0);
        EXPECT_LT(y, 1.0);
    }
    EXPECT_EQ(sigmoid(1000.0), 1.0);
    EXPECT_TRUE(std::isfinite(sigmoid(-1000.0)));
}

TEST(Sigmoid, DerivativeMatchesCentralDifference) {
    const double x = 0.7, h = 1e-6;
    const double fd = (sigmoid(x + h) - sigmoid(x - h)) / (2 * h);
    const double an = dsigmoid(Vector{sigmoid(x)})[0];
    EXPECT_LT(std::abs(an - fd) / std::abs(fd), 1e-7);
}

TEST(Tanh, OddnessAndDerivative) {
    EXPECT_EQ(tanh_s(0.0), 0.0);
    for (double x : {0.5, 3.0}) EXPECT_EQ(tanh_s(-x), -tanh_s(x));
    const double x = 1.2, h = 1e-6;
    const double fd = (tanh_s(x + h) - tanh_s(x - h)) / (2 * h);
    const double an = dtanh(Vector{tanh_s(x)})[0];
    EXPECT_LT(std::abs(an - fd) / std::abs(fd), 1e-7);
}

TEST(Nonlinearities, DerivativeHelpersMatchFiniteDifferencesOnAGrid) {
    const double h = 1e-6;
    for (double x = -4.0; x <= 4.0; x += 0.37) {
        const double fs = (sigmoid(x + h) - sigmoid(x - h)) / (2 * h);
        const double ft = (tanh_s(x + h) - tanh_s(x - h)) / (2 * h);
        EXPECT_LT(std::abs(dsigmoid(Vector{sigmoid(x)})[0] - fs) / fs, 1e-6) << x;
        EXPECT_LT(std::abs(dtanh(Vector{tanh_s(x)})[0] - ft) / ft, 1e-6) << x;
    }
}

TEST(Reductions, PopulationStatistics) {
    const Vector v{2, 4, 4, 4, 5, 5, 7, 9};
    EXPECT_EQ(sum(v), 40.0);
    EXPECT_EQ(mean(v), 5.0);
    EXPECT_EQ(stddev(v), 2.0);
    EXPECT_TRUE(all_finite(v));
    EXPECT_FALSE(all_finite(Vector{1.0, NAN}));
}

TEST(Rng, SameSeedIsBitwiseIdentical) {
    EXPECT_EQ(rng_uniform(42, -1.0, 3.0, 1000), rng_uniform(42, -1.0, 3.0, 1000));
    EXPECT_NE(rng_uniform(42, 0.0, 1.0, 10), rng_uniform(43, 0.0, 1.0, 10));
}

TEST(Rng, EmptyAndInvalidRanges) {
    EXPECT_TRUE(rng_uniform(1, 0.0, 1.0, 0).empty());
    EXPECT_THROW(rng_uniform(1, 1.0, 1.0, 5), ContractViolation);
    EXPECT_THROW(rng_uniform(1, 2.0, 1.0, 5), ContractViolation);
}

TEST(Rng, ValuesStayInHalfOpenInterval) {
    for (double v : rng_uniform(9, 2.0, 2.5, 20000)) {
        EXPECT_GE(v, 2.0);
        EXPECT_LT(v, 2.5);
    }
}

TEST(Rng, SampleMeanOfUnitUniform) {
    const Vector v = rng_uniform(2024, 0.0, 1.0, 100000);
    EXPECT_NEAR(mean(v), 0.5, 0.01);
}

TEST(Rng, NormalAndExponentialMoments) {
    Rng rng(5);
    Vector n(50000), e(50000);
    for (auto& x : n) x = rng.normal();
    for (auto& x : e) x = rng.exponential(3.0);
    EXPECT_NEAR(mean(n), 0.0, 0.02);
    EXPECT_NEAR(stddev(n), 1.0, 0.02);
    EXPECT_NEAR(mean(e), 3.0, 0.06);
}

// The documented algorithm: mt19937_64, top 53 bits scaled to [0,1).
TEST(Rng, UniformUsesTop53BitsOfTheEngine) {
    std::mt19937_64 eng(77);
    Rng rng(77);
    for (int k = 0; k < 100; ++k) {
        const double expect = static_cast<double>(eng() >> 11) * 0x1.0p-53;
        EXPECT_EQ(rng.uniform(), expect);
    }
}

TEST(Rng, MixSeedSeparatesStreams) {
    EXPECT_NE(mix_seed(1, 0), mix_seed(1, 1));
    EXPECT_NE(mix_seed(1, 0), mix_seed(2, 0));
    EXPECT_EQ(mix_seed(7, 3), mix_seed(7, 3));
}

}  // namespace
