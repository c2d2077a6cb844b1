#include <gtest/gtest.h>

#include <cmath>

#include "random_ops.hpp"
#include "shadowspec/projector.hpp"
#include "shadowspec/spectral.hpp"

namespace shadowspec {
namespace {

using testing::Rng;

const DenseOperator kSplit = DenseOperator::diagonal({2.0, 0.5});

Matrix diag2(Complex a, Complex b) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

TEST(ContourConfig, Validation) {
    EXPECT_NO_THROW((ContourConfig{1.0, 16}.validate()));
    EXPECT_THROW((ContourConfig{1.0, 8}.validate()), std::invalid_argument);
    EXPECT_THROW((ContourConfig{1.0, 100}.validate()), std::invalid_argument);
    EXPECT_THROW((ContourConfig{0.0, 256}.validate()), std::invalid_argument);
}

TEST(Resolvent, Scalar) {
    EXPECT_NEAR(std::abs(resolvent(DenseOperator::diagonal({2.0}), 1.0).matrix()(0, 0) + 1.0), 0.0,
                1e-15);
}

TEST(Resolvent, ZeroOperatorGivesInverseLambda) {
    const DenseOperator zero(Matrix::Zero(3, 3));
    EXPECT_LT(max_entry(resolvent(zero, 1.0).matrix() - Matrix::Identity(3, 3)), 1e-15);
}

TEST(Resolvent, NeumannSeries) {
    Rng rng(51);
    const Matrix a = testing::random_matrix(4, 4, rng);
    const Complex lambda = 3.0 * operator_norm(a);
    Matrix sum = Matrix::Zero(4, 4);
    Matrix term = Matrix::Identity(4, 4) / lambda;
    for (int k = 0; k < 60; ++k) {
        sum += term;
        term = a * term / lambda;
    }
    EXPECT_LT(max_entry(resolvent(DenseOperator(a), lambda).matrix() - sum), 1e-8);
}

TEST(Resolvent, NearSpectrumThrows) {
    EXPECT_THROW(resolvent(kSplit, 2.0), NearSingularResolventError);
}

TEST(CheckContour, RejectsEigenvalueOnCircle) {
    try {
        check_contour(DenseOperator::diagonal({1.0, 3.0}), ContourConfig{});
        FAIL() << "expected ContourError";
    } catch (const ContourError& e) {
        EXPECT_LT(e.distance(), 1e-14);
    }
    EXPECT_NEAR(check_contour(kSplit, ContourConfig{}), 0.5, 1e-15);
}

TEST(LaurentCoefficient, SplitDiagonalClosedForms) {
    // 1/(l - 2) = -sum_{n>=0} l^n / 2^{n+1},  1/(l - 1/2) = sum_{n>=1} 2^{-(n-1)} l^{-n}
    for (int n = -5; n <= 5; ++n) {
        const Complex first = n >= 0 ? -std::pow(2.0, -n - 1) : 0.0;
        const Complex second = n <= -1 ? std::pow(2.0, n + 1) : 0.0;
        const QuadratureResult q = laurent_coefficient(kSplit, n);
        EXPECT_LT(max_entry(q.coefficient.matrix() - diag2(first, second)), 1e-13) << "n = " << n;
        EXPECT_EQ(q.nodes, 256);
        EXPECT_LT(q.doubling_change, 1e-13);
    }
}

TEST(LaurentCoefficient, IndexRange) {
    EXPECT_THROW(laurent_coefficient(kSplit, 65), std::invalid_argument);
}

TEST(LaurentCoefficient, MatchesEigenprojector) {
    Rng rng(52);
    for (int t = 0; t < 10; ++t) {
        const DenseOperator a = testing::random_hyperbolic(4, rng);
        const Matrix c = laurent_coefficient(a, -1, testing::unit_contour(a)).coefficient.matrix();
        EXPECT_LT(max_entry(c - testing::eigenprojector_inside(a)), 1e-8);
    }
}

TEST(LaurentCoefficient, RadiusIndependentInsideGap) {
    Rng rng(53);
    for (int t = 0; t < 5; ++t) {
        const DenseOperator a = testing::random_hyperbolic(3, rng, 0.1);
        for (int n = -4; n <= 4; ++n) {
            const Matrix in = laurent_coefficient(a, n, ContourConfig{0.999, 1024}).coefficient.matrix();
            const Matrix out = laurent_coefficient(a, n, ContourConfig{1.001, 1024}).coefficient.matrix();
            EXPECT_LT(max_entry(in - out), 1e-8);
        }
    }
}

TEST(LaurentCoefficient, NodeDoublingConverges) {
    Rng rng(54);
    for (int t = 0; t < 5; ++t) {
        const DenseOperator a = testing::random_hyperbolic(4, rng, 0.1);
        for (int n = -8; n <= 8; ++n) {
            const Matrix c256 = laurent_coefficient(a, n, ContourConfig{1.0, 256}).coefficient.matrix();
            const Matrix c512 = laurent_coefficient(a, n, ContourConfig{1.0, 512}).coefficient.matrix();
            EXPECT_LT(max_entry(c256 - c512), 1e-9);
        }
    }
}

TEST(RecommendedNodes, PowerOfTwoAndMonotone) {
    EXPECT_EQ(recommended_nodes(0.5), 256);
    int prev = 0;
    for (double gap : {1.0, 0.3, 0.1, 0.03, 0.01, 1e-3}) {
        const int n = recommended_nodes(gap);
        EXPECT_EQ(n & (n - 1), 0);
        EXPECT_GE(n, prev);
        prev = n;
    }
}

TEST(RieszProjector, SplitDiagonal) {
    EXPECT_LT(max_entry(riesz_projector(kSplit).matrix() - diag2(0.0, 1.0)), 1e-10);
}

TEST(RieszProjector, AllOutsideGivesZero) {
    const auto a = DenseOperator::diagonal({2.0, Complex(0.0, -3.0), -1.5});
    EXPECT_LT(max_entry(riesz_projector(a).matrix()), 1e-13);
}

TEST(RieszProjector, SimilarityOracle) {
    Rng rng(55);
    for (int t = 0; t < 10; ++t) {
        const Matrix v = testing::random_matrix(2, 2, rng) + 2.0 * Matrix::Identity(2, 2);
        const DenseOperator a(v * diag2(3.0, 1.0 / 3.0) * v.inverse());
        const Matrix expected = v * diag2(0.0, 1.0) * v.inverse();
        EXPECT_LT(max_entry(riesz_projector(a).matrix() - expected), 1e-8);
    }
}

TEST(RieszProjector, IdempotentCommutingTraceCount) {
    Rng rng(56);
    for (int t = 0; t < 20; ++t) {
        const int n = testing::random_dim(rng, 2, 6);
        const DenseOperator a = testing::random_hyperbolic(n, rng, 0.05);
        const Matrix p = riesz_projector(a, testing::unit_contour(a)).matrix();
        EXPECT_LT(max_entry(p * p - p), 1e-8);
        EXPECT_LT(max_entry(p * a.matrix() - a.matrix() * p), 1e-8);
        int inside = 0;
        for (Complex z : eigenvalues(a)) inside += std::abs(z) < 1.0;
        EXPECT_NEAR(p.trace().real(), inside, 1e-6);
        EXPECT_NEAR(p.trace().imag(), 0.0, 1e-6);
        EXPECT_TRUE(is_commuting_projector(a, DenseOperator(p)));
    }
}

TEST(DecayRates, SplitDiagonalApproachesHalf) {
    const DenseOperator b(diag2(0.0, 1.0));
    const DecayRates r = decay_rates(kSplit, b, 64);
    EXPECT_NEAR(r.r_plus, 0.5, 1e-12);
    EXPECT_NEAR(r.r_minus, 0.5, 1e-12);
    EXPECT_TRUE(r.projected);
    EXPECT_TRUE(r.certified());
    EXPECT_EQ(r.n_max, 64);
}

TEST(DecayRates, RieszSplittingDecays) {
    Rng rng(57);
    for (int t = 0; t < 10; ++t) {
        const DenseOperator a = testing::random_hyperbolic(4, rng);
        const DecayRates r = decay_rates(a, riesz_projector(a, testing::unit_contour(a)), 64);
        EXPECT_LT(r.r_plus, 1.0);
        EXPECT_LT(r.r_minus, 1.0);
    }
}

TEST(DecayRates, BadSplittingIsNotCertified) {
    const DecayRates r = decay_rates(kSplit, DenseOperator::identity(2), 32);
    EXPECT_GE(r.r_plus, 1.0);
    EXPECT_FALSE(r.certified());
    EXPECT_THROW(decay_rates(kSplit, DenseOperator::identity(2), 4), std::invalid_argument);
}

TEST(DecayRates, RateWithinRoundingOfOneIsNotCertified) {
    DecayRates r;
    r.r_plus = 1.0 - 1e-16;
    r.r_minus = 0.5;
    EXPECT_FALSE(r.certified());
}

TEST(SplitPowers, MatchDirectPowers) {
    const DenseOperator b(diag2(0.0, 1.0));
    const SplitPowers sp = split_powers(kSplit, b, 6);
    ASSERT_EQ(sp.forward.size(), 6u);
    for (int k = 0; k < 6; ++k) {
        EXPECT_LT(max_entry(sp.forward[k] - diag2(0.0, std::pow(0.5, k))), 1e-15);
        EXPECT_LT(max_entry(sp.backward[k] - diag2(std::pow(0.5, k), 0.0)), 1e-15);
    }
}

TEST(LaurentTable, SplitDiagonalRelations) {
    const LaurentTable t = laurent_table(kSplit, 4);
    EXPECT_EQ(t.coefficients.size(), 9u);
    const LaurentRelations rel = verify_laurent_relations(kSplit, t, 1e-10);
    EXPECT_TRUE(rel.pass);
    EXPECT_LT(rel.c0_residual, 1e-10);
    EXPECT_LT(max_entry(t.at(0) - diag2(-0.5, 0.0)), 1e-13);
}

TEST(LaurentTable, FirstStepRecurrence) {
    Rng rng(58);
    const DenseOperator a = testing::random_hyperbolic(3, rng);
    const LaurentTable t = laurent_table(a, 3, testing::unit_contour(a));
    EXPECT_LT(max_entry(t.at(1) - a.inverse().matrix() * t.at(0)), 1e-9);
}

TEST(LaurentTable, RandomHyperbolicRelations) {
    Rng rng(59);
    for (int t = 0; t < 10; ++t) {
        const DenseOperator a = testing::random_hyperbolic(5, rng);
        const LaurentTable table = laurent_table(a, 6, testing::unit_contour(a));
        const LaurentRelations rel = verify_laurent_relations(a, table);
        EXPECT_TRUE(rel.pass) << rel.c0_residual << " " << rel.positive_residual << " "
                              << rel.negative_residual;
        EXPECT_TRUE(table.decay.certified());
    }
}

TEST(LaurentTable, NeedsThreeTerms) {
    const LaurentTable t = laurent_table(kSplit, 2);
    EXPECT_THROW(verify_laurent_relations(kSplit, t), std::invalid_argument);
}

}  // namespace
}  // namespace shadowspec
