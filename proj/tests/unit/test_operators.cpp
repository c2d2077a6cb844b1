#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "random_ops.hpp"
#include "shadowspec/operators.hpp"
#include "shadowspec/spectral.hpp"

namespace shadowspec {
namespace {

using testing::Rng;

const double kW = 2.0 * std::numbers::sqrt2;

TEST(DenseOperator, RejectsNonSquareAndNonFinite) {
    EXPECT_THROW(DenseOperator(Matrix(2, 3)), DimensionError);
    EXPECT_THROW(DenseOperator(Matrix(0, 0)), DimensionError);
    Matrix m = Matrix::Identity(2, 2);
    m(0, 1) = Complex(std::nan(""), 0.0);
    EXPECT_THROW(DenseOperator{m}, std::invalid_argument);
}

TEST(DenseOperator, IdentityAppliesTrivially) {
    Rng rng(3);
    const Vector v = testing::random_vector(5, rng);
    EXPECT_EQ(DenseOperator::identity(5).apply(v), v);
    EXPECT_THROW(DenseOperator::identity(4).apply(v), DimensionError);
}

TEST(DenseOperator, AdjointOfDiagonal) {
    const auto a = DenseOperator::diagonal({Complex(0.0, 2.0)});
    EXPECT_EQ(a.adjoint().matrix()(0, 0), Complex(0.0, -2.0));
}

TEST(DenseOperator, AdjointMatchesInnerProduct) {
    Rng rng(11);
    const DenseOperator a(testing::random_matrix(4, 4, rng));
    const DenseOperator b = a.adjoint();
    for (int i = 0; i < 100; ++i) {
        const Vector x = testing::random_vector(4, rng);
        const Vector y = testing::random_vector(4, rng);
        // <Ax, y> = y^* A x
        EXPECT_LT(std::abs(y.dot(a.apply(x)) - b.apply(y).dot(x)), 1e-12);
    }
}

TEST(DenseOperator, DoubleAdjointIsIdentity) {
    Rng rng(12);
    const DenseOperator a(testing::random_matrix(5, 5, rng));
    EXPECT_LT(max_entry(a.adjoint().adjoint().matrix() - a.matrix()), 1e-14);
}

TEST(DenseOperator, InverseOfDiagonal) {
    const auto inv = DenseOperator::diagonal({2.0, 0.5}).inverse();
    EXPECT_LT(max_entry(inv.matrix() - DenseOperator::diagonal({0.5, 2.0}).matrix()), 1e-15);
    EXPECT_EQ(DenseOperator::identity(3).inverse().matrix(), Matrix::Identity(3, 3));
}

TEST(DenseOperator, InverseResidual) {
    Rng rng(21);
    for (int t = 0; t < 20; ++t) {
        Matrix m = testing::random_matrix(6, 6, rng);
        m += 6.0 * Matrix::Identity(6, 6);  // diagonally dominant, well conditioned
        const DenseOperator a(m);
        EXPECT_LT(max_entry(a.matrix() * a.inverse().matrix() - Matrix::Identity(6, 6)), 1e-10);
        const Vector v = testing::random_vector(6, rng);
        EXPECT_LT((a.inverse().apply(a.apply(v)) - v).norm(), 1e-9 * v.norm());
    }
}

TEST(DenseOperator, SingularInverseThrows) {
    Matrix m = Matrix::Identity(3, 3);
    m(2, 2) = 0.0;
    const DenseOperator a(m);
    EXPECT_FALSE(a.is_invertible());
    try {
        (void)a.inverse();
        FAIL() << "expected SingularOperatorError";
    } catch (const SingularOperatorError& e) {
        EXPECT_EQ(e.min_singular(), 0.0);
    }
}

TEST(DenseOperator, PowersAgreeWithRepeatedProducts) {
    Rng rng(5);
    Matrix m = testing::random_matrix(3, 3, rng) + 3.0 * Matrix::Identity(3, 3);
    const DenseOperator a(m);
    EXPECT_LT(max_entry(a.power(3).matrix() - m * m * m), 1e-10 * max_entry(m * m * m));
    EXPECT_LT(max_entry(a.power(-2).matrix() * m * m - Matrix::Identity(3, 3)), 1e-10);
    EXPECT_EQ(a.power(0).matrix(), Matrix::Identity(3, 3));
}

TEST(DenseOperator, RotateDividesByLambda) {
    EXPECT_EQ(DenseOperator::diagonal({2.0}).rotate(-1.0).matrix()(0, 0), Complex(-2.0));
    EXPECT_THROW(DenseOperator::identity(2).rotate(2.0), NotUnimodularError);
}

TEST(DenseOperator, RotateScalesSpectrum) {
    Rng rng(7);
    const DenseOperator a(testing::random_matrix(4, 4, rng));
    const Complex i(0.0, 1.0);
    std::vector<Complex> expected;
    for (Complex z : eigenvalues(a)) expected.push_back(-i * z);
    EXPECT_LT(multiset_distance(eigenvalues(a.rotate(i)), expected), 1e-10);
}

TEST(SingularValues, MatchGramEigenvalues) {
    Rng rng(8);
    for (int n : {3, 40}) {
        const Matrix m = testing::random_matrix(n, n, rng);
        const Eigen::VectorXd sv = singular_values(m);
        Eigen::SelfAdjointEigenSolver<Matrix> es(m.adjoint() * m);
        const Eigen::VectorXd gram = es.eigenvalues().reverse().cwiseMax(0.0).cwiseSqrt();
        EXPECT_LT((sv - gram).cwiseAbs().maxCoeff(), 1e-9 * sv(0)) << "n = " << n;
        EXPECT_NEAR(operator_norm(m), sv(0), 1e-12 * sv(0));
    }
}

TEST(SupportedVector, NormAndArithmetic) {
    SupportedVector v({{-2, 3.0}, {5, Complex(0.0, 4.0)}});
    EXPECT_DOUBLE_EQ(v.norm(), 5.0);
    EXPECT_EQ(v[0], Complex{});
    const SupportedVector w = v - v;
    EXPECT_DOUBLE_EQ(w.norm(), 0.0);
    EXPECT_EQ((v * 2.0)[5], Complex(0.0, 8.0));
}

TEST(SupportedVector, WindowRoundTrip) {
    SupportedVector v({{-1, 1.0}, {2, 2.0}, {7, 9.0}});
    const Vector w = v.window(3);
    ASSERT_EQ(w.size(), 7);
    EXPECT_EQ(w(2), Complex(1.0));
    EXPECT_EQ(w(5), Complex(2.0));
    const SupportedVector back = SupportedVector::from_window(w, 3);
    EXPECT_EQ(back[7], Complex{});
    EXPECT_EQ(back[2], Complex(2.0));
    EXPECT_THROW(SupportedVector::from_window(w, 2), DimensionError);
}

TEST(ShiftOperator, RejectsBadWeights) {
    EXPECT_THROW(ShiftOperator(ShiftDirection::forward, 0.0, 1.0), std::invalid_argument);
    EXPECT_THROW(ShiftOperator(ShiftDirection::forward, 1.0, -2.0), std::invalid_argument);
    EXPECT_THROW(ShiftOperator(ShiftDirection::forward, 1.0, 1.0, 0, 2.0), NotUnimodularError);
}

TEST(ShiftOperator, ForwardShiftOfBasisVector) {
    const ShiftOperator t = eisenberg_hedlund_forward();
    const SupportedVector out = t.apply(SupportedVector::basis(0));
    EXPECT_NEAR(std::abs(out[1] - kW), 0.0, 1e-15);
    EXPECT_EQ(out.coefficients().size(), 1u);
    EXPECT_NEAR(std::abs(t.apply(SupportedVector::basis(-1))[0] - 1.0 / kW), 0.0, 1e-15);
}

TEST(ShiftOperator, BackwardShiftAgreesWithMaterializedWindow) {
    const ShiftOperator s = eisenberg_hedlund_backward();
    const SupportedVector out = s.apply(SupportedVector::basis(1));
    EXPECT_NEAR(std::abs(out[0] - kW), 0.0, 1e-15);
    const Vector via_matrix = s.materialize(4).apply(SupportedVector::basis(1).window(4));
    EXPECT_LT((via_matrix - out.window(4)).norm(), 1e-15);
}

TEST(ShiftOperator, MaterializeSmallWindows) {
    const Matrix m = eisenberg_hedlund_forward().materialize(1).matrix();
    Matrix expected = Matrix::Zero(3, 3);
    expected(1, 0) = 1.0 / kW;
    expected(2, 1) = kW;
    EXPECT_LT(max_entry(m - expected), 1e-15);

    const Matrix plain = ShiftOperator(ShiftDirection::forward, 1.0, 1.0).materialize(1).matrix();
    Matrix sub = Matrix::Zero(3, 3);
    sub(1, 0) = 1.0;
    sub(2, 1) = 1.0;
    EXPECT_EQ(plain, sub);
}

TEST(ShiftOperator, MaterializeMatchesApplyOnInteriorVectors) {
    Rng rng(31);
    const ShiftOperator s = eisenberg_hedlund_backward();
    for (int t = 0; t < 10; ++t) {
        const Vector coords = testing::random_vector(31, rng);  // indices -15..15
        const SupportedVector v = SupportedVector::from_window(coords, 15);
        const Vector direct = s.apply(v).window(20);
        const Vector windowed = s.materialize(20).apply(v.window(20));
        EXPECT_LT((direct - windowed).norm(), 1e-13);
    }
}

TEST(ShiftOperator, AdjointRelations) {
    const ShiftOperator t = eisenberg_hedlund_forward();
    EXPECT_EQ(t.adjoint(), eisenberg_hedlund_backward());
    EXPECT_EQ(t.adjoint().adjoint(), t);
    const ShiftOperator r(ShiftDirection::forward, 3.0, 0.25, 2, std::polar(1.0, 0.3));
    EXPECT_EQ(r.adjoint().adjoint(), r);
    // materialize commutes with adjoint on the window
    const Matrix lhs = r.materialize(6).adjoint().matrix();
    const Matrix rhs = r.adjoint().materialize(6).matrix();
    EXPECT_LT(max_entry(lhs - rhs), 1e-15);
}

TEST(ShiftOperator, InverseUndoesApply) {
    const ShiftOperator r(ShiftDirection::backward, 3.0, 0.25, -1, std::polar(1.0, 1.1));
    const SupportedVector v({{-3, 1.0}, {0, Complex(2.0, -1.0)}, {4, 0.5}});
    EXPECT_LT((r.inverse().apply(r.apply(v)) - v).norm(), 1e-14);
    EXPECT_LT((r.apply(r.inverse().apply(v)) - v).norm(), 1e-14);
}

TEST(ShiftOperator, RotateByOneIsIdentity) {
    const ShiftOperator t = eisenberg_hedlund_forward();
    EXPECT_EQ(t.rotate(1.0), t);
    const Complex lambda = std::polar(1.0, 0.7);
    const SupportedVector v = SupportedVector::basis(2, 1.5);
    EXPECT_LT((t.rotate(lambda).apply(v) - t.apply(v) * (1.0 / lambda)).norm(), 1e-15);
}

TEST(OperatorVariant, DispatchesByKind) {
    const Operator t = eisenberg_hedlund_forward();
    EXPECT_FALSE(is_dense(t));
    EXPECT_EQ(std::get<ShiftOperator>(adjoint(t)), eisenberg_hedlund_backward());
    const Operator d = DenseOperator::diagonal({2.0});
    EXPECT_TRUE(is_dense(d));
    EXPECT_EQ(std::get<DenseOperator>(rotate(d, -1.0)).matrix()(0, 0), Complex(-2.0));
}

}  // namespace
}  // namespace shadowspec
