#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace shadowspec {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Relative singularity threshold: an operator counts as invertible when its
/// smallest singular value exceeds this factor times the largest one.
inline constexpr double kDefaultSingularTol = 1e-12;

/// Tolerance on | |lambda| - 1 | for a scalar to count as unimodular.
inline constexpr double kUnimodularTol = 1e-12;

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class SingularOperatorError : public std::runtime_error {
public:
    SingularOperatorError(const std::string& what, double min_singular)
        : std::runtime_error(what), min_singular_(min_singular) {}
    double min_singular() const noexcept { return min_singular_; }

private:
    double min_singular_;
};

class NotUnimodularError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Max-entry norm, the norm used for all entrywise residual checks.
double max_entry(const Matrix& m);

/// Spectral (operator 2-) norm.
double operator_norm(const Matrix& m);
/// Singular values in decreasing order (one-sided Jacobi for small matrices,
/// divide and conquer otherwise).
Eigen::VectorXd singular_values(const Matrix& m);

void require_unimodular(Complex lambda);

/// A finite-dimensional operator stored as a dense complex matrix.
class DenseOperator {
public:
    explicit DenseOperator(Matrix entries);

    static DenseOperator identity(Eigen::Index dim);
    static DenseOperator diagonal(const std::vector<Complex>& diag);

    Eigen::Index dim() const noexcept { return entries_.rows(); }
    const Matrix& matrix() const noexcept { return entries_; }

    Vector apply(const Vector& v) const;
    DenseOperator adjoint() const;

    /// Throws SingularOperatorError when sigma_min <= rel_tol * sigma_max.
    DenseOperator inverse(double rel_tol = kDefaultSingularTol) const;
    bool is_invertible(double rel_tol = kDefaultSingularTol) const;

    /// A^n for any integer n; negative powers go through inverse().
    DenseOperator power(int n) const;

    /// lambda^{-1} * A for unimodular lambda.
    DenseOperator rotate(Complex lambda) const;

private:
    Matrix entries_;
};

/// Finitely supported vector in l2(Z) with respect to the basis (e_n).
class SupportedVector {
public:
    SupportedVector() = default;
    explicit SupportedVector(std::map<std::int64_t, Complex> coefficients);

    static SupportedVector basis(std::int64_t index, Complex value = 1.0);

    Complex operator[](std::int64_t index) const;
    void set(std::int64_t index, Complex value);
    const std::map<std::int64_t, Complex>& coefficients() const noexcept { return coeffs_; }

    double norm() const;
    /// Coordinates on indices -half_width..half_width; entries outside are dropped.
    Vector window(std::int64_t half_width) const;
    static SupportedVector from_window(const Vector& v, std::int64_t half_width);

    SupportedVector operator+(const SupportedVector& other) const;
    SupportedVector operator-(const SupportedVector& other) const;
    SupportedVector operator*(Complex s) const;

private:
    std::map<std::int64_t, Complex> coeffs_;
};

enum class ShiftDirection { forward, backward };

/// Bilateral weighted shift with two-sided-constant weights.
///
/// forward:  e_n -> phase * w(n) e_{n+1}, w(n) = weight_pos for n >= crossover,
///           weight_neg for n < crossover.
/// backward: e_n -> phase * w(n) e_{n-1}, w(n) = weight_pos for n > crossover,
///           weight_neg for n <= crossover.
///
/// With these conventions the adjoint of a forward shift is the backward
/// shift with the same weights and crossover (and conjugated phase).
struct ShiftOperator {
    ShiftDirection direction = ShiftDirection::forward;
    double weight_pos = 1.0;
    double weight_neg = 1.0;
    std::int64_t crossover = 0;
    Complex phase = 1.0;

    ShiftOperator() = default;
    ShiftOperator(ShiftDirection dir, double w_pos, double w_neg, std::int64_t cross = 0,
                  Complex ph = 1.0);

    /// Weight applied to e_n.
    double weight(std::int64_t n) const;
    std::int64_t step() const noexcept { return direction == ShiftDirection::forward ? 1 : -1; }

    SupportedVector apply(const SupportedVector& v) const;
    ShiftOperator adjoint() const;
    ShiftOperator inverse() const;
    ShiftOperator rotate(Complex lambda) const;

    /// Matrix of the shift on indices -N..N. The image of the edge basis
    /// vector that leaves the window is dropped.
    DenseOperator materialize(std::int64_t half_width) const;

    bool operator==(const ShiftOperator&) const = default;
};

/// Weights 2*sqrt(2) and 1/(2*sqrt(2)) on either side of index 0.
ShiftOperator eisenberg_hedlund_forward();
ShiftOperator eisenberg_hedlund_backward();

using Operator = std::variant<DenseOperator, ShiftOperator>;

Operator adjoint(const Operator& op);
Operator rotate(const Operator& op, Complex lambda);
bool is_dense(const Operator& op);

}  // namespace shadowspec
