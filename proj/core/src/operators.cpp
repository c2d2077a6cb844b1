#include "shadowspec/operators.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace shadowspec {

double max_entry(const Matrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

Eigen::VectorXd singular_values(const Matrix& m) {
    if (std::min(m.rows(), m.cols()) <= 32) return Eigen::JacobiSVD<Matrix>(m).singularValues();
    return Eigen::BDCSVD<Matrix>(m).singularValues();
}

double operator_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    if (m.cols() == 1) return m.norm();
    return singular_values(m)(0);
}

void require_unimodular(Complex lambda) {
    if (!(std::abs(std::abs(lambda) - 1.0) < kUnimodularTol)) {
        std::ostringstream os;
        os << "lambda is not unimodular: |lambda| = " << std::abs(lambda);
        throw NotUnimodularError(os.str());
    }
}

// ---------------------------------------------------------------------------
// DenseOperator

DenseOperator::DenseOperator(Matrix entries) : entries_(std::move(entries)) {
    if (entries_.rows() < 1 || entries_.rows() != entries_.cols())
        throw DimensionError("dense operator must be square with dim >= 1");
    if (!entries_.allFinite()) throw std::invalid_argument("dense operator has non-finite entries");
}

DenseOperator DenseOperator::identity(Eigen::Index dim) {
    return DenseOperator(Matrix::Identity(dim, dim));
}

DenseOperator DenseOperator::diagonal(const std::vector<Complex>& diag) {
    Vector d(static_cast<Eigen::Index>(diag.size()));
    for (std::size_t i = 0; i < diag.size(); ++i) d(static_cast<Eigen::Index>(i)) = diag[i];
    return DenseOperator(d.asDiagonal().toDenseMatrix());
}

Vector DenseOperator::apply(const Vector& v) const {
    if (v.size() != dim()) {
        std::ostringstream os;
        os << "vector length " << v.size() << " does not match operator dim " << dim();
        throw DimensionError(os.str());
    }
    return entries_ * v;
}

DenseOperator DenseOperator::adjoint() const { return DenseOperator(entries_.adjoint()); }

bool DenseOperator::is_invertible(double rel_tol) const {
    const Eigen::VectorXd s = singular_values(entries_);
    return s(s.size() - 1) > rel_tol * s(0);
}

DenseOperator DenseOperator::inverse(double rel_tol) const {
    const Eigen::VectorXd s = singular_values(entries_);
    const double smin = s(s.size() - 1);
    if (!(smin > rel_tol * s(0))) {
        std::ostringstream os;
        os << "operator is singular: sigma_min = " << smin << ", sigma_max = " << s(0);
        throw SingularOperatorError(os.str(), smin);
    }
    return DenseOperator(entries_.fullPivLu().inverse());
}

DenseOperator DenseOperator::power(int n) const {
    Matrix base = n >= 0 ? entries_ : inverse().matrix();
    unsigned k = static_cast<unsigned>(n >= 0 ? n : -n);
    Matrix result = Matrix::Identity(dim(), dim());
    while (k > 0) {
        if (k & 1u) result = result * base;
        k >>= 1;
        if (k > 0) base = base * base;
    }
    return DenseOperator(std::move(result));
}

DenseOperator DenseOperator::rotate(Complex lambda) const {
    require_unimodular(lambda);
    return DenseOperator(entries_ / lambda);
}

// ---------------------------------------------------------------------------
// SupportedVector

SupportedVector::SupportedVector(std::map<std::int64_t, Complex> coefficients)
    : coeffs_(std::move(coefficients)) {}

SupportedVector SupportedVector::basis(std::int64_t index, Complex value) {
    return SupportedVector({{index, value}});
}

Complex SupportedVector::operator[](std::int64_t index) const {
    auto it = coeffs_.find(index);
    return it == coeffs_.end() ? Complex{} : it->second;
}

void SupportedVector::set(std::int64_t index, Complex value) { coeffs_[index] = value; }

double SupportedVector::norm() const {
    double s = 0.0;
    for (const auto& [_, c] : coeffs_) s += std::norm(c);
    return std::sqrt(s);
}

Vector SupportedVector::window(std::int64_t half_width) const {
    Vector v = Vector::Zero(2 * half_width + 1);
    for (const auto& [n, c] : coeffs_)
        if (n >= -half_width && n <= half_width) v(n + half_width) = c;
    return v;
}

SupportedVector SupportedVector::from_window(const Vector& v, std::int64_t half_width) {
    if (v.size() != 2 * half_width + 1) throw DimensionError("window length must be 2N+1");
    SupportedVector out;
    for (std::int64_t i = 0; i < v.size(); ++i)
        if (v(i) != Complex{}) out.coeffs_[i - half_width] = v(i);
    return out;
}

SupportedVector SupportedVector::operator+(const SupportedVector& other) const {
    SupportedVector out = *this;
    for (const auto& [n, c] : other.coeffs_) out.coeffs_[n] += c;
    return out;
}

SupportedVector SupportedVector::operator-(const SupportedVector& other) const {
    return *this + other * Complex(-1.0);
}

SupportedVector SupportedVector::operator*(Complex s) const {
    SupportedVector out = *this;
    for (auto& [_, c] : out.coeffs_) c *= s;
    return out;
}

// ---------------------------------------------------------------------------
// ShiftOperator

ShiftOperator::ShiftOperator(ShiftDirection dir, double w_pos, double w_neg, std::int64_t cross,
                             Complex ph)
    : direction(dir), weight_pos(w_pos), weight_neg(w_neg), crossover(cross), phase(ph) {
    if (!(w_pos > 0.0) || !(w_neg > 0.0) || !std::isfinite(w_pos) || !std::isfinite(w_neg))
        throw std::invalid_argument("shift weights must be positive and finite");
    require_unimodular(ph);
}

double ShiftOperator::weight(std::int64_t n) const {
    const bool positive_side =
        direction == ShiftDirection::forward ? n >= crossover : n > crossover;
    return positive_side ? weight_pos : weight_neg;
}

SupportedVector ShiftOperator::apply(const SupportedVector& v) const {
    std::map<std::int64_t, Complex> out;
    for (const auto& [n, c] : v.coefficients()) out[n + step()] = phase * weight(n) * c;
    return SupportedVector(std::move(out));
}

ShiftOperator ShiftOperator::adjoint() const {
    auto dir = direction == ShiftDirection::forward ? ShiftDirection::backward
                                                    : ShiftDirection::forward;
    return ShiftOperator(dir, weight_pos, weight_neg, crossover, std::conj(phase));
}

ShiftOperator ShiftOperator::inverse() const {
    auto dir = direction == ShiftDirection::forward ? ShiftDirection::backward
                                                    : ShiftDirection::forward;
    return ShiftOperator(dir, 1.0 / weight_pos, 1.0 / weight_neg, crossover, 1.0 / phase);
}

ShiftOperator ShiftOperator::rotate(Complex lambda) const {
    require_unimodular(lambda);
    ShiftOperator out = *this;
    out.phase = phase / lambda;
    return out;
}

DenseOperator ShiftOperator::materialize(std::int64_t half_width) const {
    if (half_width < 1) throw std::invalid_argument("materialize needs half_width >= 1");
    const std::int64_t size = 2 * half_width + 1;
    Matrix m = Matrix::Zero(size, size);
    for (std::int64_t n = -half_width; n <= half_width; ++n) {
        const std::int64_t target = n + step();
        if (target < -half_width || target > half_width) continue;
        m(target + half_width, n + half_width) = phase * weight(n);
    }
    return DenseOperator(std::move(m));
}

ShiftOperator eisenberg_hedlund_forward() {
    const double w = 2.0 * std::numbers::sqrt2;
    return ShiftOperator(ShiftDirection::forward, w, 1.0 / w, 0);
}

ShiftOperator eisenberg_hedlund_backward() {
    const double w = 2.0 * std::numbers::sqrt2;
    return ShiftOperator(ShiftDirection::backward, w, 1.0 / w, 0);
}

// ---------------------------------------------------------------------------
// Operator variant

Operator adjoint(const Operator& op) {
    return std::visit([](const auto& o) -> Operator { return o.adjoint(); }, op);
}

Operator rotate(const Operator& op, Complex lambda) {
    return std::visit([lambda](const auto& o) -> Operator { return o.rotate(lambda); }, op);
}

bool is_dense(const Operator& op) { return std::holds_alternative<DenseOperator>(op); }

}  // namespace shadowspec
