#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "shadowspec/operators.hpp"

namespace shadowspec {

/// Origin-centred circle |lambda| = radius discretized by an equispaced
/// trapezoid rule.
struct ContourConfig {
    double radius = 1.0;
    int nodes = 256;

    /// nodes must be a power of two >= 16 and radius positive.
    void validate() const;
    /// Node spacing 2 pi r / nodes; eigenvalues closer than this to the contour
    /// are rejected.
    double spacing_guard() const;
};

class ContourError : public std::runtime_error {
public:
    ContourError(const std::string& what, double distance)
        : std::runtime_error(what), distance_(distance) {}
    /// min over eigenvalues of | |lambda| - radius |.
    double distance() const noexcept { return distance_; }

private:
    double distance_;
};

class NearSingularResolventError : public std::runtime_error {
public:
    NearSingularResolventError(const std::string& what, double distance)
        : std::runtime_error(what), distance_(distance) {}
    double distance_to_spectrum() const noexcept { return distance_; }

private:
    double distance_;
};

/// (lambda I - A)^{-1}. Throws NearSingularResolventError when lambda lies
/// within 1e-10 of an eigenvalue.
DenseOperator resolvent(const DenseOperator& a, Complex lambda);

/// Throws ContourError when an eigenvalue of A lies within the spacing guard
/// of the contour. Returns the distance of the spectrum to the contour.
double check_contour(const DenseOperator& a, const ContourConfig& cfg);

/// Smallest power-of-two node count (>= 256, <= 2^22) whose trapezoid aliasing
/// error for the given distance of the spectrum to the unit circle is below
/// target.
int recommended_nodes(double gap, double target = 1e-13);

struct QuadratureResult {
    DenseOperator coefficient;
    /// max-entry change of the coefficient when the node count is doubled.
    double doubling_change = 0.0;
    int nodes = 0;
};

/// C_n = (1/2 pi i) \oint lambda^{-n-1} (lambda I - A)^{-1} d lambda over the
/// configured circle. |n| <= 64.
QuadratureResult laurent_coefficient(const DenseOperator& a, int n,
                                     const ContourConfig& cfg = {});

/// Riesz projector onto the spectral part inside the contour (= C_{-1}).
DenseOperator riesz_projector(const DenseOperator& a, const ContourConfig& cfg = {});

inline constexpr double kDecayMargin = 1e-8;

struct DecayRates {
    /// max over n in (n_max/2, n_max] of ||A^n B||^{1/n}
    double r_plus = 0.0;
    /// same for ||A^{-n} (I - B)||^{1/n}
    double r_minus = 0.0;
    int n_max = 0;
    /// whether B passed the commuting-idempotent test and powers were
    /// re-projected at every step
    bool projected = false;

    /// Both rates below 1 by more than kDecayMargin; a rate within rounding of
    /// 1 is not evidence of decay.
    bool certified() const noexcept {
        return r_plus < 1.0 - kDecayMargin && r_minus < 1.0 - kDecayMargin;
    }
};

/// Finite-order estimate of the exponential decay rates of A^n B and
/// A^{-n}(I - B). Norm growth is accumulated in log space. n_max >= 8.
DecayRates decay_rates(const DenseOperator& a, const DenseOperator& b, int n_max);

/// True when B*B = B and AB = BA up to rounding.
bool is_commuting_projector(const DenseOperator& a, const DenseOperator& b);

/// The operator sequences A^k B and A^{-k}(I - B) for k = 0..count-1.
/// When B is a commuting projector each step is re-projected onto its range
/// (resp. kernel) so that rounding cannot leak into the growing part.
struct SplitPowers {
    std::vector<Matrix> forward;   // A^k B
    std::vector<Matrix> backward;  // A^{-k} (I - B)
    bool projected = false;
};
SplitPowers split_powers(const DenseOperator& a, const DenseOperator& b, int count);

struct LaurentTable {
    int n_max = 0;
    double radius = 1.0;
    int nodes = 0;
    std::map<int, Matrix> coefficients;  // n in -n_max..n_max
    double doubling_residual = 0.0;
    DecayRates decay;

    const Matrix& at(int n) const { return coefficients.at(n); }
};

/// Coefficients C_{-n_max}..C_{n_max} from one set of resolvent evaluations,
/// plus the decay rates of the splitting B = C_{-1}.
LaurentTable laurent_table(const DenseOperator& a, int n_max, const ContourConfig& cfg = {},
                           int decay_order = 32);

struct LaurentRelations {
    double c0_residual = 0.0;        // |C_0 + A^{-1}(I - C_{-1})|
    double positive_residual = 0.0;  // max_n |C_n - A^{-n} C_0|
    double negative_residual = 0.0;  // max_n |C_{-n} - A^{n-1} C_{-1}|
    double threshold = 1e-7;
    bool pass = false;
};

/// Checks the recurrences linking the Laurent coefficients of the resolvent
/// (max-entry residuals). Needs table.n_max >= 3.
LaurentRelations verify_laurent_relations(const DenseOperator& a, const LaurentTable& table,
                                          double threshold = 1e-7);

}  // namespace shadowspec
