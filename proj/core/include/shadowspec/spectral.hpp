#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "shadowspec/operators.hpp"

namespace shadowspec {

/// Default tolerance on the distance of the spectrum to the unit circle.
inline constexpr double kDefaultGapTol = 1e-6;

/// Largest dimension accepted by the dense eigenvalue routine.
inline constexpr Eigen::Index kMaxEigenDim = 512;

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Verdicts {
    bool hyperbolic = false;
    bool uniformly_expansive = false;
    bool shadowing = false;

    bool operator==(const Verdicts&) const = default;
};

/// A spectral set of a two-sided-constant shift: either a closed annulus
/// {inner <= |z| <= outer} or the union of the circles |z| = inner, |z| = outer.
struct RadialSet {
    enum class Shape { empty, circles, closed_annulus, open_annulus };
    Shape shape = Shape::empty;
    double inner = 0.0;
    double outer = 0.0;

    /// min over the set of | |z| - 1 |; zero when the set meets the unit circle.
    /// Returns +infinity for the empty set.
    double unit_circle_gap() const;
};

struct ShiftSpectra {
    double annulus_inner = 0.0;
    double annulus_outer = 0.0;
    RadialSet spectrum;
    RadialSet approx_point;
    RadialSet point;
    RadialSet adjoint_approx_point;
};

struct SpectralReport {
    std::vector<Complex> eigenvalues;          // dense case
    std::optional<ShiftSpectra> shift_spectra;  // shift case
    /// Eigenvalues of a finite window of a shift; shown only for contrast.
    std::vector<Complex> window_eigenvalues;

    double tol = kDefaultGapTol;
    double gap_sigma = 0.0;             // distance of sigma(T) to the unit circle
    double gap_approx_point = 0.0;      // distance of sigma_a(T)
    double gap_adjoint_approx = 0.0;    // distance of sigma_a(T*)

    Verdicts verdicts;
    std::string hyperbolic_reason;
    std::string expansive_reason;
    std::string shadowing_reason;
};

/// All eigenvalues with algebraic multiplicity.
std::vector<Complex> eigenvalues(const DenseOperator& a);

/// min over the eigenvalues of | |lambda| - 1 |.
double unit_circle_gap(const std::vector<Complex>& eigs);

/// Largest alpha with ||A x|| >= alpha ||x|| for all x.
double min_singular_value(const Matrix& a);
inline double min_singular_value(const DenseOperator& a) { return min_singular_value(a.matrix()); }

/// Throws SingularOperatorError when A is not invertible.
SpectralReport classify_dense(const DenseOperator& a, double tol = kDefaultGapTol);

ShiftSpectra shift_spectra(const ShiftOperator& op);
SpectralReport classify_shift(const ShiftOperator& op, double tol = kDefaultGapTol);

SpectralReport classify(const Operator& op, double tol = kDefaultGapTol);

struct DualityReport {
    int grid_points = 0;
    /// Largest |sigma_min(lambda I - A) measured two ways| over the grid.
    double worst_singular_discrepancy = 0.0;
    /// Number of grid points where the surjectivity and bounded-below verdicts differ.
    int verdict_mismatches = 0;
    /// Bottleneck distance between sigma(A) and conj(sigma(A*)).
    double spectrum_discrepancy = 0.0;
    /// Grid points at which lambda I - A is not surjective.
    int non_surjective_points = 0;
    bool pass = false;
};

inline constexpr int kDualityGridPoints = 360;

/// Checks, on an equispaced grid of the unit circle, that lambda I - A is
/// surjective exactly when conj(lambda) I - A* is bounded below, and that the
/// right spectrum of A is the conjugate of the approximate point spectrum of A*.
DualityReport duality_check(const DenseOperator& a, double tol = kDefaultGapTol,
                            int grid_points = kDualityGridPoints,
                            double spectrum_tol = 1e-8);

/// Bottleneck distance between two equal-size multisets: the smallest d such
/// that the points can be paired one-to-one with every pair within d.
double multiset_distance(const std::vector<Complex>& a, const std::vector<Complex>& b);

struct ExpansivityWitness {
    /// Least n for which no sampled unit vector had max(|A^n x|, |A^-n x|) < 2.
    std::optional<int> expansive_at;
    /// Sampled minimum of max(|A^n x|, |A^-n x|) at expansive_at, or at n_max.
    double sampled_minimum = 0.0;
    /// Minimizing unit vector at n_max when no n qualified.
    Vector counterexample;
    int n_tested = 0;
};

/// Sphere-sampling heuristic for uniform expansivity. Advisory only; the
/// spectral verdict is authoritative.
ExpansivityWitness expansivity_witness(const DenseOperator& a, int n_max, int samples,
                                       std::uint64_t rng_seed);

}  // namespace shadowspec
