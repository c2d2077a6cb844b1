#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "shadowspec/operators.hpp"
#include "shadowspec/projector.hpp"

namespace shadowspec {

/// Integer time window n_lo..n_hi (inclusive).
struct Window {
    std::int64_t lo = 0;
    std::int64_t hi = 0;

    std::size_t size() const noexcept { return static_cast<std::size_t>(hi - lo + 1); }
    bool contains(std::int64_t n) const noexcept { return lo <= n && n <= hi; }
    static Window symmetric(std::int64_t half) { return {-half, half}; }
};

enum class DefectSampling { sphere, ball };

/// Finite window of a delta-pseudotrajectory y_n together with its defects
/// z_n = y_{n+1} - T y_n. Defects are kept as generated: for hyperbolic T
/// the states grow geometrically and differencing them would lose the defect
/// to cancellation.
struct PseudoOrbit {
    Window window;
    std::vector<Vector> states;   // n = lo..hi
    std::vector<Vector> defects;  // n = lo..hi-1
    double delta = 0.0;

    const Vector& state(std::int64_t n) const { return states.at(static_cast<std::size_t>(n - window.lo)); }
    const Vector& defect(std::int64_t n) const { return defects.at(static_cast<std::size_t>(n - window.lo)); }
    std::vector<double> defect_norms() const;
    /// max_n |z_n|
    double defect_sup() const;
};

/// Builds y_0 = x0, y_{n+1} = T y_n + z_n forward and y_n = T^{-1}(y_{n+1} - z_n)
/// backward. defects[k] is z_{window.lo + k}; the window must contain 0.
PseudoOrbit pseudo_orbit_from_defects(const DenseOperator& op, const Vector& x0,
                                      std::vector<Vector> defects, Window window, double delta);

/// Shift version on the coordinate window -M..M. Backward steps use the
/// explicit inverse shift. The states are the exact restriction of the orbit
/// of the infinite shift as long as x0 and the defects stay at least
/// max(-lo, hi) + 1 coordinates away from the edge.
PseudoOrbit pseudo_orbit_from_defects(const ShiftOperator& op, const SupportedVector& x0,
                                      std::vector<Vector> defects, Window window, double delta,
                                      std::int64_t state_half_width);

/// Defects drawn uniformly on the delta-sphere (default) or delta-ball.
PseudoOrbit generate_pseudo_orbit(const DenseOperator& op, const Vector& x0, double delta,
                                  Window window, std::uint64_t rng_seed,
                                  DefectSampling sampling = DefectSampling::sphere);

/// Defects are drawn on the coordinates that no step can carry to the edge;
/// x0 must be supported there too.
PseudoOrbit generate_pseudo_orbit(const ShiftOperator& op, const SupportedVector& x0,
                                  double delta, Window window, std::uint64_t rng_seed,
                                  std::int64_t state_half_width,
                                  DefectSampling sampling = DefectSampling::sphere);

/// (lambda^n y_n): a delta-pseudotrajectory of lambda T when the input is one of T.
PseudoOrbit rotate_orbit(const PseudoOrbit& orbit, Complex lambda);

class DecayCertificateError : public std::runtime_error {
public:
    DecayCertificateError(const std::string& what, DecayRates rates)
        : std::runtime_error(what), rates_(rates) {}
    const DecayRates& rates() const noexcept { return rates_; }

private:
    DecayRates rates_;
};

class TailBoundError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ShadowResult {
    /// Seed x of the real trajectory T^n x, at time 0.
    Vector anchor;
    /// sup_n |y_n - T^n anchor| over the window.
    double epsilon_achieved = 0.0;
    /// K (1 + q) / (1 - q) * delta
    double epsilon_bound = 0.0;
    double q_used = 0.0;
    double K_used = 0.0;
    int tail_K = 0;
    DecayRates rates;
    /// Bounded solution x_n of x_{n+1} = T x_n + z_n; y_n - T^n anchor = x_n.
    std::vector<Vector> solution;
    /// max_n |x_{n+1} - T x_n - z_n| over the window.
    double recurrence_residual = 0.0;
};

/// Tail-bound target: K q^tail / (1 - q) must fall below this.
inline constexpr double kTailBoundTarget = 1e-10;

/// Shadows the orbit with the splitting B through
///   x_n = sum_{k>=0} T^k B z_{n-k-1} - sum_{k>=1} T^{-k}(I - B) z_{n+k-1},
/// with defects outside the window taken as zero. Without tail_K the
/// smallest truncation with q^K < 1e-12 that also meets the tail bound is used.
/// Throws DecayCertificateError when T^n B or T^{-n}(I - B) do not decay and
/// TailBoundError when an explicit tail_K is too short.
ShadowResult construct_shadow(const DenseOperator& op, const DenseOperator& splitting,
                              const PseudoOrbit& orbit, std::optional<int> tail_K = {});

class IllConditionedError : public std::runtime_error {
public:
    IllConditionedError(const std::string& what, double condition)
        : std::runtime_error(what), condition_(condition) {}
    double condition_estimate() const noexcept { return condition_; }

private:
    double condition_;
};

struct OracleResult {
    Vector best_anchor;
    /// sup_n |y_n - T^n best_anchor|
    double epsilon_achieved = 0.0;
    /// sup-norm distance of the plain least-squares minimizer
    double lsq_epsilon = 0.0;
    /// least-squares objective sum_n |y_n - T^n x|^2 at its minimizer
    double objective = 0.0;
    int newton_steps = 0;
    /// ratio of extreme |R_ii| in the orthogonal factorization
    double condition_estimate = 0.0;
    std::vector<Vector> deviations;  // y_n - T^n best_anchor
};

/// Least-squares shadow: minimizes sum_n |y_n - T^n x|^2 over anchors x.
///
/// The deviations u_n = y_n - T^n x are exactly the solutions of the windowed
/// recurrence u_{n+1} - T u_n = z_n, so the problem is solved as the minimum
/// norm solution of that sparse block system (sparse QR of its adjoint). This
/// avoids forming T^n, whose range spans many orders of magnitude for
/// hyperbolic T.
///
/// The l2 minimizer is not the sup-norm minimizer. The remaining freedom is
/// the kernel of the windowed system (orthonormal basis from the same
/// factorization), over which max_n |u_n| is then minimized exactly as a small
/// second-order cone program; best_anchor and epsilon_achieved refer to that
/// sup-norm minimizer.
enum class OracleNorm { least_squares, sup };
OracleResult shadow_oracle_lsq(const DenseOperator& op, const PseudoOrbit& orbit,
                               OracleNorm norm = OracleNorm::sup);
/// Shift version on the materialized coordinate window -M..M the orbit lives
/// on. The windowed recurrence of a weighted shift splits along the diagonals
/// j - step * n = const into scalar chains with at most one free value each,
/// so the least-squares minimizer is found chain by chain in O(N M). Only the
/// least-squares objective is available; condition_estimate is the largest
/// dynamic range of a homogeneous chain solution.
OracleResult shadow_oracle_lsq(const ShiftOperator& op, const PseudoOrbit& orbit);

enum class WindowKind { script_s, script_b };

/// Finite block matrix of (x_{n+1} - T x_n) for n = -N..N-1 (script_s) or of
/// (x_{n-1} - T* x_n) for n = -N+1..N (script_b), acting on stacked x_{-N..N}.
/// For shifts each state is a coordinate window of half-width M.
Matrix windowed_operator(const Operator& op, WindowKind kind, int N, std::int64_t M = 0);

struct WindowProbe {
    int N = 0;
    double gain = 0.0;
    WindowKind kind = WindowKind::script_s;
    /// Gains are measured in the l2 norm on finite windows.
    static constexpr const char* norm_label = "l2 surrogate";
};

/// script_s: surjectivity modulus of the windowed S, i.e. its smallest
/// singular value. script_b: min |B y| / |y| over sequences supported in
/// -N..N, all nonzero outputs kept.
WindowProbe window_probe(const Operator& op, WindowKind kind, int N, std::int64_t M = 0);

struct TestSequenceGain {
    double gain_measured = 0.0;
    double gain_identity = 0.0;
    int N = 0;
};

/// Smallest N with q^{-N} < 1e-14.
int test_sequence_length(double q);

/// l1 gain of B on y_n = q^{-|n|} x, measured by direct summation over
/// -N..N and from the closed-form identity. Requires q > 1.
TestSequenceGain bgain_test_sequence(const DenseOperator& op, const Vector& x, double q,
                                     int N = 0);
TestSequenceGain bgain_test_sequence(const ShiftOperator& op, const SupportedVector& x, double q,
                                     int N = 0);

}  // namespace shadowspec
