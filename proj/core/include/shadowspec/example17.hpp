#pragma once

#include <string>
#include <vector>

#include "shadowspec/operators.hpp"
#include "shadowspec/shadowing.hpp"
#include "shadowspec/spectral.hpp"

namespace shadowspec {

/// Eigenvector of a shift at lambda built from the eigen-recurrence with
/// c_0 = 1, truncated to -half_width..half_width. Meaningful where the
/// recurrence decays in both directions.
SupportedVector truncated_eigenvector(const ShiftOperator& op, Complex lambda,
                                      std::int64_t half_width);

struct Example17Config {
    double delta = 1e-3;
    std::vector<double> q_values{1.2, 1.1, 1.05, 1.01};
    std::vector<int> windows{8, 16, 32, 64};
    /// truncation of the eigenvector of S at eigenvalue 1
    std::int64_t eigen_half_width = 20;
};

struct GainPoint {
    double q = 0.0;
    TestSequenceGain gain;
};

struct TrendPoint {
    int N = 0;
    std::int64_t state_half_width = 0;
    double epsilon_s = 0.0;
    double epsilon_t = 0.0;
};

struct Example17Report {
    Example17Config config;
    SpectralReport report_t;  // forward shift
    SpectralReport report_s;  // backward shift, adjoint of the forward one
    /// Gain of the forward shift's B-operator on the test sequence built from
    /// the eigenvector of S at 1.
    std::vector<GainPoint> gain_sweep;
    /// Least-squares oracle epsilon of the pseudo-orbit with constant defect
    /// delta * c / |c| on -N..N.
    std::vector<TrendPoint> trend;
    bool verdicts_match = false;
    std::string trend_note;
};

/// Expected verdicts: S shadows but is not expansive, T is expansive but does
/// not shadow, neither is hyperbolic.
Example17Report run_example17(const Example17Config& cfg = {});

}  // namespace shadowspec
