#include "shadowspec/example17.hpp"

#include <cmath>
#include <stdexcept>

#include "shadowspec/parallel.hpp"

namespace shadowspec {

SupportedVector truncated_eigenvector(const ShiftOperator& op, Complex lambda,
                                      std::int64_t half_width) {
    if (half_width < 0) throw std::invalid_argument("half_width must be nonnegative");
    if (lambda == Complex{}) throw std::invalid_argument("eigenvalue must be nonzero");
    SupportedVector c;
    c.set(0, 1.0);
    Complex up = 1.0;
    Complex down = 1.0;
    const Complex ph = op.phase;
    for (std::int64_t m = 1; m <= half_width; ++m) {
        if (op.direction == ShiftDirection::forward) {
            // lambda c_m = phase w(m-1) c_{m-1}
            up = ph * op.weight(m - 1) * up / lambda;
            down = lambda * down / (ph * op.weight(-m));
        } else {
            // lambda c_m = phase w(m+1) c_{m+1}
            up = lambda * up / (ph * op.weight(m));
            down = ph * op.weight(-m + 1) * down / lambda;
        }
        c.set(m, up);
        c.set(-m, down);
    }
    return c;
}

Example17Report run_example17(const Example17Config& cfg) {
    if (!(cfg.delta >= 0.0)) throw std::invalid_argument("delta must be nonnegative");
    const ShiftOperator t = eisenberg_hedlund_forward();
    const ShiftOperator s = eisenberg_hedlund_backward();

    Example17Report rep;
    rep.config = cfg;
    rep.report_t = classify_shift(t);
    rep.report_s = classify_shift(s);
    rep.verdicts_match = rep.report_s.verdicts == Verdicts{false, false, true} &&
                         rep.report_t.verdicts == Verdicts{false, true, false};

    const std::int64_t L = cfg.eigen_half_width;
    const SupportedVector c = truncated_eigenvector(s, 1.0, L);
    for (double q : cfg.q_values) rep.gain_sweep.push_back({q, bgain_test_sequence(t, c, q)});

    rep.trend.resize(cfg.windows.size());
    parallel_for(cfg.windows.size(), [&](std::size_t i) {
        const int N = cfg.windows[i];
        if (N < 1) throw std::invalid_argument("window half-widths must be positive");
        const std::int64_t M = 2 * N + L + 2;
        const Vector defect = c.window(M) * (cfg.delta / c.norm());
        const std::vector<Vector> defects(static_cast<std::size_t>(2 * N), defect);
        const Window w = Window::symmetric(N);
        const SupportedVector origin;
        const PseudoOrbit orbit_s = pseudo_orbit_from_defects(s, origin, defects, w, cfg.delta, M);
        const PseudoOrbit orbit_t = pseudo_orbit_from_defects(t, origin, defects, w, cfg.delta, M);
        TrendPoint& p = rep.trend[i];
        p.N = N;
        p.state_half_width = M;
        p.epsilon_s = shadow_oracle_lsq(s, orbit_s).epsilon_achieved;
        p.epsilon_t = shadow_oracle_lsq(t, orbit_t).epsilon_achieved;
    });
    rep.trend_note =
        "finite-window trend only: growth of the oracle epsilon for T with the window "
        "is evidence, not a certificate, that T lacks the shadowing property";
    return rep;
}

}  // namespace shadowspec
