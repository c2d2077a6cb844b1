#include "shadowspec/shadowing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>
#include <Eigen/SparseQR>

#include "shadowspec/spectral.hpp"

namespace shadowspec {

namespace {

using SparseMatrix = Eigen::SparseMatrix<Complex>;
using Triplet = Eigen::Triplet<Complex>;

constexpr int kMaxTail = 1'000'000;
constexpr int kMaxDecayOrder = 4096;

void require_window(const Window& w) {
    if (w.hi <= w.lo) throw std::invalid_argument("window needs n_hi > n_lo");
    if (!w.contains(0)) throw std::invalid_argument("window must contain time 0");
}

void require_orbit_shape(const PseudoOrbit& orbit, Eigen::Index dim) {
    if (orbit.states.size() != orbit.window.size() ||
        orbit.defects.size() + 1 != orbit.window.size())
        throw DimensionError("pseudo-orbit storage does not match its window");
    for (const auto& z : orbit.defects)
        if (z.size() != dim) throw DimensionError("defect length does not match operator dim");
}

std::vector<Vector> sample_defects(Eigen::Index dim, std::size_t count, double delta,
                                   std::uint64_t seed, DefectSampling sampling) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uniform;
    std::vector<Vector> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        Vector z(dim);
        for (Eigen::Index i = 0; i < dim; ++i) z(i) = Complex(normal(rng), normal(rng));
        double radius = delta;
        if (sampling == DefectSampling::ball)
            radius *= std::pow(uniform(rng), 1.0 / (2.0 * static_cast<double>(dim)));
        const double nz = z.norm();
        out.push_back(nz > 0.0 ? Vector(z * (radius / nz)) : Vector::Zero(dim));
    }
    return out;
}

PseudoOrbit build_orbit(const Matrix& forward, const Matrix& backward, const Vector& x0,
                        std::vector<Vector> defects, Window window, double delta) {
    require_window(window);
    if (delta < 0.0) throw std::invalid_argument("delta must be nonnegative");
    if (defects.size() + 1 != window.size())
        throw DimensionError("need one defect per step of the window");
    if (x0.size() != forward.rows()) throw DimensionError("x0 length does not match operator");
    PseudoOrbit orbit;
    orbit.window = window;
    orbit.delta = delta;
    orbit.defects = std::move(defects);
    orbit.states.assign(window.size(), Vector());
    const auto at = [&](std::int64_t n) { return static_cast<std::size_t>(n - window.lo); };
    orbit.states[at(0)] = x0;
    for (std::int64_t n = 0; n < window.hi; ++n)
        orbit.states[at(n + 1)] = forward * orbit.states[at(n)] + orbit.defects[at(n)];
    for (std::int64_t n = -1; n >= window.lo; --n)
        orbit.states[at(n)] = backward * (orbit.states[at(n + 1)] - orbit.defects[at(n)]);
    return orbit;
}

// A^k B and A^{-k}(I - B) stepped one power at a time. Each power is kept as
// a matrix of moderate size times exp(log scale) so long tails never reach
// denormal arithmetic.
class SplitStepper {
public:
    SplitStepper(const DenseOperator& a, const DenseOperator& b)
        : a_(a.matrix()),
          inv_(a.inverse().matrix()),
          b_(b.matrix()),
          c_(Matrix::Identity(a.dim(), a.dim()) - b.matrix()),
          projected_(is_commuting_projector(a, b)),
          fwd_(b_),
          bwd_(c_) {}

    Matrix forward() const { return fwd_ * std::exp(fwd_log_); }
    Matrix backward() const { return bwd_ * std::exp(bwd_log_); }
    /// log of the Frobenius norm (-inf for a vanished power)
    double forward_log_frobenius() const { return std::log(fwd_.norm()) + fwd_log_; }
    double backward_log_frobenius() const { return std::log(bwd_.norm()) + bwd_log_; }
    double forward_log_norm() const { return std::log(operator_norm(fwd_)) + fwd_log_; }
    double backward_log_norm() const { return std::log(operator_norm(bwd_)) + bwd_log_; }

    void step() {
        fwd_ = a_ * fwd_;
        bwd_ = inv_ * bwd_;
        if (projected_) {
            fwd_ = b_ * fwd_;
            bwd_ = c_ * bwd_;
        }
        rescale(fwd_, fwd_log_);
        rescale(bwd_, bwd_log_);
    }

private:
    static void rescale(Matrix& m, double& log_scale) {
        const double f = m.norm();
        if (f > 0.0 && std::isfinite(f) && (f < 1e-100 || f > 1e100)) {
            m /= f;
            log_scale += std::log(f);
        }
    }

    Matrix a_, inv_, b_, c_;
    bool projected_;
    Matrix fwd_, bwd_;
    double fwd_log_ = 0.0, bwd_log_ = 0.0;
};

Vector dense_from_support(const SupportedVector& v, std::int64_t lo, std::int64_t hi) {
    Vector out = Vector::Zero(hi - lo + 1);
    for (const auto& [n, c] : v.coefficients()) out(n - lo) = c;
    return out;
}

TestSequenceGain gain_from_vectors(const Vector& x, const Vector& adj_x, double q, int N) {
    if (!(q > 1.0)) throw std::invalid_argument("test sequence needs q > 1");
    const int needed = test_sequence_length(q);
    if (N == 0) N = needed;
    if (N < needed) {
        std::ostringstream os;
        os << "test sequence truncation N = " << N << " too short for q = " << q << " (need "
           << needed << ")";
        throw std::invalid_argument(os.str());
    }
    const double x_norm = x.norm();
    if (!(x_norm > 0.0)) throw std::invalid_argument("test sequence needs x != 0");
    const auto coeff = [q](long n) { return std::pow(q, -static_cast<double>(std::labs(n))); };

    // |B(y)|_1 = sum_n |y_{n-1} - T* y_n| with y_n = q^{-|n|} x.
    double image = 0.0;
    double mass = 0.0;
    for (long n = -N; n <= N; ++n) {
        image += (coeff(n - 1) * x - coeff(n) * adj_x).norm();
        mass += coeff(n) * x_norm;
    }
    TestSequenceGain g;
    g.N = N;
    g.gain_measured = image / mass;
    g.gain_identity = ((x / q - adj_x).norm() * q + (q * x - adj_x).norm()) / ((1.0 + q) * x_norm);
    return g;
}

}  // namespace

std::vector<double> PseudoOrbit::defect_norms() const {
    std::vector<double> out;
    out.reserve(defects.size());
    for (const auto& z : defects) out.push_back(z.norm());
    return out;
}

double PseudoOrbit::defect_sup() const {
    double s = 0.0;
    for (const auto& z : defects) s = std::max(s, z.norm());
    return s;
}

PseudoOrbit pseudo_orbit_from_defects(const DenseOperator& op, const Vector& x0,
                                      std::vector<Vector> defects, Window window, double delta) {
    const Matrix backward = window.lo < 0 ? op.inverse().matrix() : op.matrix();
    return build_orbit(op.matrix(), backward, x0, std::move(defects), window, delta);
}

PseudoOrbit pseudo_orbit_from_defects(const ShiftOperator& op, const SupportedVector& x0,
                                      std::vector<Vector> defects, Window window, double delta,
                                      std::int64_t state_half_width) {
    return build_orbit(op.materialize(state_half_width).matrix(),
                       op.inverse().materialize(state_half_width).matrix(),
                       x0.window(state_half_width), std::move(defects), window, delta);
}

PseudoOrbit generate_pseudo_orbit(const DenseOperator& op, const Vector& x0, double delta,
                                  Window window, std::uint64_t rng_seed,
                                  DefectSampling sampling) {
    require_window(window);
    auto defects = sample_defects(op.dim(), window.size() - 1, delta, rng_seed, sampling);
    return pseudo_orbit_from_defects(op, x0, std::move(defects), window, delta);
}

PseudoOrbit generate_pseudo_orbit(const ShiftOperator& op, const SupportedVector& x0,
                                  double delta, Window window, std::uint64_t rng_seed,
                                  std::int64_t state_half_width, DefectSampling sampling) {
    require_window(window);
    // Keep every state clear of the window edge so the window is an exact
    // restriction of the orbit of the infinite shift.
    const std::int64_t reach = std::max(-window.lo, window.hi) + 1;
    const std::int64_t interior = state_half_width - reach;
    if (interior < 0)
        throw std::invalid_argument("state half-width must exceed the time window reach");
    for (const auto& [n, c] : x0.coefficients())
        if (c != Complex{} && (n < -interior || n > interior))
            throw std::invalid_argument("x0 support reaches the edge of the state window");
    auto core = sample_defects(2 * interior + 1, window.size() - 1, delta, rng_seed, sampling);
    std::vector<Vector> defects;
    defects.reserve(core.size());
    for (auto& z : core) {
        Vector full = Vector::Zero(2 * state_half_width + 1);
        full.segment(reach, z.size()) = z;
        defects.push_back(std::move(full));
    }
    return pseudo_orbit_from_defects(op, x0, std::move(defects), window, delta, state_half_width);
}

PseudoOrbit rotate_orbit(const PseudoOrbit& orbit, Complex lambda) {
    require_unimodular(lambda);
    // Binary powering keeps lambda = -1, +-i exact.
    const auto power = [lambda](std::int64_t n) {
        Complex result = 1.0;
        Complex base = n < 0 ? std::conj(lambda) : lambda;
        for (std::uint64_t e = static_cast<std::uint64_t>(n < 0 ? -n : n); e > 0; e >>= 1) {
            if (e & 1u) result *= base;
            base *= base;
        }
        return result;
    };
    PseudoOrbit out = orbit;
    for (std::int64_t n = orbit.window.lo; n <= orbit.window.hi; ++n) {
        const auto i = static_cast<std::size_t>(n - orbit.window.lo);
        out.states[i] *= power(n);
        // lambda^{n+1} y_{n+1} - (lambda T)(lambda^n y_n) = lambda^{n+1} z_n
        if (n < orbit.window.hi) out.defects[i] *= power(n + 1);
    }
    return out;
}

ShadowResult construct_shadow(const DenseOperator& op, const DenseOperator& splitting,
                              const PseudoOrbit& orbit, std::optional<int> tail_K) {
    if (splitting.dim() != op.dim()) throw DimensionError("splitting dimension mismatch");
    require_orbit_shape(orbit, op.dim());
    if (tail_K && *tail_K < 1) throw std::invalid_argument("tail_K must be positive");

    ShadowResult res;
    // Short orders overestimate the rates through transient growth, and q
    // then sits so close to 1 that the tail becomes very long; keep refining
    // while the tail the rates imply is longer than the order itself.
    for (int order = 64;; order *= 2) {
        res.rates = decay_rates(op, splitting, order);
        if (order >= kMaxDecayOrder) break;
        if (!res.rates.certified()) continue;
        const double r = std::max(res.rates.r_plus, res.rates.r_minus);
        if (std::log(1e-12) / std::log(0.5 * (r + 1.0)) <= order) break;
    }
    if (!res.rates.certified()) {
        std::ostringstream os;
        os << "decay certificate failed: r_plus = " << res.rates.r_plus
           << ", r_minus = " << res.rates.r_minus << " at order " << res.rates.n_max;
        throw DecayCertificateError(os.str(), res.rates);
    }
    const double q = 0.5 * (std::max(res.rates.r_plus, res.rates.r_minus) + 1.0);
    res.q_used = q;

    // Scan |A^k B| / q^k and |A^{-k}(I-B)| / q^k for K; keep the powers the
    // window actually needs.
    const std::size_t span = orbit.window.size();
    const int default_tail =
        std::max(1, static_cast<int>(std::ceil(std::log(1e-12) / std::log(q))));
    const int target_tail = tail_K.value_or(default_tail);
    std::vector<Matrix> fwd_powers, bwd_powers;
    SplitStepper stepper(op, splitting);
    double K = 0.0;
    double log_q_power = 0.0;  // log q^k
    int tail = -1;
    for (int k = 0; k <= kMaxTail; ++k) {
        if (k > 0) {
            stepper.step();
            log_q_power += std::log(q);
        }
        if (static_cast<std::size_t>(k) < span) {
            fwd_powers.push_back(stepper.forward());
            bwd_powers.push_back(stepper.backward());
        }
        // The Frobenius norm bounds the operator norm from above, so the SVD
        // is only needed when a power could still raise K.
        const double log_K = std::log(K);
        if (stepper.forward_log_frobenius() - log_q_power > log_K)
            K = std::max(K, std::exp(stepper.forward_log_norm() - log_q_power));
        if (stepper.backward_log_frobenius() - log_q_power > log_K)
            K = std::max(K, std::exp(stepper.backward_log_norm() - log_q_power));
        if (!std::isfinite(K)) break;
        if (k < target_tail) continue;
        const double bound = K * std::exp(log_q_power) / (1.0 - q);
        if (bound < kTailBoundTarget) {
            tail = k;
            break;
        }
        if (tail_K) {
            std::ostringstream os;
            os << "tail_K = " << *tail_K << " leaves tail bound " << bound << " >= "
               << kTailBoundTarget;
            throw TailBoundError(os.str());
        }
    }
    if (tail < 0) throw TailBoundError("no truncation order meets the tail bound");
    res.tail_K = tail;
    res.K_used = K;

    const std::int64_t lo = orbit.window.lo;
    const std::int64_t hi = orbit.window.hi;
    const Eigen::Index dim = op.dim();
    const auto defect = [&](std::int64_t m) -> const Vector* {
        if (m < lo || m >= hi) return nullptr;
        return &orbit.defects[static_cast<std::size_t>(m - lo)];
    };
    const std::size_t used = std::min<std::size_t>(fwd_powers.size(), static_cast<std::size_t>(tail) + 1);
    res.solution.assign(span, Vector::Zero(dim));
    for (std::int64_t n = lo; n <= hi; ++n) {
        Vector& x = res.solution[static_cast<std::size_t>(n - lo)];
        for (std::size_t k = 0; k < used; ++k)
            if (const Vector* z = defect(n - static_cast<std::int64_t>(k) - 1)) x += fwd_powers[k] * *z;
        for (std::size_t k = 1; k < used; ++k)
            if (const Vector* z = defect(n + static_cast<std::int64_t>(k) - 1)) x -= bwd_powers[k] * *z;
    }

    for (std::int64_t n = lo; n < hi; ++n) {
        const auto i = static_cast<std::size_t>(n - lo);
        const Vector r = res.solution[i + 1] - op.matrix() * res.solution[i] - orbit.defects[i];
        res.recurrence_residual = std::max(res.recurrence_residual, r.norm());
    }
    for (const auto& x : res.solution) res.epsilon_achieved = std::max(res.epsilon_achieved, x.norm());

    // y_n - x_n solves the homogeneous recurrence, so it is T^n of the anchor.
    res.anchor = orbit.state(0) - res.solution[static_cast<std::size_t>(-lo)];

    res.epsilon_bound = K * (1.0 + q) / (1.0 - q) * orbit.delta;
    return res;
}

namespace {

struct MinNormSolution {
    Vector u;
    Matrix null_basis;  // orthonormal basis of the homogeneous solutions
    double condition = 0.0;
};

// Minimum-norm solution of u_{n+1} - T u_n = z_n from a sparse QR of the
// adjoint system: S^* P = Q R  =>  u = Q [R1^{-*} P^T z; 0]. The trailing
// columns of Q span the kernel of S.
MinNormSolution min_norm_solution(const Matrix& t, const Vector& z) {
    const Eigen::Index d = t.rows();
    const Eigen::Index rows = z.size();
    const Eigen::Index cols = rows + d;
    const Eigen::Index steps = rows / d;
    std::vector<Triplet> triplets;
    triplets.reserve(static_cast<std::size_t>(steps * d * (d + 1)));
    for (Eigen::Index s = 0; s < steps; ++s) {
        const Eigen::Index r0 = s * d;
        for (Eigen::Index i = 0; i < d; ++i) {
            triplets.emplace_back(r0 + d + i, r0 + i, Complex(1.0));
            for (Eigen::Index j = 0; j < d; ++j)
                if (t(i, j) != Complex{}) triplets.emplace_back(r0 + j, r0 + i, -std::conj(t(i, j)));
        }
    }
    SparseMatrix s_adj(cols, rows);
    s_adj.setFromTriplets(triplets.begin(), triplets.end());
    s_adj.makeCompressed();

    Eigen::SparseQR<SparseMatrix, Eigen::COLAMDOrdering<int>> qr;
    qr.compute(s_adj);
    if (qr.info() != Eigen::Success) throw std::runtime_error("shadow oracle: sparse QR failed");

    const SparseMatrix r1 = qr.matrixR().topLeftCorner(rows, rows);
    const Eigen::VectorXd diag = r1.diagonal().cwiseAbs();
    MinNormSolution out;
    const double dmin = diag.minCoeff();
    out.condition = dmin > 0.0 ? diag.maxCoeff() / dmin : std::numeric_limits<double>::infinity();
    if (!(out.condition < 1e14)) {
        std::ostringstream os;
        os << "shadow oracle: windowed system is ill-conditioned (estimate " << out.condition << ")";
        throw IllConditionedError(os.str(), out.condition);
    }
    const Vector pz = qr.colsPermutation().transpose() * z;
    const SparseMatrix r1_adj = r1.adjoint();
    Vector v = Vector::Zero(cols);
    v.head(rows) = r1_adj.triangularView<Eigen::Lower>().solve(pz);
    out.u = qr.matrixQ() * v;
    Matrix tail = Matrix::Zero(cols, d);
    tail.bottomRows(d).setIdentity();
    out.null_basis = qr.matrixQ() * tail;
    return out;
}

double block_sup(const Vector& u, Eigen::Index d) {
    double m = 0.0;
    for (Eigen::Index s = 0; s < u.size() / d; ++s) m = std::max(m, u.segment(s * d, d).norm());
    return m;
}

// min over c of max_n |u_n + H_n c| for an orthonormal H, as a second-order
// cone program in (Re c, Im c, t) solved with a log barrier and Newton steps.
Vector sup_norm_minimizer(const Vector& u, const Matrix& h, Eigen::Index d, int& newton_steps) {
    const double scale = block_sup(u, d);
    newton_steps = 0;
    if (!(scale > 0.0)) return u;
    const Eigen::Index blocks = u.size() / d;
    const Eigen::Index k = h.cols();
    const Eigen::Index nv = 2 * k + 1;
    const Vector a = u / scale;
    Matrix g(u.size(), 2 * k);  // r = a + g * x_c over real x_c
    g << h, Complex(0.0, 1.0) * h;

    Eigen::VectorXd x = Eigen::VectorXd::Zero(nv);
    x(nv - 1) = 1.5;  // t
    const auto residual = [&](const Eigen::VectorXd& y) {
        return Vector(a + g * y.head(2 * k).cast<Complex>());
    };
    const auto slack = [&](const Eigen::VectorXd& y, const Vector& r, Eigen::Index n) {
        return y(nv - 1) * y(nv - 1) - r.segment(n * d, d).squaredNorm();
    };
    const auto barrier = [&](const Eigen::VectorXd& y, double weight, double& f) {
        const Vector r = residual(y);
        f = weight * y(nv - 1);
        for (Eigen::Index n = 0; n < blocks; ++n) {
            const double phi = slack(y, r, n);
            if (!(phi > 0.0) || !(y(nv - 1) > 0.0)) return false;
            f -= std::log(phi);
        }
        return true;
    };

    const double gap_target = 1e-13;
    for (double weight = 1.0; static_cast<double>(blocks) / weight > gap_target; weight *= 16.0) {
        for (int it = 0; it < 100; ++it) {
            ++newton_steps;
            const Vector r = residual(x);
            Eigen::VectorXd grad = Eigen::VectorXd::Zero(nv);
            grad(nv - 1) = weight;
            Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(nv, nv);
            for (Eigen::Index n = 0; n < blocks; ++n) {
                const double phi = slack(x, r, n);
                const auto gn = g.middleRows(n * d, d);
                Eigen::VectorXd dphi(nv);
                dphi.head(2 * k) = -2.0 * (gn.adjoint() * r.segment(n * d, d)).real();
                dphi(nv - 1) = 2.0 * x(nv - 1);
                Eigen::MatrixXd d2phi = Eigen::MatrixXd::Zero(nv, nv);
                d2phi.topLeftCorner(2 * k, 2 * k) = -2.0 * (gn.adjoint() * gn).real();
                d2phi(nv - 1, nv - 1) = 2.0;
                grad -= dphi / phi;
                hess += dphi * dphi.transpose() / (phi * phi) - d2phi / phi;
            }
            const Eigen::VectorXd step = hess.ldlt().solve(-grad);
            const double decrement = -grad.dot(step);
            if (!(decrement > 1e-10)) break;
            double f0 = 0.0;
            barrier(x, weight, f0);
            double alpha = 1.0;
            double f1 = 0.0;
            while (alpha > 1e-16) {
                if (barrier(x + alpha * step, weight, f1) && f1 <= f0 - 0.25 * alpha * decrement) break;
                alpha *= 0.5;
            }
            if (!(alpha > 1e-16)) break;
            x += alpha * step;
        }
    }
    return scale * residual(x);
}

}  // namespace

OracleResult shadow_oracle_lsq(const DenseOperator& op, const PseudoOrbit& orbit, OracleNorm norm) {
    const Eigen::Index d = op.dim();
    require_orbit_shape(orbit, d);
    const auto steps = static_cast<Eigen::Index>(orbit.defects.size());
    Vector z(steps * d);
    for (Eigen::Index s = 0; s < steps; ++s) z.segment(s * d, d) = orbit.defects[static_cast<std::size_t>(s)];

    const MinNormSolution ls = min_norm_solution(op.matrix(), z);
    OracleResult res;
    res.condition_estimate = ls.condition;
    res.lsq_epsilon = block_sup(ls.u, d);
    res.objective = ls.u.squaredNorm();

    Vector best = ls.u;
    double best_sup = res.lsq_epsilon;
    if (norm == OracleNorm::sup) {
        best = sup_norm_minimizer(ls.u, ls.null_basis, d, res.newton_steps);
        best_sup = block_sup(best, d);
    }
    if (!(best_sup <= res.lsq_epsilon)) {
        best = ls.u;
        best_sup = res.lsq_epsilon;
    }
    res.epsilon_achieved = best_sup;
    res.deviations.reserve(static_cast<std::size_t>(steps + 1));
    for (Eigen::Index s = 0; s <= steps; ++s) res.deviations.emplace_back(best.segment(s * d, d));
    res.best_anchor = orbit.state(0) - res.deviations[static_cast<std::size_t>(-orbit.window.lo)];
    return res;
}

OracleResult shadow_oracle_lsq(const ShiftOperator& op, const PseudoOrbit& orbit) {
    if (orbit.defects.empty() || orbit.defects.front().size() % 2 == 0)
        throw DimensionError("shift orbit must live on a window -M..M");
    const Eigen::Index d = orbit.defects.front().size();
    require_orbit_shape(orbit, d);
    const std::int64_t M = (d - 1) / 2;
    const std::int64_t lo = orbit.window.lo;
    const std::int64_t hi = orbit.window.hi;
    const std::int64_t s = op.step();
    const auto idx = [M](std::int64_t j) { return static_cast<Eigen::Index>(j + M); };
    const auto slot = [lo](std::int64_t n) { return static_cast<std::size_t>(n - lo); };

    OracleResult res;
    res.deviations.assign(orbit.window.size(), Vector::Zero(d));
    res.condition_estimate = 1.0;

    // Chain k holds u_{n, k + s n}; on it u_{n+1} = a_n u_n + f_n.
    const std::int64_t k_lo = -M - std::max(s * lo, s * hi);
    const std::int64_t k_hi = M - std::min(s * lo, s * hi);
    std::vector<Complex> v, h, coef, force;
    for (std::int64_t k = k_lo; k <= k_hi; ++k) {
        std::int64_t a = hi + 1, b = lo - 1;
        for (std::int64_t n = lo; n <= hi; ++n) {
            const std::int64_t j = k + s * n;
            if (j >= -M && j <= M) {
                a = std::min(a, n);
                b = std::max(b, n);
            }
        }
        if (a > b) continue;
        const auto len = static_cast<std::size_t>(b - a + 1);
        coef.assign(len, Complex{});
        force.assign(len, Complex{});
        for (std::int64_t n = a; n < b; ++n) {
            coef[static_cast<std::size_t>(n - a)] = op.phase * op.weight(k + s * n);
            force[static_cast<std::size_t>(n - a)] = orbit.defects[slot(n)](idx(k + s * (n + 1)));
        }
        v.assign(len, Complex{});
        if (a > lo) {
            // Entered through the window edge: fully determined.
            v[0] = orbit.defects[slot(a - 1)](idx(k + s * a));
            for (std::size_t i = 0; i + 1 < len; ++i) v[i + 1] = coef[i] * v[i] + force[i];
        } else {
            h.assign(len, Complex{});
            h[0] = 1.0;
            for (std::size_t i = 0; i + 1 < len; ++i) h[i + 1] = coef[i] * h[i];
            std::size_t peak = 0;
            double hmin = std::abs(h[0]);
            for (std::size_t i = 1; i < len; ++i) {
                if (std::abs(h[i]) > std::abs(h[peak])) peak = i;
                hmin = std::min(hmin, std::abs(h[i]));
            }
            res.condition_estimate = std::max(res.condition_estimate, std::abs(h[peak]) / hmin);
            const Complex hp = h[peak];
            for (auto& x : h) x /= hp;
            // Particular solution vanishing at the peak, propagated outwards.
            for (std::size_t i = peak; i + 1 < len; ++i) v[i + 1] = coef[i] * v[i] + force[i];
            for (std::size_t i = peak; i-- > 0;) v[i] = (v[i + 1] - force[i]) / coef[i];
            Complex num{};
            double den = 0.0;
            for (std::size_t i = 0; i < len; ++i) {
                num += std::conj(h[i]) * v[i];
                den += std::norm(h[i]);
            }
            const Complex t = -num / den;
            for (std::size_t i = 0; i < len; ++i) v[i] += t * h[i];
        }
        for (std::int64_t n = a; n <= b; ++n)
            res.deviations[slot(n)](idx(k + s * n)) = v[static_cast<std::size_t>(n - a)];
    }
    for (const auto& u : res.deviations) {
        res.epsilon_achieved = std::max(res.epsilon_achieved, u.norm());
        res.objective += u.squaredNorm();
    }
    res.lsq_epsilon = res.epsilon_achieved;
    res.best_anchor = orbit.state(0) - res.deviations[slot(0)];
    return res;
}

namespace {

// Rows n = -N..N-1 (script_s) or -N+1..N (script_b); with extend, script_b
// also gets the rows n = -N and n = N+1 that a sequence supported on -N..N
// still reaches.
SparseMatrix windowed_sparse(const Operator& op, WindowKind kind, int N, std::int64_t M,
                             bool extend) {
    if (N < 1) throw std::invalid_argument("windowed_operator needs N >= 1");
    Matrix block;
    if (const auto* dense = std::get_if<DenseOperator>(&op)) {
        block = kind == WindowKind::script_s ? dense->matrix() : dense->adjoint().matrix();
    } else {
        if (M < 1) throw std::invalid_argument("shift windows need state half-width M >= 1");
        const auto& shift = std::get<ShiftOperator>(op);
        block = kind == WindowKind::script_s ? shift.materialize(M).matrix()
                                             : shift.adjoint().materialize(M).matrix();
    }
    const Eigen::Index d = block.rows();
    const Eigen::Index states = 2 * N + 1;
    const Eigen::Index offset = extend && kind == WindowKind::script_b ? 1 : 0;
    std::vector<Triplet> triplets;
    const auto put = [&](Eigen::Index row_block, Eigen::Index col_block, bool identity) {
        for (Eigen::Index i = 0; i < d; ++i) {
            if (identity) {
                triplets.emplace_back(row_block * d + i, col_block * d + i, Complex(1.0));
                continue;
            }
            for (Eigen::Index j = 0; j < d; ++j)
                if (block(i, j) != Complex{})
                    triplets.emplace_back(row_block * d + i, col_block * d + j, -block(i, j));
        }
    };
    for (Eigen::Index r = 0; r < 2 * N; ++r) {
        if (kind == WindowKind::script_s) {
            // row n = -N + r: x_{n+1} - T x_n
            put(r, r + 1, true);
            put(r, r, false);
        } else {
            // row n = -N + 1 + r: x_{n-1} - T* x_n
            put(r + offset, r, true);
            put(r + offset, r + 1, false);
        }
    }
    if (offset) {
        put(0, 0, false);                // n = -N: -T* x_{-N}
        put(2 * N + 1, 2 * N, true);     // n = N+1: x_N
    }
    SparseMatrix w((2 * N + 2 * offset) * d, states * d);
    w.setFromTriplets(triplets.begin(), triplets.end());
    return w;
}

// Smallest singular value of w on the side that must be injective (columns
// for a lower bound on |w x|, rows for surjectivity), computed block by block
// over the connected components of the sparsity pattern.
double blockwise_modulus(const SparseMatrix& w, bool surjective) {
    const Eigen::Index rows = w.rows();
    const Eigen::Index cols = w.cols();
    std::vector<Eigen::Index> parent(static_cast<std::size_t>(rows + cols));
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<Eigen::Index>(i);
    const auto find = [&](Eigen::Index x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            auto& p = parent[static_cast<std::size_t>(x)];
            p = parent[static_cast<std::size_t>(p)];
            x = p;
        }
        return x;
    };
    for (Eigen::Index c = 0; c < w.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(w, c); it; ++it)
            parent[static_cast<std::size_t>(find(it.row()))] = find(rows + c);

    struct Members {
        std::vector<Eigen::Index> rows, cols;
    };
    std::map<Eigen::Index, Members> blocks;
    std::vector<Eigen::Index> local(static_cast<std::size_t>(rows + cols));
    for (Eigen::Index r = 0; r < rows; ++r) {
        auto& m = blocks[find(r)];
        local[static_cast<std::size_t>(r)] = static_cast<Eigen::Index>(m.rows.size());
        m.rows.push_back(r);
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
        auto& m = blocks[find(rows + c)];
        local[static_cast<std::size_t>(rows + c)] = static_cast<Eigen::Index>(m.cols.size());
        m.cols.push_back(c);
    }

    double modulus = std::numeric_limits<double>::infinity();
    for (const auto& [root, m] : blocks) {
        const std::size_t need = surjective ? m.rows.size() : m.cols.size();
        const std::size_t have = surjective ? m.cols.size() : m.rows.size();
        if (need == 0) continue;
        if (have < need) return 0.0;
        Matrix sub = Matrix::Zero(static_cast<Eigen::Index>(m.rows.size()),
                                  static_cast<Eigen::Index>(m.cols.size()));
        for (Eigen::Index c : m.cols)
            for (SparseMatrix::InnerIterator it(w, c); it; ++it)
                sub(local[static_cast<std::size_t>(it.row())],
                    local[static_cast<std::size_t>(rows + c)]) = it.value();
        const Eigen::VectorXd sv = singular_values(sub);
        modulus = std::min(modulus, sv(sv.size() - 1));
    }
    return std::isfinite(modulus) ? modulus : 0.0;
}

}  // namespace

Matrix windowed_operator(const Operator& op, WindowKind kind, int N, std::int64_t M) {
    return Matrix(windowed_sparse(op, kind, N, M, false));
}

WindowProbe window_probe(const Operator& op, WindowKind kind, int N, std::int64_t M) {
    WindowProbe p;
    p.N = N;
    p.kind = kind;
    p.gain = blockwise_modulus(windowed_sparse(op, kind, N, M, true), kind == WindowKind::script_s);
    return p;
}

int test_sequence_length(double q) {
    if (!(q > 1.0)) throw std::invalid_argument("test sequence needs q > 1");
    return static_cast<int>(std::ceil(std::log(1e14) / std::log(q))) + 1;
}

TestSequenceGain bgain_test_sequence(const DenseOperator& op, const Vector& x, double q, int N) {
    return gain_from_vectors(x, op.adjoint().apply(x), q, N);
}

TestSequenceGain bgain_test_sequence(const ShiftOperator& op, const SupportedVector& x, double q,
                                     int N) {
    const SupportedVector adj_x = op.adjoint().apply(x);
    if (x.coefficients().empty()) throw std::invalid_argument("test sequence needs x != 0");
    std::int64_t lo = x.coefficients().begin()->first;
    std::int64_t hi = x.coefficients().rbegin()->first;
    if (!adj_x.coefficients().empty()) {
        lo = std::min(lo, adj_x.coefficients().begin()->first);
        hi = std::max(hi, adj_x.coefficients().rbegin()->first);
    }
    return gain_from_vectors(dense_from_support(x, lo, hi), dense_from_support(adj_x, lo, hi), q, N);
}

}  // namespace shadowspec
