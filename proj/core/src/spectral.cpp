#include "shadowspec/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace shadowspec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double radial_gap(double r) { return std::abs(r - 1.0); }

RadialSet circles(double inner, double outer) {
    return {RadialSet::Shape::circles, inner, outer};
}
RadialSet closed_annulus(double inner, double outer) {
    return {RadialSet::Shape::closed_annulus, inner, outer};
}
RadialSet open_annulus(double inner, double outer) {
    return {RadialSet::Shape::open_annulus, inner, outer};
}

// Kuhn's augmenting-path matching restricted to pairs with dist <= threshold.
bool perfect_matching(const std::vector<std::vector<double>>& dist, double threshold) {
    const std::size_t n = dist.size();
    std::vector<int> match_right(n, -1);
    std::vector<char> seen;
    auto augment = [&](auto&& self, std::size_t u) -> bool {
        for (std::size_t v = 0; v < n; ++v) {
            if (dist[u][v] > threshold || seen[v]) continue;
            seen[v] = 1;
            if (match_right[v] < 0 || self(self, static_cast<std::size_t>(match_right[v]))) {
                match_right[v] = static_cast<int>(u);
                return true;
            }
        }
        return false;
    };
    for (std::size_t u = 0; u < n; ++u) {
        seen.assign(n, 0);
        if (!augment(augment, u)) return false;
    }
    return true;
}

}  // namespace

double RadialSet::unit_circle_gap() const {
    switch (shape) {
        case Shape::empty:
            return kInf;
        case Shape::circles:
            return std::min(radial_gap(inner), radial_gap(outer));
        case Shape::closed_annulus:
        case Shape::open_annulus:
            if (inner <= 1.0 && 1.0 <= outer) return 0.0;
            return std::min(radial_gap(inner), radial_gap(outer));
    }
    return kInf;
}

std::vector<Complex> eigenvalues(const DenseOperator& a) {
    if (a.dim() > kMaxEigenDim) {
        std::ostringstream os;
        os << "eigenvalues: dim " << a.dim() << " exceeds " << kMaxEigenDim;
        throw DimensionError(os.str());
    }
    Eigen::ComplexEigenSolver<Matrix> solver(a.matrix(), /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
        throw ConvergenceError("eigenvalues: QR iteration did not converge");
    std::vector<Complex> out(solver.eigenvalues().begin(), solver.eigenvalues().end());
    std::sort(out.begin(), out.end(), [](Complex x, Complex y) {
        if (std::abs(x) != std::abs(y)) return std::abs(x) < std::abs(y);
        return std::arg(x) < std::arg(y);
    });
    return out;
}

double unit_circle_gap(const std::vector<Complex>& eigs) {
    double gap = kInf;
    for (Complex z : eigs) gap = std::min(gap, radial_gap(std::abs(z)));
    return gap;
}

double min_singular_value(const Matrix& a) {
    if (a.rows() < a.cols()) return 0.0;
    const Eigen::VectorXd s = singular_values(a);
    return s.size() == 0 ? 0.0 : s(s.size() - 1);
}

SpectralReport classify_dense(const DenseOperator& a, double tol) {
    if (!a.is_invertible()) {
        const double smin = min_singular_value(a);
        throw SingularOperatorError("classify_dense: operator is not invertible", smin);
    }
    SpectralReport r;
    r.tol = tol;
    r.eigenvalues = eigenvalues(a);
    r.gap_sigma = unit_circle_gap(r.eigenvalues);
    // In finite dimension sigma = sigma_a = sigma_r, and sigma(A*) = conj(sigma(A)).
    r.gap_approx_point = r.gap_sigma;
    r.gap_adjoint_approx = r.gap_sigma;
    const bool off_circle = r.gap_sigma > tol;
    r.verdicts = {off_circle, off_circle, off_circle};
    r.hyperbolic_reason =
        "hyperbolic iff sigma(T) misses the unit circle (Eisenberg-Hedlund criterion)";
    r.expansive_reason =
        "uniformly expansive iff sigma_a(T) misses the unit circle (Hedlund criterion); "
        "sigma_a = sigma in finite dimension";
    r.shadowing_reason =
        "shadowing iff sigma_r(T) misses the unit circle, equivalently T* uniformly "
        "expansive; sigma_r = sigma in finite dimension";
    return r;
}

ShiftSpectra shift_spectra(const ShiftOperator& op) {
    const double a = op.weight_pos;
    const double b = op.weight_neg;
    ShiftSpectra s;
    s.annulus_inner = std::min(a, b);
    s.annulus_outer = std::max(a, b);
    const double lo = s.annulus_inner;
    const double hi = s.annulus_outer;
    s.spectrum = closed_annulus(lo, hi);

    if (a == b) {
        s.spectrum = circles(a, a);
        s.approx_point = circles(a, a);
        s.adjoint_approx_point = circles(a, a);
        s.point = {};
        return s;
    }
    // Forward shift expanding on the positive side: no eigenvectors; its
    // adjoint has the open annulus as point spectrum. Otherwise reversed.
    // A backward shift is the adjoint of the forward shift with the same weights.
    const bool forward = op.direction == ShiftDirection::forward;
    const bool circles_for_op = forward ? a > b : a < b;
    if (circles_for_op) {
        s.approx_point = circles(lo, hi);
        s.point = {};
        s.adjoint_approx_point = closed_annulus(lo, hi);
    } else {
        s.approx_point = closed_annulus(lo, hi);
        s.point = open_annulus(lo, hi);
        s.adjoint_approx_point = circles(lo, hi);
    }
    return s;
}

SpectralReport classify_shift(const ShiftOperator& op, double tol) {
    SpectralReport r;
    r.tol = tol;
    r.shift_spectra = shift_spectra(op);
    const auto& s = *r.shift_spectra;
    r.gap_sigma = s.spectrum.unit_circle_gap();
    r.gap_approx_point = s.approx_point.unit_circle_gap();
    r.gap_adjoint_approx = s.adjoint_approx_point.unit_circle_gap();
    r.verdicts.hyperbolic = r.gap_sigma > tol;
    r.verdicts.uniformly_expansive = r.gap_approx_point > tol;
    r.verdicts.shadowing = r.gap_adjoint_approx > tol;
    r.hyperbolic_reason =
        "hyperbolic iff sigma(T) misses the unit circle (Eisenberg-Hedlund criterion)";
    r.expansive_reason =
        "uniformly expansive iff sigma_a(T) misses the unit circle (Hedlund criterion)";
    r.shadowing_reason =
        "shadowing iff sigma_a(T*) misses the unit circle, i.e. T* uniformly expansive "
        "(right-spectrum criterion on Hilbert space)";
    return r;
}

SpectralReport classify(const Operator& op, double tol) {
    if (const auto* d = std::get_if<DenseOperator>(&op)) return classify_dense(*d, tol);
    return classify_shift(std::get<ShiftOperator>(op), tol);
}

double multiset_distance(const std::vector<Complex>& a, const std::vector<Complex>& b) {
    if (a.size() != b.size()) throw DimensionError("multiset_distance: size mismatch");
    const std::size_t n = a.size();
    if (n == 0) return 0.0;
    std::vector<std::vector<double>> dist(n, std::vector<double>(n));
    std::vector<double> candidates;
    candidates.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            dist[i][j] = std::abs(a[i] - b[j]);
            candidates.push_back(dist[i][j]);
        }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    std::size_t lo = 0, hi = candidates.size() - 1;
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (perfect_matching(dist, candidates[mid]))
            hi = mid;
        else
            lo = mid + 1;
    }
    return candidates[lo];
}

DualityReport duality_check(const DenseOperator& a, double tol, int grid_points,
                            double spectrum_tol) {
    DualityReport rep;
    rep.grid_points = grid_points;
    const Eigen::Index n = a.dim();
    const Matrix& m = a.matrix();
    const Matrix m_adj = m.adjoint();
    const Matrix id = Matrix::Identity(n, n);
    for (int k = 0; k < grid_points; ++k) {
        const double theta = 2.0 * std::numbers::pi * k / grid_points;
        const Complex lambda = std::polar(1.0, theta);
        // Surjectivity of lambda I - A: its Gram matrix (lambda I - A)(lambda I - A)^*
        // is invertible exactly when a right inverse exists.
        const Matrix shifted = lambda * id - m;
        Eigen::SelfAdjointEigenSolver<Matrix> gram(shifted * shifted.adjoint(),
                                                   Eigen::EigenvaluesOnly);
        const double surj = std::sqrt(std::max(0.0, gram.eigenvalues()(0)));
        // Bounded-belowness of the adjoint at conj(lambda).
        const double below = min_singular_value(Matrix(std::conj(lambda) * id - m_adj));
        rep.worst_singular_discrepancy =
            std::max(rep.worst_singular_discrepancy, std::abs(surj - below));
        const bool surjective = surj > tol;
        const bool bounded_below = below > tol;
        if (!surjective) ++rep.non_surjective_points;
        if (surjective != bounded_below && std::abs(surj - below) > tol) ++rep.verdict_mismatches;
    }
    std::vector<Complex> right = eigenvalues(a);
    std::vector<Complex> adj = eigenvalues(a.adjoint());
    for (auto& z : adj) z = std::conj(z);
    rep.spectrum_discrepancy = multiset_distance(right, adj);
    rep.pass = rep.verdict_mismatches == 0 && rep.spectrum_discrepancy <= spectrum_tol;
    return rep;
}

ExpansivityWitness expansivity_witness(const DenseOperator& a, int n_max, int samples,
                                       std::uint64_t rng_seed) {
    if (n_max < 1) throw std::invalid_argument("expansivity_witness: n_max must be >= 1");
    if (samples < 1) throw std::invalid_argument("expansivity_witness: samples must be >= 1");
    const Eigen::Index dim = a.dim();
    const Matrix inv = a.inverse().matrix();
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> normal;
    auto random_unit = [&] {
        Vector x(dim);
        for (Eigen::Index i = 0; i < dim; ++i) x(i) = Complex(normal(rng), normal(rng));
        return Vector(x / x.norm());
    };

    constexpr int kPolished = 4;
    constexpr int kPolishSteps = 300;

    ExpansivityWitness out;
    Matrix fwd = Matrix::Identity(dim, dim);
    Matrix bwd = Matrix::Identity(dim, dim);
    for (int n = 1; n <= n_max; ++n) {
        fwd = a.matrix() * fwd;
        bwd = inv * bwd;
        auto objective = [&](const Vector& x) {
            return std::max((fwd * x).norm(), (bwd * x).norm());
        };

        std::vector<std::pair<double, Vector>> pool;
        pool.reserve(static_cast<std::size_t>(samples));
        for (int s = 0; s < samples; ++s) {
            Vector x = random_unit();
            pool.emplace_back(objective(x), std::move(x));
        }
        std::sort(pool.begin(), pool.end(),
                  [](const auto& l, const auto& r) { return l.first < r.first; });
        pool.resize(std::min<std::size_t>(pool.size(), kPolished));

        // Random-direction descent on the sphere with a shrinking step.
        for (auto& [value, x] : pool) {
            double step = 0.5;
            for (int it = 0; it < kPolishSteps && step > 1e-10; ++it) {
                Vector trial = x + step * random_unit();
                trial /= trial.norm();
                const double v = objective(trial);
                if (v < value) {
                    value = v;
                    x = std::move(trial);
                    step *= 1.5;
                } else {
                    step *= 0.8;
                }
            }
        }
        const auto best = std::min_element(pool.begin(), pool.end(), [](const auto& l, const auto& r) {
            return l.first < r.first;
        });
        out.n_tested = n;
        out.sampled_minimum = best->first;
        // Relative slack for rounding in |2x| with |x| = 1.
        if (best->first >= 2.0 * (1.0 - 1e-12)) {
            out.expansive_at = n;
            out.counterexample.resize(0);
            return out;
        }
        out.counterexample = best->second;
    }
    return out;
}

}  // namespace shadowspec
