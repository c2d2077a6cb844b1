#include "shadowspec/projector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "shadowspec/parallel.hpp"
#include "shadowspec/spectral.hpp"

namespace shadowspec {

namespace {

constexpr int kMaxLaurentIndex = 64;
constexpr int kMaxNodes = 1 << 22;
constexpr std::size_t kChunkPoints = 4096;

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

double distance_to_circle(const std::vector<Complex>& eigs, double radius) {
    double d = std::numeric_limits<double>::infinity();
    for (Complex z : eigs) d = std::min(d, std::abs(std::abs(z) - radius));
    return d;
}

Matrix unchecked_resolvent(const Matrix& a, Complex lambda) {
    const Eigen::Index n = a.rows();
    Matrix shifted = -a;
    shifted.diagonal().array() += lambda;
    return shifted.partialPivLu().solve(Matrix::Identity(n, n));
}

// Pairwise sum of weights[j] * terms[j] for j in [lo, hi) with a fixed tree,
// so the rounding pattern does not depend on thread scheduling.
Matrix pairwise_sum(const std::vector<Matrix>& terms, const std::vector<Complex>& weights,
                    std::size_t lo, std::size_t hi, std::size_t stride) {
    const std::size_t count = (hi - lo + stride - 1) / stride;
    if (count == 1) return weights[lo] * terms[lo];
    if (count == 2) return weights[lo] * terms[lo] + weights[lo + stride] * terms[lo + stride];
    const std::size_t mid = lo + (count / 2) * stride;
    return pairwise_sum(terms, weights, lo, mid, stride) +
           pairwise_sum(terms, weights, mid, hi, stride);
}

struct CoefficientPair {
    Matrix coarse;  // cfg.nodes rule
    Matrix fine;    // 2 * cfg.nodes rule
};

// Samples the resolvent on 2 * cfg.nodes equispaced points of the contour (the
// even-indexed ones form the cfg.nodes rule) and returns C_n for each
// requested n under both rules. Points are processed in fixed chunks so memory
// stays bounded; the summation tree is fixed, so results do not depend on
// thread scheduling.
std::map<int, CoefficientPair> contour_coefficients(const DenseOperator& a, const ContourConfig& cfg,
                                                    const std::vector<int>& indices) {
    cfg.validate();
    check_contour(a, cfg);
    const std::size_t fine = 2 * static_cast<std::size_t>(cfg.nodes);
    const std::size_t chunk = std::min<std::size_t>(fine, kChunkPoints);
    const std::size_t chunks = fine / chunk;
    const std::size_t k = indices.size();

    std::vector<Matrix> partial_fine(k * chunks), partial_coarse(k * chunks);
    std::vector<Complex> points(chunk);
    std::vector<Matrix> resolvents(chunk);
    std::vector<Complex> weights(chunk);
    for (std::size_t c = 0; c < chunks; ++c) {
        for (std::size_t j = 0; j < chunk; ++j)
            points[j] = std::polar(cfg.radius, 2.0 * std::numbers::pi *
                                                   static_cast<double>(c * chunk + j) /
                                                   static_cast<double>(fine));
        parallel_for(chunk, [&](std::size_t j) {
            resolvents[j] = unchecked_resolvent(a.matrix(), points[j]);
        });
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < chunk; ++j) weights[j] = std::pow(points[j], -indices[i]);
            partial_fine[i * chunks + c] = pairwise_sum(resolvents, weights, 0, chunk, 1);
            partial_coarse[i * chunks + c] = pairwise_sum(resolvents, weights, 0, chunk, 2);
        }
    }

    const std::vector<Complex> ones(chunks, Complex(1.0));
    std::map<int, CoefficientPair> out;
    for (std::size_t i = 0; i < k; ++i) {
        const std::vector<Matrix> f(partial_fine.begin() + static_cast<std::ptrdiff_t>(i * chunks),
                                    partial_fine.begin() + static_cast<std::ptrdiff_t>((i + 1) * chunks));
        const std::vector<Matrix> g(partial_coarse.begin() + static_cast<std::ptrdiff_t>(i * chunks),
                                    partial_coarse.begin() + static_cast<std::ptrdiff_t>((i + 1) * chunks));
        CoefficientPair pair;
        pair.fine = pairwise_sum(f, ones, 0, chunks, 1) / static_cast<double>(fine);
        pair.coarse = pairwise_sum(g, ones, 0, chunks, 1) / static_cast<double>(fine / 2);
        out.emplace(indices[i], std::move(pair));
    }
    return out;
}

void require_laurent_index(int n) {
    if (n < -kMaxLaurentIndex || n > kMaxLaurentIndex) {
        std::ostringstream os;
        os << "Laurent index " << n << " outside [-" << kMaxLaurentIndex << ", "
           << kMaxLaurentIndex << "]";
        throw std::invalid_argument(os.str());
    }
}

// Rescales M to unit Frobenius norm and accumulates the log scale. Returns
// false when M vanished.
bool renormalize(Matrix& m, double& log_scale) {
    const double f = m.norm();
    if (!(f > 0.0) || !std::isfinite(f)) return false;
    log_scale += std::log(f);
    m /= f;
    return true;
}

double tail_rate(const DenseOperator& step_op, const Matrix& start, const Matrix* projector,
                 int n_max) {
    Matrix p = start;
    double log_scale = 0.0;
    if (!renormalize(p, log_scale)) return 0.0;
    double log_rate = -std::numeric_limits<double>::infinity();
    for (int n = 1; n <= n_max; ++n) {
        p = step_op.matrix() * p;
        if (projector) p = (*projector) * p;
        if (!renormalize(p, log_scale)) break;
        // |P|_2 <= |P|_F = exp(log_scale), so the SVD only matters when the
        // Frobenius norm could raise the maximum.
        if (2 * n > n_max && log_scale / n > log_rate)
            log_rate = std::max(log_rate, (log_scale + std::log(operator_norm(p))) / n);
    }
    return std::exp(log_rate);
}

}  // namespace

void ContourConfig::validate() const {
    if (!(radius > 0.0) || !std::isfinite(radius))
        throw std::invalid_argument("contour radius must be positive");
    if (nodes < 16 || !is_power_of_two(nodes))
        throw std::invalid_argument("contour nodes must be a power of two >= 16");
}

double ContourConfig::spacing_guard() const {
    return 2.0 * std::numbers::pi * radius / nodes;
}

DenseOperator resolvent(const DenseOperator& a, Complex lambda) {
    double dist = std::numeric_limits<double>::infinity();
    for (Complex z : eigenvalues(a)) dist = std::min(dist, std::abs(lambda - z));
    if (dist < 1e-10) {
        std::ostringstream os;
        os << "resolvent: lambda is within " << dist << " of the spectrum";
        throw NearSingularResolventError(os.str(), dist);
    }
    return DenseOperator(unchecked_resolvent(a.matrix(), lambda));
}

double check_contour(const DenseOperator& a, const ContourConfig& cfg) {
    const double dist = distance_to_circle(eigenvalues(a), cfg.radius);
    if (!(dist > cfg.spacing_guard())) {
        std::ostringstream os;
        os << "contour |lambda| = " << cfg.radius << " passes within " << dist
           << " of the spectrum (guard " << cfg.spacing_guard() << ")";
        throw ContourError(os.str(), dist);
    }
    return dist;
}

int recommended_nodes(double gap, double target) {
    if (!(gap > 0.0)) return kMaxNodes;
    // Aliasing error of the trapezoid rule decays like (1 + gap)^{-nodes}.
    const double needed = std::max(std::log(1.0 / target) / std::log1p(gap),
                                   4.0 * std::numbers::pi / gap);
    int nodes = 256;
    while (nodes < needed && nodes < kMaxNodes) nodes *= 2;
    return nodes;
}

QuadratureResult laurent_coefficient(const DenseOperator& a, int n, const ContourConfig& cfg) {
    require_laurent_index(n);
    CoefficientPair c = std::move(contour_coefficients(a, cfg, {n}).at(n));
    const double change = max_entry(c.fine - c.coarse);
    return QuadratureResult{DenseOperator(std::move(c.coarse)), change, cfg.nodes};
}

DenseOperator riesz_projector(const DenseOperator& a, const ContourConfig& cfg) {
    return laurent_coefficient(a, -1, cfg).coefficient;
}

bool is_commuting_projector(const DenseOperator& a, const DenseOperator& b) {
    if (a.dim() != b.dim()) throw DimensionError("operator and splitting differ in dimension");
    const Matrix& am = a.matrix();
    const Matrix& bm = b.matrix();
    const double scale_b = std::max(1.0, max_entry(bm));
    const double scale_ab = std::max(1.0, max_entry(am) * scale_b) * static_cast<double>(a.dim());
    return max_entry(bm * bm - bm) <= 1e-9 * scale_b * static_cast<double>(a.dim()) &&
           max_entry(am * bm - bm * am) <= 1e-9 * scale_ab;
}

DecayRates decay_rates(const DenseOperator& a, const DenseOperator& b, int n_max) {
    if (n_max < 8) throw std::invalid_argument("decay_rates needs n_max >= 8");
    const Eigen::Index n = a.dim();
    const Matrix complement = Matrix::Identity(n, n) - b.matrix();
    const DenseOperator inv = a.inverse();
    DecayRates r;
    r.n_max = n_max;
    r.projected = is_commuting_projector(a, b);
    r.r_plus = tail_rate(a, b.matrix(), r.projected ? &b.matrix() : nullptr, n_max);
    r.r_minus = tail_rate(inv, complement, r.projected ? &complement : nullptr, n_max);
    return r;
}

SplitPowers split_powers(const DenseOperator& a, const DenseOperator& b, int count) {
    if (count < 1) throw std::invalid_argument("split_powers needs count >= 1");
    const Eigen::Index n = a.dim();
    const Matrix complement = Matrix::Identity(n, n) - b.matrix();
    const Matrix inv = a.inverse().matrix();
    SplitPowers sp;
    sp.projected = is_commuting_projector(a, b);
    sp.forward.reserve(static_cast<std::size_t>(count));
    sp.backward.reserve(static_cast<std::size_t>(count));
    sp.forward.push_back(b.matrix());
    sp.backward.push_back(complement);
    for (int k = 1; k < count; ++k) {
        Matrix f = a.matrix() * sp.forward.back();
        Matrix g = inv * sp.backward.back();
        if (sp.projected) {
            f = b.matrix() * f;
            g = complement * g;
        }
        sp.forward.push_back(std::move(f));
        sp.backward.push_back(std::move(g));
    }
    return sp;
}

LaurentTable laurent_table(const DenseOperator& a, int n_max, const ContourConfig& cfg,
                           int decay_order) {
    if (n_max < 1) throw std::invalid_argument("laurent_table needs n_max >= 1");
    require_laurent_index(n_max);
    std::vector<int> indices;
    for (int n = -n_max; n <= n_max; ++n) indices.push_back(n);
    auto coeffs = contour_coefficients(a, cfg, indices);
    LaurentTable t;
    t.n_max = n_max;
    t.radius = cfg.radius;
    t.nodes = cfg.nodes;
    for (int n = -n_max; n <= n_max; ++n) {
        CoefficientPair& c = coeffs.at(n);
        t.doubling_residual = std::max(t.doubling_residual, max_entry(c.fine - c.coarse));
        t.coefficients.emplace(n, std::move(c.coarse));
    }
    t.decay = decay_rates(a, DenseOperator(t.at(-1)), std::max(8, decay_order));
    return t;
}

LaurentRelations verify_laurent_relations(const DenseOperator& a, const LaurentTable& table,
                                          double threshold) {
    if (table.n_max < 3) throw std::invalid_argument("verify_laurent_relations needs n_max >= 3");
    const Eigen::Index dim = a.dim();
    const Matrix id = Matrix::Identity(dim, dim);
    const Matrix inv = a.inverse().matrix();
    const Matrix& c_minus1 = table.at(-1);
    const Matrix& c0 = table.at(0);

    LaurentRelations rel;
    rel.threshold = threshold;
    rel.c0_residual = max_entry(c0 + inv * (id - c_minus1));

    Matrix inv_power = inv;  // A^{-n}
    for (int n = 1; n <= table.n_max; ++n) {
        rel.positive_residual =
            std::max(rel.positive_residual, max_entry(table.at(n) - inv_power * c0));
        inv_power = inv * inv_power;
    }
    Matrix power = id;  // A^{n-1}
    for (int n = 1; n <= table.n_max; ++n) {
        rel.negative_residual =
            std::max(rel.negative_residual, max_entry(table.at(-n) - power * c_minus1));
        power = a.matrix() * power;
    }
    rel.pass = rel.c0_residual < threshold && rel.positive_residual < threshold &&
               rel.negative_residual < threshold;
    return rel;
}

}  // namespace shadowspec
