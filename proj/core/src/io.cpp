#include "shadowspec/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <system_error>

namespace shadowspec {

namespace {

const char* shape_name(RadialSet::Shape s) {
    switch (s) {
        case RadialSet::Shape::empty: return "empty";
        case RadialSet::Shape::circles: return "circles";
        case RadialSet::Shape::closed_annulus: return "closed_annulus";
        case RadialSet::Shape::open_annulus: return "open_annulus";
    }
    return "unknown";
}

// JSON has no infinity; an empty set is infinitely far from the circle.
Json finite_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json radial_set_json(const RadialSet& r) {
    Json j{{"shape", shape_name(r.shape)}};
    if (r.shape != RadialSet::Shape::empty) {
        j["inner"] = r.inner;
        j["outer"] = r.outer;
    }
    return j;
}

Json complex_list(const std::vector<Complex>& zs) {
    Json arr = Json::array();
    for (Complex z : zs) arr.push_back(complex_to_json(z));
    return arr;
}

template <class T>
T required(const Json& doc, const char* key) {
    if (!doc.contains(key)) throw InputError(std::string("operator document lacks \"") + key + "\"");
    try {
        return doc.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw InputError(std::string("bad value for \"") + key + "\": " + e.what());
    }
}

DenseOperator dense_from_json(const Json& doc) {
    const auto dim = required<std::int64_t>(doc, "dim");
    if (dim < 1) throw InputError("dense operator needs dim >= 1");
    if (!doc.contains("entries") || !doc["entries"].is_array())
        throw InputError("dense operator lacks an \"entries\" array");
    const Json& e = doc["entries"];
    std::vector<Complex> flat;
    const bool nested = !e.empty() && e[0].is_array() && !e[0].empty() && e[0][0].is_array();
    if (nested) {
        if (static_cast<std::int64_t>(e.size()) != dim) throw InputError("entries must have dim rows");
        for (const auto& row : e) {
            if (!row.is_array() || static_cast<std::int64_t>(row.size()) != dim)
                throw InputError("each entries row must have dim pairs");
            for (const auto& z : row) flat.push_back(complex_from_json(z));
        }
    } else {
        if (static_cast<std::int64_t>(e.size()) != dim * dim)
            throw InputError("entries must hold dim*dim [re,im] pairs");
        for (const auto& z : e) flat.push_back(complex_from_json(z));
    }
    Matrix m(dim, dim);
    for (std::int64_t i = 0; i < dim; ++i)
        for (std::int64_t k = 0; k < dim; ++k) m(i, k) = flat[static_cast<std::size_t>(i * dim + k)];
    if (!m.allFinite()) throw InputError("dense operator has non-finite entries");
    return DenseOperator(std::move(m));
}

ShiftOperator shift_from_json(const Json& doc) {
    const auto dir = required<std::string>(doc, "direction");
    ShiftDirection d;
    if (dir == "forward")
        d = ShiftDirection::forward;
    else if (dir == "backward")
        d = ShiftDirection::backward;
    else
        throw InputError("shift direction must be \"forward\" or \"backward\"");
    const auto wp = required<double>(doc, "weight_pos");
    const auto wn = required<double>(doc, "weight_neg");
    const std::int64_t cross = doc.contains("crossover") ? required<std::int64_t>(doc, "crossover") : 0;
    const Complex phase = doc.contains("phase") ? complex_from_json(doc["phase"]) : Complex(1.0);
    try {
        return ShiftOperator(d, wp, wn, cross, phase);
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
}

}  // namespace

Json complex_to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

Complex complex_from_json(const Json& j) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw InputError("complex numbers are written as [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

Json matrix_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(complex_to_json(m(i, k)));
        rows.push_back(std::move(row));
    }
    return rows;
}

Operator operator_from_json(const Json& doc) {
    if (!doc.is_object()) throw InputError("operator document must be a JSON object");
    const auto kind = required<std::string>(doc, "kind");
    if (kind == "dense") return dense_from_json(doc);
    if (kind == "shift") return shift_from_json(doc);
    throw InputError("operator kind must be \"dense\" or \"shift\"");
}

Json operator_to_json(const Operator& op) {
    if (const auto* d = std::get_if<DenseOperator>(&op)) {
        Json entries = Json::array();
        const Matrix& m = d->matrix();
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index k = 0; k < m.cols(); ++k) entries.push_back(complex_to_json(m(i, k)));
        return {{"kind", "dense"}, {"dim", m.rows()}, {"entries", std::move(entries)}};
    }
    const auto& s = std::get<ShiftOperator>(op);
    Json j{{"kind", "shift"},
           {"direction", s.direction == ShiftDirection::forward ? "forward" : "backward"},
           {"weight_pos", s.weight_pos},
           {"weight_neg", s.weight_neg},
           {"crossover", s.crossover}};
    if (s.phase != Complex(1.0)) j["phase"] = complex_to_json(s.phase);
    return j;
}

Operator load_operator(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open operator file " + path.string());
    Json doc;
    try {
        in >> doc;
    } catch (const Json::parse_error& e) {
        throw InputError("operator file " + path.string() + " is not valid JSON: " + e.what());
    }
    return operator_from_json(doc);
}

Json spectral_report_json(const SpectralReport& rep) {
    Json j;
    j["tol"] = rep.tol;
    j["gap_sigma"] = finite_or_null(rep.gap_sigma);
    j["gap_approx_point"] = finite_or_null(rep.gap_approx_point);
    j["gap_adjoint_approx_point"] = finite_or_null(rep.gap_adjoint_approx);
    j["verdicts"] = {{"hyperbolic", rep.verdicts.hyperbolic},
                     {"uniformly_expansive", rep.verdicts.uniformly_expansive},
                     {"shadowing", rep.verdicts.shadowing}};
    j["justification"] = {{"hyperbolic", rep.hyperbolic_reason},
                          {"uniformly_expansive", rep.expansive_reason},
                          {"shadowing", rep.shadowing_reason}};
    if (rep.shift_spectra) {
        const ShiftSpectra& s = *rep.shift_spectra;
        j["spectra"] = {{"annulus_inner", s.annulus_inner},
                        {"annulus_outer", s.annulus_outer},
                        {"spectrum", radial_set_json(s.spectrum)},
                        {"approx_point", radial_set_json(s.approx_point)},
                        {"point", radial_set_json(s.point)},
                        {"adjoint_approx_point", radial_set_json(s.adjoint_approx_point)}};
        if (!rep.window_eigenvalues.empty())
            j["window_artifact_eigenvalues"] = complex_list(rep.window_eigenvalues);
    } else {
        j["eigenvalues"] = complex_list(rep.eigenvalues);
    }
    return j;
}

Json decay_rates_json(const DecayRates& rates) {
    return {{"r_plus", rates.r_plus},
            {"r_minus", rates.r_minus},
            {"n_max", rates.n_max},
            {"projected", rates.projected},
            {"certified", rates.certified()}};
}

Json laurent_table_json(const LaurentTable& table) {
    Json coeffs = Json::array();
    for (const auto& [n, c] : table.coefficients)
        coeffs.push_back({{"n", n}, {"matrix", matrix_to_json(c)}});
    return {{"n_max", table.n_max},
            {"radius", table.radius},
            {"nodes", table.nodes},
            {"doubling_residual", table.doubling_residual},
            {"r_plus", table.decay.r_plus},
            {"r_minus", table.decay.r_minus},
            {"decay", decay_rates_json(table.decay)},
            {"coefficients", std::move(coeffs)}};
}

Json orbit_summary_json(const PseudoOrbit& orbit) {
    return {{"window", {orbit.window.lo, orbit.window.hi}},
            {"delta", orbit.delta},
            {"defect_norms", orbit.defect_norms()},
            {"defect_sup", orbit.defect_sup()}};
}

Json shadow_result_json(const ShadowResult& res) {
    Json anchor = Json::array();
    for (Eigen::Index i = 0; i < res.anchor.size(); ++i) anchor.push_back(complex_to_json(res.anchor(i)));
    return {{"anchor", std::move(anchor)},
            {"epsilon_achieved", res.epsilon_achieved},
            {"epsilon_bound", res.epsilon_bound},
            {"q", res.q_used},
            {"K", res.K_used},
            {"tail_K", res.tail_K},
            {"recurrence_residual", res.recurrence_residual},
            {"decay", decay_rates_json(res.rates)}};
}

Json oracle_result_json(const OracleResult& res) {
    Json anchor = Json::array();
    for (Eigen::Index i = 0; i < res.best_anchor.size(); ++i)
        anchor.push_back(complex_to_json(res.best_anchor(i)));
    return {{"best_anchor", std::move(anchor)},
            {"epsilon_achieved", res.epsilon_achieved},
            {"least_squares_epsilon", res.lsq_epsilon},
            {"least_squares_objective", res.objective},
            {"condition_estimate", finite_or_null(res.condition_estimate)}};
}

Json example17_json(const Example17Report& rep) {
    Json gains = Json::array();
    for (const auto& g : rep.gain_sweep)
        gains.push_back({{"q", g.q},
                         {"gain_measured", g.gain.gain_measured},
                         {"gain_identity", g.gain.gain_identity},
                         {"N", g.gain.N}});
    Json trend = Json::array();
    for (const auto& p : rep.trend)
        trend.push_back({{"N", p.N},
                         {"state_half_width", p.state_half_width},
                         {"epsilon_S", p.epsilon_s},
                         {"epsilon_T", p.epsilon_t}});
    return {{"T", spectral_report_json(rep.report_t)},
            {"S", spectral_report_json(rep.report_s)},
            {"gain_sweep_T", std::move(gains)},
            {"oracle_trend", std::move(trend)},
            {"trend_note", rep.trend_note},
            {"delta", rep.config.delta},
            {"eigenvector_half_width", rep.config.eigen_half_width},
            {"verdict_table",
             {{"S", {{"hyperbolic", rep.report_s.verdicts.hyperbolic},
                     {"uniformly_expansive", rep.report_s.verdicts.uniformly_expansive},
                     {"shadowing", rep.report_s.verdicts.shadowing}}},
              {"T", {{"hyperbolic", rep.report_t.verdicts.hyperbolic},
                     {"uniformly_expansive", rep.report_t.verdicts.uniformly_expansive},
                     {"shadowing", rep.report_t.verdicts.shadowing}}},
              {"matches_expected", rep.verdicts_match}}}};
}

std::string probe_csv(const std::vector<WindowProbe>& probes) {
    std::ostringstream os;
    os << "N,gain\n" << std::setprecision(17);
    for (const auto& p : probes) os << p.N << ',' << p.gain << '\n';
    return os.str();
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
    namespace fs = std::filesystem;
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write " + tmp.string());
        out << contents;
        out.flush();
        if (!out) throw InputError("short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw InputError("cannot move output into place at " + path.string());
    }
}

}  // namespace shadowspec
