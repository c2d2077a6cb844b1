#include "shadowspec_cli/cli.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "shadowspec/example17.hpp"
#include "shadowspec/projector.hpp"
#include "shadowspec/shadowing.hpp"
#include "shadowspec/spectral.hpp"

namespace shadowspec::cli {

namespace fs = std::filesystem;

namespace {

constexpr int kDefaultShadowWindow = 30;
constexpr int kDefaultProbeWindow = 16;
constexpr int kLaurentOrder = 6;
constexpr int kWitnessMaxDim = 8;
constexpr std::int64_t kProbeEigenHalfWidth = 20;

const char* yes_no(bool b) { return b ? "yes" : "no"; }

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void require_parent(const fs::path& p) {
    const fs::path parent = p.parent_path();
    if (!parent.empty() && !fs::is_directory(parent))
        throw InputError("output directory " + parent.string() + " does not exist");
}

void require_kind(const RunConfig& cfg, const Operator& op) {
    if (!cfg.kind) return;
    const char* actual = is_dense(op) ? "dense" : "shift";
    if (*cfg.kind != actual)
        throw InputError("--kind " + *cfg.kind + " does not match the " + actual + " operator in " +
                         cfg.input->string());
}

Operator load_input(const RunConfig& cfg) {
    Operator op = load_operator(*cfg.input);
    require_kind(cfg, op);
    return op;
}

void print_verdicts(std::ostream& out, const std::string& label, const SpectralReport& r) {
    out << std::left << std::setw(10) << label << std::setw(12) << yes_no(r.verdicts.hyperbolic)
        << std::setw(12) << yes_no(r.verdicts.uniformly_expansive) << std::setw(12)
        << yes_no(r.verdicts.shadowing) << r.gap_sigma << '\n';
}

void print_verdict_header(std::ostream& out) {
    out << std::left << std::setw(10) << "operator" << std::setw(12) << "hyperbolic"
        << std::setw(12) << "expansive" << std::setw(12) << "shadowing" << "gap_sigma\n";
}

Vector seeded_unit_vector(Eigen::Index dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Vector v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = Complex(normal(rng), normal(rng));
    return v / v.norm();
}

// Contour radius strictly between the eigenvalues within tol of the unit
// circle (or inside it) and the ones beyond it.
double fallback_radius(const std::vector<Complex>& eigs, double tol) {
    double inner = 0.0;
    double outer = std::numeric_limits<double>::infinity();
    for (Complex z : eigs) {
        const double m = std::abs(z);
        if (m <= 1.0 + tol)
            inner = std::max(inner, m);
        else
            outer = std::min(outer, m);
    }
    return std::isfinite(outer) ? 0.5 * (inner + outer) : 2.0 * std::max(inner, 1.0);
}

int nodes_for(const RunConfig& cfg, const std::vector<Complex>& eigs, double radius) {
    if (cfg.nodes) return *cfg.nodes;
    double dist = std::numeric_limits<double>::infinity();
    for (Complex z : eigs) dist = std::min(dist, std::abs(std::abs(z) - radius));
    return recommended_nodes(dist / radius);
}

std::vector<int> probe_sizes(int n_max) {
    std::vector<int> ns;
    for (int n = 1; n < n_max; n *= 2) ns.push_back(n);
    ns.push_back(n_max);
    return ns;
}

fs::path sibling(const fs::path& p, const std::string& suffix, const std::string& ext) {
    fs::path out = p;
    out.replace_filename(p.stem().string() + suffix + ext);
    return out;
}

}  // namespace

void RunConfig::validate() const {
    static const std::vector<std::string> commands{"analyze", "shadow", "probe", "example17"};
    if (std::find(commands.begin(), commands.end(), command) == commands.end())
        throw InputError("unknown command \"" + command + "\"");
    if (!(tol > 0.0) || !std::isfinite(tol)) throw InputError("--tol must be positive");
    if (!(delta >= 0.0) || !std::isfinite(delta)) throw InputError("--delta must be nonnegative");
    if (!(q > 1.0) || !std::isfinite(q)) throw InputError("--q must exceed 1");
    if (nodes) ContourConfig{1.0, *nodes}.validate();
    if (window && *window < 1) throw InputError("--window must be positive");
    if (kind && *kind != "dense" && *kind != "shift")
        throw InputError("--kind must be dense or shift");
    if (probe_kind != "script-s" && probe_kind != "script-b")
        throw InputError("--probe-kind must be script-s or script-b");
    if (command != "example17") {
        if (!input) throw InputError(command + " needs --input");
        if (!fs::is_regular_file(*input)) throw InputError("input " + input->string() + " not found");
    }
    if (projector && !fs::is_regular_file(*projector))
        throw InputError("projector " + projector->string() + " not found");
    if (output) require_parent(*output);
}

Json RunConfig::to_json() const {
    Json j{{"command", command},
           {"tol", tol},
           {"seed", seed},
           {"delta", delta},
           {"q", q},
           {"probe_kind", probe_kind}};
    j["input"] = input ? Json(input->generic_string()) : Json(nullptr);
    j["output"] = output ? Json(output->generic_string()) : Json(nullptr);
    j["projector"] = projector ? Json(projector->generic_string()) : Json(nullptr);
    j["nodes"] = nodes ? Json(*nodes) : Json(nullptr);
    j["window"] = window ? Json(*window) : Json(nullptr);
    j["kind"] = kind ? Json(*kind) : Json(nullptr);
    return j;
}

int cmd_analyze(const RunConfig& cfg, std::ostream& out) {
    const Operator op = load_input(cfg);
    SpectralReport rep = classify(op, cfg.tol);
    Json doc{{"config", cfg.to_json()}, {"operator", operator_to_json(op)}};

    if (const auto* shift = std::get_if<ShiftOperator>(&op)) {
        if (cfg.window) rep.window_eigenvalues = eigenvalues(shift->materialize(*cfg.window));
    } else {
        const auto& a = std::get<DenseOperator>(op);
        if (rep.verdicts.hyperbolic) {
            const ContourConfig contour{1.0, nodes_for(cfg, rep.eigenvalues, 1.0)};
            const LaurentTable table = laurent_table(a, kLaurentOrder, contour);
            doc["laurent"] = laurent_table_json(table);
            const LaurentRelations rel = verify_laurent_relations(a, table);
            doc["laurent_relations"] = {{"c0_residual", rel.c0_residual},
                                        {"positive_residual", rel.positive_residual},
                                        {"negative_residual", rel.negative_residual},
                                        {"threshold", rel.threshold},
                                        {"pass", rel.pass}};
        }
        if (a.dim() <= 64) {
            const DualityReport d = duality_check(a, cfg.tol);
            doc["duality"] = {{"grid_points", d.grid_points},
                              {"worst_singular_discrepancy", d.worst_singular_discrepancy},
                              {"verdict_mismatches", d.verdict_mismatches},
                              {"spectrum_discrepancy", d.spectrum_discrepancy},
                              {"non_surjective_points", d.non_surjective_points},
                              {"pass", d.pass}};
        }
        if (a.dim() <= kWitnessMaxDim) {
            const ExpansivityWitness w = expansivity_witness(a, 20, 512, cfg.seed);
            doc["expansivity_witness"] = {
                {"expansive_at", w.expansive_at ? Json(*w.expansive_at) : Json(nullptr)},
                {"sampled_minimum", w.sampled_minimum},
                {"n_tested", w.n_tested},
                {"advisory", true}};
        }
    }
    doc["report"] = spectral_report_json(rep);
    if (cfg.output) write_atomic(*cfg.output, dump(doc));

    if (!cfg.quiet) {
        print_verdict_header(out);
        print_verdicts(out, is_dense(op) ? "dense" : "shift", rep);
        if (rep.shift_spectra)
            out << "annulus " << std::setprecision(10) << rep.shift_spectra->annulus_inner << " .. "
                << rep.shift_spectra->annulus_outer << '\n';
    }
    return kOk;
}

int cmd_shadow(const RunConfig& cfg, std::ostream& out) {
    const Operator op = load_input(cfg);
    const auto* dense = std::get_if<DenseOperator>(&op);
    if (!dense) throw InputError("shadow needs a dense operator");
    const DenseOperator& a = *dense;
    const std::vector<Complex> eigs = eigenvalues(a);
    const double gap = unit_circle_gap(eigs);

    std::optional<DenseOperator> splitting;
    Json split_doc;
    if (cfg.projector) {
        const Operator b = load_operator(*cfg.projector);
        const auto* bd = std::get_if<DenseOperator>(&b);
        if (!bd || bd->dim() != a.dim()) throw InputError("projector must be a dense operator of matching dim");
        splitting = *bd;
        split_doc = {{"source", "file"}};
    } else {
        const double radius = gap > cfg.tol ? 1.0 : fallback_radius(eigs, cfg.tol);
        const ContourConfig contour{radius, nodes_for(cfg, eigs, radius)};
        splitting = riesz_projector(a, contour);
        split_doc = {{"source", "riesz_projector"}, {"radius", radius}, {"nodes", contour.nodes}};
    }

    const int n = cfg.window.value_or(kDefaultShadowWindow);
    const Vector x0 = seeded_unit_vector(a.dim(), cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    const PseudoOrbit orbit = generate_pseudo_orbit(a, x0, cfg.delta, Window::symmetric(n), cfg.seed);

    Json doc{{"config", cfg.to_json()},
             {"operator", operator_to_json(op)},
             {"splitting", split_doc},
             {"orbit", orbit_summary_json(orbit)}};
    ShadowResult shadow;
    try {
        shadow = construct_shadow(a, *splitting, orbit);
    } catch (const DecayCertificateError& e) {
        doc["certificate_failure"] = {{"message", e.what()}, {"decay", decay_rates_json(e.rates())}};
        if (cfg.output) write_atomic(*cfg.output, dump(doc));
        throw;
    }
    const OracleResult oracle = shadow_oracle_lsq(a, orbit);
    doc["constructive"] = shadow_result_json(shadow);
    doc["oracle"] = oracle_result_json(oracle);
    doc["checks"] = {{"within_bound", shadow.epsilon_achieved <= shadow.epsilon_bound + 1e-8},
                     {"oracle_dominates", oracle.epsilon_achieved <= shadow.epsilon_achieved + 1e-8}};
    if (cfg.output) write_atomic(*cfg.output, dump(doc));

    if (!cfg.quiet) {
        out << std::setprecision(6) << std::left << std::setw(24) << "epsilon (constructive)"
            << shadow.epsilon_achieved << '\n'
            << std::setw(24) << "epsilon bound" << shadow.epsilon_bound << '\n'
            << std::setw(24) << "epsilon (oracle)" << oracle.epsilon_achieved << '\n'
            << std::setw(24) << "q, K" << shadow.q_used << ", " << shadow.K_used << '\n'
            << std::setw(24) << "r_plus, r_minus" << shadow.rates.r_plus << ", "
            << shadow.rates.r_minus << '\n';
    }
    return kOk;
}

int cmd_probe(const RunConfig& cfg, std::ostream& out) {
    const Operator op = load_input(cfg);
    const WindowKind kind = cfg.probe_kind == "script-s" ? WindowKind::script_s : WindowKind::script_b;
    std::vector<WindowProbe> probes;
    for (int n : probe_sizes(cfg.window.value_or(kDefaultProbeWindow)))
        probes.push_back(window_probe(op, kind, n, 2 * n + 2));

    TestSequenceGain gain;
    if (const auto* a = std::get_if<DenseOperator>(&op)) {
        // Eigenvector of A* whose eigenvalue is closest to the unit circle.
        Eigen::ComplexEigenSolver<Matrix> es(a->adjoint().matrix());
        if (es.info() != Eigen::Success) throw ConvergenceError("eigen solver did not converge");
        Eigen::Index best = 0;
        for (Eigen::Index i = 1; i < es.eigenvalues().size(); ++i)
            if (std::abs(std::abs(es.eigenvalues()(i)) - 1.0) <
                std::abs(std::abs(es.eigenvalues()(best)) - 1.0))
                best = i;
        gain = bgain_test_sequence(*a, Vector(es.eigenvectors().col(best)), cfg.q);
    } else {
        const auto& s = std::get<ShiftOperator>(op);
        const ShiftSpectra adj = shift_spectra(s.adjoint());
        const bool unit_eigen = adj.point.shape == RadialSet::Shape::open_annulus &&
                                adj.point.inner < 1.0 && 1.0 < adj.point.outer;
        const SupportedVector x =
            unit_eigen ? truncated_eigenvector(s.adjoint(), 1.0, kProbeEigenHalfWidth) : SupportedVector::basis(0);
        gain = bgain_test_sequence(s, x, cfg.q);
    }

    if (cfg.output) {
        write_atomic(*cfg.output, probe_csv(probes));
        Json table = Json::array();
        for (const auto& p : probes) table.push_back({{"N", p.N}, {"gain", p.gain}});
        const Json side{{"config", cfg.to_json()},
                        {"operator", operator_to_json(op)},
                        {"norm", WindowProbe::norm_label},
                        {"probes", std::move(table)},
                        {"test_sequence", {{"q", cfg.q},
                                           {"gain_measured", gain.gain_measured},
                                           {"gain_identity", gain.gain_identity},
                                           {"N", gain.N}}}};
        write_atomic(sibling(*cfg.output, "", ".json"), dump(side));
    }
    if (!cfg.quiet) {
        out << cfg.probe_kind << " gains (" << WindowProbe::norm_label << ")\n";
        out << std::left << std::setw(8) << "N" << "gain\n" << std::setprecision(10);
        for (const auto& p : probes) out << std::setw(8) << p.N << p.gain << '\n';
        out << "test-sequence gain at q = " << cfg.q << ": " << gain.gain_measured
            << " (identity " << gain.gain_identity << ")\n";
    }
    return kOk;
}

int cmd_example17(const RunConfig& cfg, std::ostream& out) {
    Example17Config ex;
    ex.delta = cfg.delta;
    const Example17Report rep = run_example17(ex);
    Json doc = example17_json(rep);
    doc["config"] = cfg.to_json();
    if (cfg.output) {
        write_atomic(*cfg.output, dump(doc));
        std::ostringstream gains, trend;
        gains << std::setprecision(17) << "q,gain_measured,gain_identity\n";
        for (const auto& g : rep.gain_sweep)
            gains << g.q << ',' << g.gain.gain_measured << ',' << g.gain.gain_identity << '\n';
        trend << std::setprecision(17) << "N,epsilon_S,epsilon_T\n";
        for (const auto& p : rep.trend) trend << p.N << ',' << p.epsilon_s << ',' << p.epsilon_t << '\n';
        write_atomic(sibling(*cfg.output, "_gain", ".csv"), gains.str());
        write_atomic(sibling(*cfg.output, "_trend", ".csv"), trend.str());
    }
    if (!cfg.quiet) {
        const ShiftSpectra& sp = *rep.report_t.shift_spectra;
        out << std::setprecision(10) << "annulus radii " << sp.annulus_inner << " .. "
            << sp.annulus_outer << '\n';
        print_verdict_header(out);
        print_verdicts(out, "S", rep.report_s);
        print_verdicts(out, "T", rep.report_t);
        out << "\nq         gain(T)\n";
        for (const auto& g : rep.gain_sweep)
            out << std::setw(10) << g.q << g.gain.gain_measured << '\n';
        out << "\nN         eps(S)            eps(T)\n" << std::setprecision(6);
        for (const auto& p : rep.trend)
            out << std::setw(10) << p.N << std::setw(18) << p.epsilon_s << p.epsilon_t << '\n';
        out << '\n' << rep.trend_note << '\n';
    }
    return kOk;
}

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        cfg.validate();
        if (cfg.command == "analyze") return cmd_analyze(cfg, out);
        if (cfg.command == "shadow") return cmd_shadow(cfg, out);
        if (cfg.command == "probe") return cmd_probe(cfg, out);
        return cmd_example17(cfg, out);
    } catch (const DecayCertificateError& e) {
        err << "certificate failure: " << e.what() << '\n';
        return kCertificateFailure;
    } catch (const TailBoundError& e) {
        err << "certificate failure: " << e.what() << '\n';
        return kCertificateFailure;
    } catch (const std::invalid_argument& e) {
        err << "input error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumericalFailure;
    }
}

int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Spectral shadowing analysis of linear operators"};
    app.require_subcommand(1);
    RunConfig cfg;
    std::string input, output, projector, kind;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--output,-o", output, "report path (JSON, or CSV for probe)");
        sub->add_option("--tol", cfg.tol, "unit-circle gap tolerance");
        sub->add_option("--seed", cfg.seed, "random seed");
        sub->add_option("--nodes", cfg.nodes, "contour quadrature nodes (power of two)");
        sub->add_option("--window", cfg.window, "window half-width N");
        sub->add_option("--delta", cfg.delta, "pseudo-orbit defect size");
        sub->add_option("--q", cfg.q, "test-sequence ratio (> 1)");
        sub->add_flag("--quiet", cfg.quiet, "no table on standard output");
    };
    const auto add_input = [&](CLI::App* sub) {
        sub->add_option("--input,-i", input, "operator JSON");
        sub->add_option("--kind", kind, "expected operator kind: dense or shift");
    };
    CLI::App* analyze = app.add_subcommand("analyze", "spectral report and verdicts");
    CLI::App* shadow = app.add_subcommand("shadow", "constructive shadow of a random pseudo-orbit");
    CLI::App* probe = app.add_subcommand("probe", "windowed S/B gains (CSV)");
    CLI::App* ex17 = app.add_subcommand("example17", "weighted shift pair reproduction");
    for (CLI::App* sub : {analyze, shadow, probe, ex17}) add_common(sub);
    for (CLI::App* sub : {analyze, shadow, probe}) add_input(sub);
    shadow->add_option("--projector", projector, "splitting operator JSON (default: Riesz projector)");
    probe->add_option("--probe-kind", cfg.probe_kind, "script-s or script-b");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "input error: " << e.what() << '\n';
        return kInputError;
    }
    cfg.command = app.get_subcommands().front()->get_name();
    if (!input.empty()) cfg.input = input;
    if (!output.empty()) cfg.output = output;
    if (!projector.empty()) cfg.projector = projector;
    if (!kind.empty()) cfg.kind = kind;
    return run(cfg, out, err);
}

}  // namespace shadowspec::cli
