#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shadowspec/example17.hpp"
#include "shadowspec/operators.hpp"
#include "shadowspec/projector.hpp"
#include "shadowspec/shadowing.hpp"
#include "shadowspec/spectral.hpp"

namespace shadowspec {

using Json = nlohmann::json;

/// Malformed or inconsistent input document.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Operator documents:
///   {"kind":"dense","dim":n,"entries":[[re,im],...]}   (n*n pairs, row-major)
///   {"kind":"shift","direction":"forward"|"backward","weight_pos":w,
///    "weight_neg":w,"crossover":k}                       (optional "phase":[re,im])
/// Entries may also be given as an array of n rows of [re,im] pairs.
Operator operator_from_json(const Json& doc);
Json operator_to_json(const Operator& op);
Operator load_operator(const std::filesystem::path& path);

Json complex_to_json(Complex z);
Complex complex_from_json(const Json& j);
Json matrix_to_json(const Matrix& m);  // rows of [re,im] pairs

Json spectral_report_json(const SpectralReport& rep);
Json laurent_table_json(const LaurentTable& table);
Json decay_rates_json(const DecayRates& rates);
Json orbit_summary_json(const PseudoOrbit& orbit);
Json shadow_result_json(const ShadowResult& res);
Json oracle_result_json(const OracleResult& res);
Json example17_json(const Example17Report& rep);

/// CSV with header "N,gain".
std::string probe_csv(const std::vector<WindowProbe>& probes);

/// Writes to a sibling temporary file and renames it over the target.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace shadowspec
