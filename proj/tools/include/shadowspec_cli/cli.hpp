#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "shadowspec/io.hpp"

namespace shadowspec::cli {

enum ExitCode : int {
    kOk = 0,
    kInputError = 2,
    kNumericalFailure = 3,
    kCertificateFailure = 4,
};

struct RunConfig {
    std::string command;
    std::optional<std::filesystem::path> input;
    std::optional<std::filesystem::path> output;
    std::optional<std::filesystem::path> projector;
    double tol = kDefaultGapTol;
    std::uint64_t seed = 1;
    std::optional<int> nodes;
    std::optional<int> window;
    double delta = 1e-3;
    double q = 1.05;
    std::optional<std::string> kind;    // dense | shift
    std::string probe_kind = "script-b";
    bool quiet = false;

    /// Throws InputError on violated invariants or unresolvable paths.
    void validate() const;
    Json to_json() const;
};

/// Runs one command; returns the process exit code. Reports go to
/// cfg.output, the human-readable summary to out and diagnostics to err.
int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Parses argv-style arguments (args[0] is the program name) and runs.
int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cmd_analyze(const RunConfig& cfg, std::ostream& out);
int cmd_shadow(const RunConfig& cfg, std::ostream& out);
int cmd_probe(const RunConfig& cfg, std::ostream& out);
int cmd_example17(const RunConfig& cfg, std::ostream& out);

}  // namespace shadowspec::cli
