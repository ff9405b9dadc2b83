#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hqlab/symmetric.hpp"

namespace hqlab {

struct RunConfig {
    std::string command;  ///< verify | minimize | solve | doubling | help
    std::string help_text;
    std::uint64_t seed = 1;
    long samples = 100000;
    std::vector<int> dims = {2, 3, 4, 5, 6};
    std::string out;
    std::string report;  ///< structured-text (JSON) report path
    std::string preset;
    std::optional<int> grid;
    std::optional<int> dim;
    std::optional<double> extent;
    std::optional<OperatorKind> kind;
    std::string instances;
    int trials = 0;
    std::string baseline;
    double baseline_tolerance = 0.05;
    unsigned workers = 0;
    double residual_tol = 1e-10;
    int max_newton_iters = 30;
    double damping = 0.5;
    bool cone_guard = true;
    double linear_solver_tol = 1e-10;
    std::string initial_guess = "quadratic_fit";
};

/// "3", "2,3,5" or "2-6" (ranges inclusive).
[[nodiscard]] std::vector<int> parse_dims(const std::string& text);

/// argv[0] is the program name. Flags override --config file values.
/// Throws UsageError on unknown commands, flags or config keys.
[[nodiscard]] RunConfig parse_config(const std::vector<std::string>& argv);

/// Runs the pipeline; returns 0 iff every check passed / every solve converged.
/// Module errors propagate.
int run(const RunConfig& cfg, std::ostream& out);

/// parse_config + run with the exit-status contract: 2 for usage errors,
/// 1 for other errors (name on `err`) and failed checks.
int main_entry(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace hqlab
