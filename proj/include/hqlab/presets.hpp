#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hqlab/pde.hpp"

namespace hqlab {

/// Named manufactured problems used by the CLI, the tests and the doubling
/// family. Every preset carries its exact solution.
struct Preset {
    std::string name;
    int dim = 2;
    Box domain;
    OperatorKind default_kind = OperatorKind::Quotient;
    bool kind_fixed = false;  ///< gradient-dependent psi only exists for sigma2
    int default_grid = 33;
    ManufacturedField exact;
};

[[nodiscard]] std::vector<std::string> preset_names();
/// The "doublingNN" members, in order.
[[nodiscard]] std::vector<std::string> doubling_family_names();

/// Throws UsageError for unknown names.
[[nodiscard]] Preset find_preset(const std::string& name);

/// Builds the problem. `kind` overrides the preset default; a gradient
/// dependent preset rejects the quotient operator. Presets whose field leaves
/// Gamma_2 raise ConeViolation here.
[[nodiscard]] ProblemSpec make_problem(const Preset& preset, std::optional<OperatorKind> kind = std::nullopt);

}  // namespace hqlab
