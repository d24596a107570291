#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "growlab/common.hpp"
#include "growlab/sequence.hpp"

namespace growlab {

/// Experiment names accepted in configs and as subcommands.
const std::vector<std::string>& experiment_names();

/// Fills defaults for the named experiment and rejects unknown keys or
/// mistyped values with a DomainError naming the field.
nlohmann::json resolve_config(const nlohmann::json& user);

/// FNV-1a over the canonical dump of a resolved config, as 16 hex digits.
std::string config_hash(const nlohmann::json& resolved);

/// Parses JSON text; malformed input raises DomainError with line and column.
nlohmann::json parse_config_text(const std::string& text);

/// Expands a "grid" object of {dotted.path: [values]} into one config per
/// point of the Cartesian product; a config without a grid maps to itself.
std::vector<nlohmann::json> expand_grid(const nlohmann::json& user);

/// Builds the graph family described by a resolved family block.
std::shared_ptr<GrowingGraphSequence> make_family(const nlohmann::json& family, const Budget& budget,
                                                  int workers = 1);

/// The lattice origin for lattice families, otherwise the smallest vertex of G_0.
VertexId default_root(const GrowingGraphSequence& seq);

struct RunOutcome {
  int exit_code = 0;  ///< 0 success, 1 validation error, 2 budget exhausted
  std::filesystem::path directory;
  std::string message;
};

/// Runs a resolved config, writing CSVs, summary.json and config.json under
/// <out>/<name>/<hash>/. Progress lines go to `log`.
RunOutcome run_experiment(const nlohmann::json& resolved, std::ostream& log);

/// Expands the grid, resolves and runs every point; validation failures
/// become exit code 1. The exit code is the largest over the points.
std::vector<RunOutcome> run_config(const nlohmann::json& user, std::ostream& log);

}  // namespace growlab
