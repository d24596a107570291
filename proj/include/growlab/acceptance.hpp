#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace growlab {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;  ///< one-line summary of the measured quantities
  double seconds = 0.0;
  nlohmann::json data;
};

struct AcceptanceOptions {
  std::uint64_t seed = 20240611;
  int workers = 1;
  std::set<int> only;  ///< empty runs every criterion
};

/// Runs acceptance criteria 1..11 in order, reporting each as it finishes.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts,
                                            const std::function<void(const CriterionResult&)>& on_result = {});

/// "[PASS] 3 bound soundness: ..." style line.
std::string format_result(const CriterionResult& r);

nlohmann::json acceptance_json(const std::vector<CriterionResult>& results);

}  // namespace growlab
