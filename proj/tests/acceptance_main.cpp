#include <cstdlib>
#include <iostream>
#include <string>

#include "growlab/acceptance.hpp"

int main(int argc, char** argv) {
  growlab::AcceptanceOptions opts;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--workers" && i + 1 < argc) opts.workers = std::atoi(argv[++i]);
    else if (arg == "--only" && i + 1 < argc) opts.only.insert(std::atoi(argv[++i]));
  }
  const auto results = growlab::run_acceptance(opts, [](const growlab::CriterionResult& r) {
    std::cout << growlab::format_result(r) << std::endl;
  });
  int failed = 0;
  for (const auto& r : results) failed += !r.pass;
  std::cout << results.size() - failed << "/" << results.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
