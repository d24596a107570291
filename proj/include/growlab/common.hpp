#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace growlab {

using VertexId = std::int64_t;
using Index = std::uint32_t;

/// Malformed or inconsistent graph data: asymmetric multiplicities, a vertex
/// that vanished between snapshots, a ratio above one in the set dynamics.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on parameters was violated.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A configured resource cap would be exceeded. `at` names the offending
/// time step (or -1 when the cap is not tied to a step).
class BudgetError : public std::runtime_error {
 public:
  BudgetError(const std::string& what, std::int64_t at = -1)
      : std::runtime_error(what), at_(at) {}
  std::int64_t at() const noexcept { return at_; }

 private:
  std::int64_t at_;
};

struct Budget {
  std::size_t state_cap = 500'000;
  std::int64_t step_cap = 10'000'000;
  std::uint64_t replicate_cap = 1'000'000;
  int enumeration_cap = 20;
};

}  // namespace growlab
