#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "growlab/common.hpp"
#include "growlab/families.hpp"
#include "growlab/rational.hpp"

namespace growlab {

/// Two-state chain on {A, B} tracking the parity environment of the walk.
struct TwoStateAnalysis {
  Rational theta;
  Rational eta;
  std::array<std::array<Rational, 2>, 2> matrix;  ///< rows A, B
  std::array<Rational, 2> stationary;             ///< u(A), u(B)
  Rational drift_a;
  Rational drift_b;
  Rational beta;  ///< u(A) drift_a + u(B) drift_b
  bool stationary_exact = false;  ///< u M == u in exact arithmetic

  nlohmann::json to_json() const;
};

/// Throws DomainError unless 0 <= theta, eta < 1.
TwoStateAnalysis two_state_analysis(const Rational& theta, const Rational& eta);

struct MergingOptions {
  std::int64_t t_max = 1000;
  double delta = 0.5;
  /// Row spacing in the recorded trace; 0 picks ceil(t_max / 10000).
  std::int64_t stride = 0;
  bool exact = false;
  /// Extra times recorded regardless of the stride.
  std::vector<std::int64_t> checkpoints;
};

struct MergingRow {
  std::int64_t t;
  double tv;
  double relsup;  ///< +inf when one start charges a state the other does not
};

struct MergingReport {
  int N = 0;
  Rational theta;
  Rational eta;
  Rational epsilon;
  double delta = 0.5;
  std::vector<MergingRow> rows;
  std::optional<std::int64_t> t_tv;   ///< first t with TV <= delta
  std::optional<std::int64_t> t_sup;  ///< first t with relative sup <= delta
  MergingRow final;
  bool budget_exhausted = false;      ///< t_max reached before both crossings
  double max_mass_drift = 0.0;
  bool exact = false;

  /// Distances at time t if it was recorded.
  std::optional<MergingRow> at(std::int64_t t) const;
  nlohmann::json to_json() const;
};

/// Evolves the laws started from 0 and from N through the periodic kernels.
/// Exact mode runs in rationals and is limited to kExactMergingSteps.
MergingReport merging_distances(const MergingChainSchedule& chain, const MergingOptions& opts,
                                const Budget& budget = {});

inline constexpr std::int64_t kExactMergingSteps = 4096;

/// TV and symmetrized relative sup between two laws on {0..N}.
MergingRow merging_distance(std::int64_t t, std::span<const double> p, std::span<const double> q);

/// First t <= t_max with TV <= delta, or nullopt.
std::optional<std::int64_t> tv_merging_time(const MergingChainSchedule& chain, double delta, std::int64_t t_max);

struct ConstraintCertificate {
  Rational epsilon;
  bool rows_stochastic = false;   ///< every kernel row sums to one exactly
  bool detailed_balance = false;  ///< mu K symmetric exactly, both parities
  bool within_envelope = false;   ///< all kernel, endpoint and measure constraints hold at epsilon
  bool pass = false;              ///< all of the above and epsilon < 1/6
  nlohmann::json to_json() const;
};

ConstraintCertificate certify_constraints(const MergingChainSchedule& chain);

struct ExcursionRow {
  int N;
  std::uint64_t hits;  ///< walkers with sigma_0 >= N/2
  double prob;
  double std_err;
  double log_prob;
};

struct ExcursionReport {
  Rational theta;
  Rational eta;
  std::uint64_t replicates = 0;
  std::vector<ExcursionRow> rows;
  double slope = NAN;  ///< of log P against N
  double intercept = NAN;
  double r_squared = NAN;
  bool decreasing = false;
  nlohmann::json to_json() const;
};

/// Monte Carlo P(sigma_0 >= N/2) from X_0 = 0, sigma_0 the first return time,
/// for each N in the grid.
ExcursionReport excursion_tail(std::span<const int> n_grid, const Rational& theta, const Rational& eta,
                               std::uint64_t replicates, std::uint64_t seed, const Budget& budget = {},
                               int workers = 1);

}  // namespace growlab
