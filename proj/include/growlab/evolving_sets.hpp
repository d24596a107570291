#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "growlab/sequence.hpp"

namespace growlab {

/// {y in V_(t+1) : pi_t(S, y) / pi_(t+1)(y) > u}, ascending by id. Throws
/// StructuralError when some ratio exceeds one (the snapshots are not
/// monotone) or when S is not contained in V_t.
std::vector<VertexId> evolving_step(std::span<const VertexId> set, const GraphSnapshot& now,
                                    const GraphSnapshot& next, double u);

/// Index-level step on a timeline: `set` holds ascending indices into G_t,
/// the result ascending indices into G_(t+1). `numer` is scratch of at least
/// |G_t| zeros and is left zeroed.
void evolving_step_indices(const SnapshotTimeline& tl, std::int64_t t, std::span<const Index> set, double u,
                           std::vector<std::int64_t>& numer, std::vector<Index>& touched, std::vector<Index>& out);

struct PlainSetRun {
  std::uint64_t replicates = 0;
  std::int64_t x0_degree = 0;
  std::vector<std::vector<std::uint64_t>> membership;  ///< [t][index in G_t]
  std::vector<double> mean_weight;                     ///< mean pi_t(S_t)
  std::vector<double> weight_se;
  std::vector<double> extinct_fraction;

  double membership_prob(std::int64_t t, Index i) const;
  double membership_se(std::int64_t t, Index i) const;
};

PlainSetRun run_plain(const SnapshotTimeline& tl, VertexId x0, std::int64_t T, std::uint64_t replicates,
                      std::uint64_t seed, const Budget& budget = {}, int workers = 1);

struct SizeBiasedOptions {
  double alpha = 0.5;
  std::optional<std::int64_t> anchor;  ///< s; defaults to floor(T/2)
  double gamma = 0.5;                  ///< laziness used for c_+ in the contraction check
  /// phi_u(r); enables the contraction diagnostic when set.
  std::function<double(std::int64_t, double)> profile;
};

struct SizeBiasedRun {
  std::uint64_t replicates = 0;
  std::int64_t anchor = 0;
  double alpha = 0.5;
  double x0_bound = 1.0;  ///< pi_0(x0)^(alpha - 1)
  /// Likelihood-ratio weight pi_t(S_t)/pi_0(x0): mean (should be 1) and SE.
  std::vector<double> mean_lr;
  std::vector<double> lr_se;
  /// Weighted estimate of P(0, x0; t, y) as E^[pi_t(y)/pi_t(S) 1{y in S}], [t][index].
  std::vector<std::vector<double>> walk_estimate;
  std::vector<std::vector<double>> walk_se;
  /// L_u for u = anchor..T (index u - anchor).
  std::vector<double> L;
  std::vector<double> L_se;
  /// For u = anchor..T-1: E^[Z_(u+1)] and E^[Z_u (1 - c_+ phi_u(pi(S_u))^2)],
  /// with the SE of their difference.
  std::vector<double> contraction_lhs;
  std::vector<double> contraction_rhs;
  std::vector<double> contraction_se;
};

SizeBiasedRun run_size_biased(const SnapshotTimeline& tl, VertexId x0, std::int64_t T, std::uint64_t replicates,
                              std::uint64_t seed, const SizeBiasedOptions& opts = {}, const Budget& budget = {},
                              int workers = 1);

}  // namespace growlab
