#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "growlab/rational.hpp"
#include "growlab/rng.hpp"
#include "growlab/sequence.hpp"

namespace growlab {

/// Row y -> pi(x,y)/pi(x), ascending by y.
std::vector<std::pair<VertexId, double>> step_kernel(const GraphSnapshot& g, VertexId x);
std::vector<std::pair<VertexId, Rational>> step_kernel_exact(const GraphSnapshot& g, VertexId x);

/// out = in * K for the snapshot's kernel, indexed by the snapshot's indices.
template <class Scalar>
void apply_kernel(const GraphSnapshot& g, std::span<const Scalar> in, std::vector<Scalar>& out) {
  out.assign(g.size(), Scalar(0));
  for (Index i = 0; i < g.size(); ++i) {
    if (in[i] == 0) continue;
    const Scalar share = in[i] / Scalar(g.degree(i));
    for (const auto& n : g.row(i)) out[n.to] += share * Scalar(n.mult);
  }
}

struct Renormalization {
  std::int64_t t;
  double drift;  ///< total mass minus one before rescaling
};

/// Exact forward evolution of P(s, x0; t, .) through a timeline, in double or
/// rational arithmetic. Double mode renormalizes when the total drifts by
/// more than 1e-12 and records each event.
template <class Scalar>
class ExactEvolver {
 public:
  ExactEvolver(const SnapshotTimeline& timeline, std::int64_t start_time, VertexId x0)
      : tl_(timeline), t_(start_time) {
    if (start_time < 0 || start_time > tl_.last()) throw DomainError("evolve: start time outside the timeline");
    const auto& g = tl_.at(t_);
    mass_.assign(g.size(), Scalar(0));
    mass_[g.index(x0)] = Scalar(1);
  }

  std::int64_t time() const { return t_; }
  const GraphSnapshot& graph() const { return tl_.at(t_); }
  std::span<const Scalar> mass() const { return mass_; }
  Scalar prob(VertexId y) const {
    auto i = graph().find(y);
    return i ? mass_[*i] : Scalar(0);
  }
  Scalar total() const {
    Scalar s(0);
    for (const auto& m : mass_) s += m;
    return s;
  }
  const std::vector<Renormalization>& renormalizations() const { return renorm_; }

  void step() {
    if (t_ >= tl_.last())
      throw BudgetError("evolve: timeline ends at t = " + std::to_string(tl_.last()), t_ + 1);
    apply_kernel<Scalar>(tl_.at(t_), mass_, scratch_);
    if (tl_.changes_after(t_)) {
      mass_.assign(tl_.at(t_ + 1).size(), Scalar(0));
      for (Index i = 0; i < scratch_.size(); ++i) mass_[tl_.remap(t_, i)] = scratch_[i];
    } else {
      mass_.swap(scratch_);
    }
    ++t_;
    if constexpr (std::is_floating_point_v<Scalar>) {
      const Scalar s = total();
      if (std::abs(s - 1) > 1e-12) {
        renorm_.push_back({t_, static_cast<double>(s - 1)});
        for (auto& m : mass_) m /= s;
      }
    }
  }

 private:
  const SnapshotTimeline& tl_;
  std::int64_t t_;
  std::vector<Scalar> mass_;
  std::vector<Scalar> scratch_;
  std::vector<Renormalization> renorm_;
};

/// Sparse P(0, x0; t, .) as (vertex, probability) pairs with nonzero mass.
struct DistributionVector {
  std::int64_t t;
  std::vector<std::pair<VertexId, double>> entries;
  double at(VertexId y) const;
  double total() const;
};

/// All distributions for t = 0..T. Throws BudgetError past the step cap.
std::vector<DistributionVector> evolve_exact(const SnapshotTimeline& timeline, VertexId x0, std::int64_t T,
                                             const Budget& budget = {});

struct WalkPath {
  std::uint64_t seed;
  std::uint64_t replicate;
  VertexId start;
  std::vector<VertexId> positions;  ///< X_0..X_T
};

/// Advances one walker from index `pos` in G_start through time `end`,
/// calling visit(t, index) at t = start..end (index into G_t).
template <class Visit>
void walk_indices(const SnapshotTimeline& tl, Index pos, std::int64_t start, std::int64_t end, CounterRng& rng,
                  Visit&& visit) {
  const GraphSnapshot* g = &tl.at(start);
  visit(start, pos);
  for (std::int64_t t = start; t < end; ++t) {
    const auto row = g->row(pos);
    std::int64_t u = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(g->degree(pos))));
    const Neighbor* n = row.data();
    while (u >= n->mult) {
      u -= n->mult;
      ++n;
    }
    pos = n->to;
    if (tl.changes_after(t)) {
      pos = tl.remap(t, pos);
      g = &tl.at(t + 1);
    }
    visit(t + 1, pos);
  }
}

std::vector<WalkPath> simulate_paths(const SnapshotTimeline& timeline, VertexId x0, std::int64_t T,
                                     std::uint64_t replicates, std::uint64_t seed, const Budget& budget = {},
                                     int workers = 1);

/// Empirical one-point marginals, counts[t][i] over indices of G_t.
struct MarginalCounts {
  std::uint64_t replicates = 0;
  std::vector<std::vector<std::uint64_t>> counts;
  double prob(std::int64_t t, Index i) const;
  double std_err(std::int64_t t, Index i) const;
};

MarginalCounts simulate_marginals(const SnapshotTimeline& timeline, VertexId x0, std::int64_t T,
                                  std::uint64_t replicates, std::uint64_t seed, const Budget& budget = {},
                                  int workers = 1);

/// Return statistics of N_0(k) = #{t <= k : X_t = x0}.
struct ReturnStats {
  std::int64_t k = 0;
  double mean = 1.0;     ///< E[N_0(k)]
  double mean_sq = 1.0;  ///< E[N_0(k)^2]
  double pz_ratio = 1.0;
  double mean_se = 0.0;  ///< zero for exact rows
  bool exact = true;
};

/// Rows for k = 0..k_max. E[N^2] uses restarted evolutions from (s, x0),
/// k_max (k_max + 1) / 2 steps in total, checked against the step cap.
std::vector<ReturnStats> return_stats_exact(const SnapshotTimeline& timeline, VertexId x0, std::int64_t k_max,
                                            const Budget& budget = {});

/// Monte Carlo rows for each k in `ks` (ascending).
std::vector<ReturnStats> return_stats_mc(const SnapshotTimeline& timeline, VertexId x0, std::span<const std::int64_t> ks,
                                         std::uint64_t replicates, std::uint64_t seed, const Budget& budget = {},
                                         int workers = 1);

/// Tail of the hitting time of the inner boundary of H (relative to g) for
/// the walk on the frozen snapshot g, at times s * v(H) / log(v(H))^(2+eps).
struct HittingTail {
  double time_scale;
  std::vector<double> s_grid;
  std::vector<double> tail;        ///< P_x(tau > s * scale)
  std::vector<double> tail_se;
  double fitted_rate;              ///< -slope of log tail against s (NaN if < 2 positive points)
  bool monotone;
  std::uint64_t censored;          ///< walkers still inside at the largest grid time
};

HittingTail hitting_time_tail(const GraphSnapshot& g, std::span<const VertexId> region, VertexId x,
                              std::span<const double> s_grid, std::uint64_t replicates, std::uint64_t seed,
                              double eps = 0.1, int workers = 1);

/// Law of X at the hitting time of the inner boundary of H, on the frozen g.
/// Exact version evolves the killed chain until the surviving mass is below tol.
std::vector<std::pair<VertexId, double>> hitting_law_exact(const GraphSnapshot& g, std::span<const VertexId> region,
                                                           VertexId x, double tol = 1e-13,
                                                           std::int64_t max_steps = 10'000'000);
std::vector<std::pair<VertexId, double>> hitting_law_mc(const GraphSnapshot& g, std::span<const VertexId> region,
                                                        VertexId x, std::uint64_t replicates, std::uint64_t seed,
                                                        int workers = 1);

/// max over z and over ordered pairs of starts of law_a(z)/law_b(z); infinite
/// if some z is charged by one start and not another.
double exit_law_ratio(const GraphSnapshot& g, std::span<const VertexId> region, std::span<const VertexId> starts,
                      double tol = 1e-13);

struct OnDiagonalReport {
  double worst_margin;  ///< min over x, t of P_x(Y_2t = x) - pi(x)/pi(H)
  VertexId worst_x;
  std::int64_t worst_t;
  std::uint64_t checks;
  std::uint64_t violations;  ///< margins below -1e-12
};

/// Checks P_x(Y_2t = x) >= pi(x)/pi(H) for all x and t <= T on the frozen
/// connected snapshot H.
OnDiagonalReport on_diag_lower_check(const GraphSnapshot& g, std::int64_t T);

}  // namespace growlab
