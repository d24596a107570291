#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "growlab/families.hpp"
#include "growlab/isoperimetry.hpp"
#include "growlab/sequence.hpp"

namespace growlab {

struct BoundParams {
  double alpha = 0.5;
  double gamma = 0.5;
  std::optional<std::int64_t> delta;  ///< uniform degree bound

  double c_plus() const { return 2.0 * alpha * (1.0 - alpha) * gamma * gamma / ((1.0 - gamma) * (1.0 - gamma)); }
  double c_star() const { return gamma * gamma / (2.0 * (1.0 - gamma) * (1.0 - gamma)); }
  void validate() const;
};

/// Smallest value the L recursion may reach; hitting it sets `floored`.
inline constexpr double kLFloor = 1e-300;

struct LStep {
  double value;
  bool floored;
};

/// Largest l with  integral_{l/2}^{L/2} dz / (c z phi(z^(1/(alpha-1)))^2) >= 1,
/// solved in closed form on each power-law piece of the profile.
LStep iterate_L_step(const IsoperimetricProfile& profile, double L, double c_plus, double alpha);

struct LTrajectory {
  std::int64_t anchor = 0;
  std::vector<double> values;  ///< L_anchor, L_(anchor+1), ...
  bool floored = false;
};

/// profiles[k] is the profile at time anchor + k; returns L_anchor..L_(anchor + profiles.size()).
LTrajectory iterate_L(std::span<const IsoperimetricProfile* const> profiles, const BoundParams& params,
                      std::int64_t anchor, std::int64_t x0_degree);

struct BoundValue {
  double value;
  std::int64_t argmin_s;
};

/// min over s of 2 pi_t(y)/v(s) + pi_t(y)^(1-alpha) L^(s)_t, with L rows
/// cached per anchor s. Thread-safe.
class FirstBoundEvaluator {
 public:
  /// volumes[u] = v(u) and profiles[u] = phi_u for u = 0..T.
  FirstBoundEvaluator(std::vector<std::int64_t> volumes, std::vector<std::shared_ptr<const IsoperimetricProfile>> profiles,
                      BoundParams params, std::int64_t x0_degree);

  std::int64_t horizon() const { return static_cast<std::int64_t>(volumes_.size()) - 1; }
  BoundValue operator()(std::int64_t t, std::int64_t y_degree) const;
  /// Restricted to the given anchors.
  BoundValue evaluate(std::int64_t t, std::int64_t y_degree, std::span<const std::int64_t> anchors) const;
  double L(std::int64_t s, std::int64_t t) const;
  bool floored() const;

  /// Every s in [1, t-1] for t <= 512; otherwise a geometric grid plus floor(t/2).
  static std::vector<std::int64_t> s_grid(std::int64_t t);

 private:
  const std::vector<double>& row(std::int64_t s) const;

  std::vector<std::int64_t> volumes_;
  std::vector<std::shared_ptr<const IsoperimetricProfile>> profiles_;
  BoundParams params_;
  std::int64_t x0_degree_;
  mutable std::mutex mu_;
  mutable std::map<std::int64_t, std::vector<double>> rows_;
  mutable bool floored_ = false;
};

/// Profiles for u = 0..T from a cache (exact when small, analytic beyond).
FirstBoundEvaluator make_first_bound(const SnapshotTimeline& tl, ProfileCache& cache, const BoundParams& params,
                                     VertexId x0, std::int64_t T);

/// max(2 Delta, sqrt(Delta)).
double second_bound_constant(std::int64_t delta);

/// C (1/v(floor(t/2)) + exp(-c_star sum_{u=floor(t/2)}^{t-1} Phi_u^2)), with
/// cheeger[u] = Phi_u; infinite Phi_u (no admissible set) kills the
/// exponential term.
double second_bound(std::span<const std::int64_t> volumes, std::span<const double> cheeger, std::int64_t t,
                    const BoundParams& params);

enum class SeriesFlag { consistent_with_convergence, consistent_with_divergence, inconclusive };
const char* to_string(SeriesFlag f);

struct TransienceRow {
  std::int64_t t;
  double sum_inv_vol;
  double sum_mixing_term;
};

struct TransienceReport {
  std::vector<TransienceRow> rows;  ///< t = 1..H
  double volume_exponent;           ///< fitted beta in v(t) ~ t^beta over [H/4, H]
  double mixing_exponent;           ///< fitted rho in Phi_u^2 ~ u^(-rho); NaN when undetermined
  SeriesFlag inv_vol_flag;
  SeriesFlag mixing_flag;
  nlohmann::json to_json() const;
};

/// volumes[t] for t = 0..H, cheeger[u] for u = 0..H-1. Tail exponents are
/// fitted on [H/4, H] and compared with the critical value 1 with slack `tol`.
TransienceReport transience_report(std::span<const double> volumes, std::span<const double> cheeger,
                                   double tol = 0.05);

enum class ZdPhase { transient_via_second_bound, transient_via_first_bound, upper_bounds_silent };
const char* to_string(ZdPhase p);

struct ZdClassification {
  ZdPhase phase;
  std::optional<double> witness_alpha;
};

/// Growing domains in Z^d with v(t) ~ t^beta. Throws DomainError for d <= 2 or beta <= 0.
ZdClassification zd_phase(int d, double beta);

struct LowerBoundConfig {
  double psi_exponent = 2.0;  ///< psi(m) = m^p
  double delta0 = 0.5;
  std::vector<std::int64_t> t_grid;
};

struct LowerBoundRow {
  std::int64_t t;
  std::int64_t window;           ///< m*(t) = max m with r^{-1}(m) + psi(m) <= t
  double radius_limit;           ///< (1 - delta0) m*
  std::size_t admissible;        ///< number of admissible y
  double min_v_times_p;          ///< min over admissible y of v(t) P(0, x0; t, y)
  VertexId argmin_y;
  double running_min;
  double ball_like_ratio;        ///< (v(t) - v_inf(B(x0, r(t)))) / v(t)
  double zeta;                   ///< sum_{u=t/2}^{t-1} Phi_u^2 / log v(t/2), NaN without Cheeger data
};

struct LowerBoundReport {
  std::vector<LowerBoundRow> rows;
  double c_hat;                  ///< min over the grid
  double stability;              ///< max/min of min_v_times_p over the whole grid
  double stability_upper_half;   ///< same over the upper half of the grid
  bool positive;
  std::vector<std::int64_t> empty_at;
  nlohmann::json to_json() const;
};

/// Exact evolution from the family origin; cheeger(u) feeds the regularity
/// diagnostic when provided.
LowerBoundReport lower_bound_check(const LatticeBallFamily& family, const LowerBoundConfig& cfg,
                                   const Budget& budget = {}, std::function<double(std::int64_t)> cheeger = {});

struct StageLocalTime {
  int l;
  std::int64_t begin;
  std::int64_t end;
  std::int64_t volume;
  double floor_shape;     ///< (t_(l+1) - t_l) / v(t_l)
  double local_time;      ///< E #{s in [t_l, t_(l+1)) : X_s = x0}
  double local_time_se;
  double partial_sum;     ///< sum of floor_shape over stages <= l
  std::optional<double> exit_ratio;  ///< max ratio of hitting laws on the boundary of K_l
};

struct FrozenRecurrenceReport {
  std::vector<StageLocalTime> stages;
  double rank_correlation;  ///< Spearman(local_time, floor_shape)
  double fitted_constant;   ///< least-squares c in local_time ~ c * floor_shape
  std::vector<double> growth_rates;
  nlohmann::json to_json() const;
};

struct FrozenRecurrenceOptions {
  std::uint64_t replicates = 10'000;
  std::uint64_t seed = 1;
  int workers = 1;
  int exit_ratio_max_stage = 3;  ///< exit ratios for 1 <= l <= this stage
};

FrozenRecurrenceReport frozen_recurrence_experiment(const FrozenNestedFamily& family, std::int64_t horizon,
                                                    const FrozenRecurrenceOptions& opts, const Budget& budget = {});

}  // namespace growlab
