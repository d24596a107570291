#include "growlab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "growlab/common.hpp"
#include "growlab/parallel.hpp"
#include "growlab/rng.hpp"
#include "growlab/stats.hpp"
#include "growlab/walk.hpp"

namespace growlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

nlohmann::json number_or_null(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

double log_add_exp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == -kInf) return a;
  return a + std::log1p(std::exp(b - a));
}

// A profile piece over log r in [lo, hi): phi(r) = coef * r^(-expo).
struct Piece {
  double lo;
  double hi;
  double coef;
  double expo;
};

std::vector<Piece> pieces_in_log_r(const IsoperimetricProfile& profile) {
  const double half = profile.volume() / 2.0;
  const auto segs = profile.segments();
  std::vector<Piece> out;
  for (std::size_t k = 0; k < segs.size(); ++k) {
    if (segs[k].start >= half) break;
    const double next = k + 1 < segs.size() ? std::min(segs[k + 1].start, half) : half;
    if (next <= segs[k].start) continue;
    out.push_back({std::log(segs[k].start), std::log(next), segs[k].coefficient, segs[k].exponent});
  }
  out.push_back({std::log(half), kInf, profile.cheeger(), 0.0});
  return out;
}

}  // namespace

void BoundParams::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("bounds: alpha must lie in (0, 1)");
  if (!(gamma > 0.0 && gamma <= 0.5)) throw DomainError("bounds: gamma must lie in (0, 1/2]");
  if (delta && *delta < 1) throw DomainError("bounds: delta must be >= 1");
}

LStep iterate_L_step(const IsoperimetricProfile& profile, double L, double c_plus, double alpha) {
  if (!(L > 0.0)) return {kLFloor, true};
  if (!(c_plus > 0.0)) throw DomainError("iterate_L: c_plus must be > 0");
  profile.check_monotone();
  // Substitute r = z^(1/(alpha-1)); the integral becomes
  // (1 - alpha)/c * int dr / (r phi(r)^2) over r from (L/2)^(1/(alpha-1)) upward.
  const double one_minus = 1.0 - alpha;
  double rho = -std::log(L / 2.0) / one_minus;  // log r at the upper z limit
  double remaining = 1.0;
  const auto pieces = pieces_in_log_r(profile);
  std::optional<double> rho_end;
  for (const auto& p : pieces) {
    if (p.hi <= rho) continue;
    const double lo = std::max(rho, p.lo);
    if (std::isinf(p.coef)) {
      rho = p.hi;
      continue;
    }
    if (p.coef == 0.0) {
      rho_end = lo;
      break;
    }
    const double k = one_minus / (c_plus * p.coef * p.coef);
    if (p.expo == 0.0) {
      const double need = remaining / k;
      if (lo + need <= p.hi) {
        rho_end = lo + need;
        break;
      }
      remaining -= k * (p.hi - lo);
    } else {
      const double m = 2.0 * p.expo;
      // Full contribution k/m (r_hi^m - r_lo^m), in logs.
      const double log_full = std::isinf(p.hi) ? kInf : std::log(k / m) + m * lo + std::log(std::expm1(m * (p.hi - lo)));
      if (log_full >= std::log(remaining)) {
        rho_end = log_add_exp(m * lo, std::log(m * remaining / k)) / m;
        break;
      }
      remaining -= std::exp(log_full);
    }
    rho = p.hi;
  }
  if (!rho_end) return {kLFloor, true};
  const double ell = 2.0 * std::exp(-one_minus * *rho_end);
  if (!(ell > kLFloor)) return {kLFloor, true};
  return {std::min(ell, L), false};
}

LTrajectory iterate_L(std::span<const IsoperimetricProfile* const> profiles, const BoundParams& params,
                      std::int64_t anchor, std::int64_t x0_degree) {
  params.validate();
  if (x0_degree < 1) throw DomainError("iterate_L: x0 degree must be >= 1");
  LTrajectory out;
  out.anchor = anchor;
  out.values.reserve(profiles.size() + 1);
  out.values.push_back(std::pow(static_cast<double>(x0_degree), params.alpha - 1.0));
  const double c = params.c_plus();
  for (const auto* p : profiles) {
    if (!p) throw DomainError("iterate_L: missing profile at u = " + std::to_string(anchor + out.values.size() - 1));
    const auto step = iterate_L_step(*p, out.values.back(), c, params.alpha);
    out.floored = out.floored || step.floored;
    out.values.push_back(step.value);
  }
  return out;
}

FirstBoundEvaluator::FirstBoundEvaluator(std::vector<std::int64_t> volumes,
                                         std::vector<std::shared_ptr<const IsoperimetricProfile>> profiles,
                                         BoundParams params, std::int64_t x0_degree)
    : volumes_(std::move(volumes)), profiles_(std::move(profiles)), params_(params), x0_degree_(x0_degree) {
  params_.validate();
  if (volumes_.empty()) throw DomainError("first_bound: no volumes");
  if (profiles_.size() + 1 < volumes_.size())
    throw DomainError("first_bound: profiles missing for u = " + std::to_string(profiles_.size()));
}

std::vector<std::int64_t> FirstBoundEvaluator::s_grid(std::int64_t t) {
  std::vector<std::int64_t> out;
  if (t < 2) return out;
  if (t <= 512) {
    out.resize(static_cast<std::size_t>(t - 1));
    std::iota(out.begin(), out.end(), 1);
    return out;
  }
  constexpr int kPoints = 96;
  const double top = std::log(static_cast<double>(t - 1));
  for (int k = 0; k <= kPoints; ++k)
    out.push_back(std::clamp<std::int64_t>(std::llround(std::exp(top * k / kPoints)), 1, t - 1));
  out.push_back(t / 2);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

const std::vector<double>& FirstBoundEvaluator::row(std::int64_t s) const {
  std::lock_guard lock(mu_);
  auto it = rows_.find(s);
  if (it != rows_.end()) return it->second;
  std::vector<const IsoperimetricProfile*> span;
  for (std::int64_t u = s; u < horizon(); ++u) span.push_back(profiles_[u].get());
  auto traj = iterate_L(span, params_, s, x0_degree_);
  floored_ = floored_ || traj.floored;
  return rows_.emplace(s, std::move(traj.values)).first->second;
}

double FirstBoundEvaluator::L(std::int64_t s, std::int64_t t) const {
  if (s < 0 || t < s || t > horizon()) throw DomainError("first_bound: L requested outside [s, horizon]");
  return row(s)[static_cast<std::size_t>(t - s)];
}

bool FirstBoundEvaluator::floored() const {
  std::lock_guard lock(mu_);
  return floored_;
}

BoundValue FirstBoundEvaluator::operator()(std::int64_t t, std::int64_t y_degree) const {
  const auto grid = s_grid(t);
  return evaluate(t, y_degree, grid);
}

BoundValue FirstBoundEvaluator::evaluate(std::int64_t t, std::int64_t y_degree,
                                         std::span<const std::int64_t> anchors) const {
  if (t < 2) throw DomainError("first_bound: needs t >= 2");
  if (t > horizon()) throw DomainError("first_bound: profiles missing beyond u = " + std::to_string(horizon() - 1));
  if (anchors.empty()) throw DomainError("first_bound: empty anchor grid");
  const double y = static_cast<double>(y_degree);
  const double weight = std::pow(y, 1.0 - params_.alpha);
  BoundValue best{kInf, -1};
  for (const auto s : anchors) {
    if (s < 1 || s > t - 1) throw DomainError("first_bound: anchor " + std::to_string(s) + " outside [1, t-1]");
    const double value = 2.0 * y / static_cast<double>(volumes_[s]) + weight * L(s, t);
    if (value < best.value) best = {value, s};
  }
  return best;
}

FirstBoundEvaluator make_first_bound(const SnapshotTimeline& tl, ProfileCache& cache, const BoundParams& params,
                                     VertexId x0, std::int64_t T) {
  if (T > tl.last()) throw DomainError("first_bound: horizon beyond the timeline");
  std::vector<std::int64_t> volumes;
  std::vector<std::shared_ptr<const IsoperimetricProfile>> profiles;
  for (std::int64_t u = 0; u <= T; ++u) {
    volumes.push_back(tl.at(u).volume());
    profiles.push_back(cache.at(tl.ptr(u)));
  }
  return FirstBoundEvaluator(std::move(volumes), std::move(profiles), params, tl.at(0).degree_of(x0));
}

double second_bound_constant(std::int64_t delta) {
  const double d = static_cast<double>(delta);
  return std::max(2.0 * d, std::sqrt(d));
}

double second_bound(std::span<const std::int64_t> volumes, std::span<const double> cheeger, std::int64_t t,
                    const BoundParams& params) {
  params.validate();
  if (!params.delta) throw DomainError("second_bound: degree bound Delta unknown");
  if (t < 2) throw DomainError("second_bound: needs t >= 2");
  const std::int64_t half = t / 2;
  if (static_cast<std::size_t>(t) > cheeger.size() || static_cast<std::size_t>(half) >= volumes.size())
    throw DomainError("second_bound: Cheeger values or volumes missing below t = " + std::to_string(t));
  double sum = 0.0;
  for (std::int64_t u = half; u < t; ++u) sum += cheeger[u] * cheeger[u];
  const double decay = std::isinf(sum) ? 0.0 : std::exp(-params.c_star() * sum);
  return second_bound_constant(*params.delta) * (1.0 / static_cast<double>(volumes[half]) + decay);
}

const char* to_string(SeriesFlag f) {
  switch (f) {
    case SeriesFlag::consistent_with_convergence: return "consistent_with_convergence";
    case SeriesFlag::consistent_with_divergence: return "consistent_with_divergence";
    case SeriesFlag::inconclusive: return "inconclusive";
  }
  return "?";
}

nlohmann::json TransienceReport::to_json() const {
  nlohmann::json j{{"volume_exponent", number_or_null(volume_exponent)},
                   {"mixing_exponent", number_or_null(mixing_exponent)},
                   {"inv_vol_flag", to_string(inv_vol_flag)},
                   {"mixing_flag", to_string(mixing_flag)}};
  if (!rows.empty()) {
    j["horizon"] = rows.back().t;
    j["sum_inv_vol"] = rows.back().sum_inv_vol;
    j["sum_mixing_term"] = rows.back().sum_mixing_term;
  }
  return j;
}

TransienceReport transience_report(std::span<const double> volumes, std::span<const double> cheeger, double tol) {
  if (volumes.size() < 2) throw DomainError("transience_report: need volumes for t = 0..H with H >= 1");
  const auto H = static_cast<std::int64_t>(volumes.size()) - 1;
  if (static_cast<std::int64_t>(cheeger.size()) < H)
    throw DomainError("transience_report: need Cheeger values for u = 0..H-1");

  // Prefix sums of finite Phi^2 and of infinite entries.
  std::vector<double> prefix(H + 1, 0.0);
  std::vector<std::int64_t> infinite(H + 1, 0);
  for (std::int64_t u = 0; u < H; ++u) {
    const double p2 = cheeger[u] * cheeger[u];
    prefix[u + 1] = prefix[u] + (std::isinf(p2) ? 0.0 : p2);
    infinite[u + 1] = infinite[u] + (std::isinf(p2) ? 1 : 0);
  }

  TransienceReport rep;
  double inv = 0.0, mix = 0.0;
  for (std::int64_t t = 1; t <= H; ++t) {
    inv += 1.0 / volumes[t];
    const std::int64_t half = t / 2;
    const bool killed = infinite[t] > infinite[half];
    mix += killed ? 0.0 : std::exp(-(prefix[t] - prefix[half]));
    rep.rows.push_back({t, inv, mix});
  }

  const std::int64_t from = std::max<std::int64_t>(1, H / 4);
  std::vector<double> lx, ly;
  for (std::int64_t t = from; t <= H; ++t) {
    if (!(volumes[t] > 0)) continue;
    lx.push_back(std::log(static_cast<double>(t)));
    ly.push_back(std::log(volumes[t]));
  }
  rep.volume_exponent = least_squares(lx, ly).slope;
  if (std::isnan(rep.volume_exponent)) rep.inv_vol_flag = SeriesFlag::inconclusive;
  else if (rep.volume_exponent > 1.0 + tol) rep.inv_vol_flag = SeriesFlag::consistent_with_convergence;
  else if (rep.volume_exponent <= 1.0 + 1e-6) rep.inv_vol_flag = SeriesFlag::consistent_with_divergence;
  else rep.inv_vol_flag = SeriesFlag::inconclusive;

  lx.clear();
  ly.clear();
  std::int64_t zeros = 0, infs = 0, window = 0;
  for (std::int64_t u = from; u < H; ++u) {
    ++window;
    const double p = cheeger[u];
    if (p == 0.0) ++zeros;
    else if (std::isinf(p)) ++infs;
    else {
      lx.push_back(std::log(static_cast<double>(u)));
      ly.push_back(2.0 * std::log(p));
    }
  }
  rep.mixing_exponent = NAN;
  if (window == 0) {
    rep.mixing_flag = SeriesFlag::inconclusive;
  } else if (zeros == window) {
    rep.mixing_flag = SeriesFlag::consistent_with_divergence;
  } else if (infs == window) {
    rep.mixing_flag = SeriesFlag::consistent_with_convergence;
  } else {
    rep.mixing_exponent = -least_squares(lx, ly).slope;
    if (lx.size() >= 2 && std::isnan(rep.mixing_exponent)) rep.mixing_exponent = 0.0;  // one distinct u
    if (zeros > 0 || std::isnan(rep.mixing_exponent)) rep.mixing_flag = SeriesFlag::inconclusive;
    else if (rep.mixing_exponent < 1.0 - tol) rep.mixing_flag = SeriesFlag::consistent_with_convergence;
    else if (rep.mixing_exponent >= 1.0 - 1e-6) rep.mixing_flag = SeriesFlag::consistent_with_divergence;
    else rep.mixing_flag = SeriesFlag::inconclusive;
  }
  return rep;
}

const char* to_string(ZdPhase p) {
  switch (p) {
    case ZdPhase::transient_via_second_bound: return "transient-via-second-bound";
    case ZdPhase::transient_via_first_bound: return "transient-via-first-bound";
    case ZdPhase::upper_bounds_silent: return "upper-bounds-silent";
  }
  return "?";
}

ZdClassification zd_phase(int d, double beta) {
  if (d <= 2) throw DomainError("zd_phase: needs d > 2");
  if (!(beta > 0.0) || std::isinf(beta)) throw DomainError("zd_phase: needs finite beta > 0");
  if (beta <= 1.0) return {ZdPhase::upper_bounds_silent, std::nullopt};
  if (beta < d / 2.0) return {ZdPhase::transient_via_second_bound, std::nullopt};
  // Any alpha below 1 - 2/d makes t^(-d(1-alpha)/2) summable, and beta >= d/2
  // keeps v(t)^(-(1-alpha)) summable too.
  return {ZdPhase::transient_via_first_bound, (1.0 - 2.0 / d) / 2.0};
}

nlohmann::json LowerBoundReport::to_json() const {
  return {{"c_hat", number_or_null(c_hat)},
          {"stability", number_or_null(stability)},
          {"stability_upper_half", number_or_null(stability_upper_half)},
          {"positive", positive},
          {"grid_points", rows.size()},
          {"empty_at", empty_at}};
}

LowerBoundReport lower_bound_check(const LatticeBallFamily& family, const LowerBoundConfig& cfg, const Budget& budget,
                                   std::function<double(std::int64_t)> cheeger) {
  if (cfg.t_grid.empty()) throw DomainError("lower_bound_check: empty t grid");
  if (!(cfg.delta0 > 0.0 && cfg.delta0 <= 0.5)) throw DomainError("lower_bound_check: delta0 must lie in (0, 1/2]");
  if (!(cfg.psi_exponent > 0.0)) throw DomainError("lower_bound_check: psi exponent must be > 0");
  auto grid = cfg.t_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.front() < 0 || grid.back() > family.horizon())
    throw DomainError("lower_bound_check: t grid must lie in [0, horizon]");
  if (grid.back() > budget.step_cap)
    throw BudgetError("lower_bound_check: grid end exceeds the step cap", budget.step_cap);

  const SnapshotTimeline tl(family, grid.back(), budget);
  const VertexId x0 = family.origin();
  const auto& geo = family.geometry();
  ExactEvolver<double> ev(tl, 0, x0);

  auto psi = [&](std::int64_t m) { return std::pow(static_cast<double>(m), cfg.psi_exponent); };
  auto fits = [&](std::int64_t m, std::int64_t t) {
    return static_cast<double>(family.first_time_with_radius(m)) + psi(m) <= static_cast<double>(t);
  };

  LowerBoundReport rep;
  double running = kInf;
  std::int64_t m = 0;
  for (const auto t : grid) {
    while (ev.time() < t) ev.step();
    while (fits(m + 1, t)) ++m;  // monotone in t, so m only grows
    LowerBoundRow row{};
    row.t = t;
    row.window = m;
    row.radius_limit = (1.0 - cfg.delta0) * static_cast<double>(m);
    const auto& g = ev.graph();
    const double v = static_cast<double>(g.volume());
    row.min_v_times_p = kInf;
    row.argmin_y = x0;
    const auto mass = ev.mass();
    for (Index i = 0; i < g.size(); ++i) {
      if (static_cast<double>(geo.distance(x0, g.id(i))) > row.radius_limit + 1e-9) continue;
      ++row.admissible;
      const double vp = v * mass[i];
      if (vp < row.min_v_times_p) {
        row.min_v_times_p = vp;
        row.argmin_y = g.id(i);
      }
    }
    if (row.admissible == 0) {
      rep.empty_at.push_back(t);
      row.min_v_times_p = NAN;
    } else {
      running = std::min(running, row.min_v_times_p);
    }
    row.running_min = running;
    row.ball_like_ratio = (v - static_cast<double>(family.limit_ball_volume(static_cast<double>(family.radius(t))))) / v;
    row.zeta = NAN;
    if (cheeger && t >= 2) {
      double sum = 0.0;
      for (std::int64_t u = t / 2; u < t; ++u) sum += cheeger(u) * cheeger(u);
      row.zeta = sum / std::log(static_cast<double>(tl.at(t / 2).volume()));
    }
    rep.rows.push_back(row);
  }

  auto ratio = [&](std::size_t from) {
    double lo = kInf, hi = 0.0;
    for (std::size_t k = from; k < rep.rows.size(); ++k) {
      const double x = rep.rows[k].min_v_times_p;
      if (std::isnan(x)) continue;
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    return lo > 0.0 && !std::isinf(lo) ? hi / lo : kInf;
  };
  rep.c_hat = running;
  rep.stability = ratio(0);
  rep.stability_upper_half = ratio(rep.rows.size() / 2);
  rep.positive = running > 0.0 && !std::isinf(running);
  return rep;
}

nlohmann::json FrozenRecurrenceReport::to_json() const {
  nlohmann::json j{{"rank_correlation", number_or_null(rank_correlation)},
                   {"fitted_constant", number_or_null(fitted_constant)},
                   {"growth_rates", growth_rates},
                   {"stages", stages.size()}};
  if (!stages.empty()) j["partial_sum"] = stages.back().partial_sum;
  return j;
}

FrozenRecurrenceReport frozen_recurrence_experiment(const FrozenNestedFamily& family, std::int64_t horizon,
                                                    const FrozenRecurrenceOptions& opts, const Budget& budget) {
  if (horizon < 0 || horizon > family.horizon()) throw DomainError("frozen_recurrence: horizon outside the family");
  if (opts.replicates == 0) throw DomainError("frozen_recurrence: replicates must be > 0");
  if (opts.replicates > budget.replicate_cap) throw BudgetError("frozen_recurrence: replicates above the cap", 0);
  const double work = static_cast<double>(opts.replicates) * static_cast<double>(horizon);
  if (work > static_cast<double>(budget.step_cap) * 1e3)
    throw BudgetError("frozen_recurrence: walker-steps exceed 1000 x the step cap", horizon);

  const SnapshotTimeline tl(family, horizon, budget);
  const VertexId x0 = family.origin();
  std::vector<const StageInfo*> stages;
  for (const auto& s : family.stages())
    if (s.begin <= horizon) stages.push_back(&s);
  const std::size_t S = stages.size();

  // Index of x0 and stage number at each time.
  std::vector<Index> x0_index(horizon + 1);
  std::vector<int> stage_at(horizon + 1);
  for (std::int64_t t = 0; t <= horizon; ++t) {
    x0_index[t] = tl.at(t).index(x0);
    stage_at[t] = family.stage_of(t);
  }

  const int workers = resolve_workers(opts.workers);
  std::vector<std::vector<std::uint64_t>> sum(workers, std::vector<std::uint64_t>(S, 0));
  std::vector<std::vector<std::uint64_t>> sum_sq(workers, std::vector<std::uint64_t>(S, 0));
  parallel_chunks(opts.replicates, workers, [&](int w, std::uint64_t begin, std::uint64_t end) {
    std::vector<std::uint64_t> visits(S);
    for (std::uint64_t rep = begin; rep < end; ++rep) {
      std::fill(visits.begin(), visits.end(), 0);
      CounterRng rng(opts.seed, rep);
      walk_indices(tl, x0_index[0], 0, horizon, rng, [&](std::int64_t t, Index i) {
        if (i == x0_index[t]) ++visits[stage_at[t]];
      });
      for (std::size_t l = 0; l < S; ++l) {
        sum[w][l] += visits[l];
        sum_sq[w][l] += visits[l] * visits[l];
      }
    }
  });

  FrozenRecurrenceReport rep;
  const double n = static_cast<double>(opts.replicates);
  double partial = 0.0;
  std::vector<double> local, shape;
  for (std::size_t l = 0; l < S; ++l) {
    std::uint64_t s1 = 0, s2 = 0;
    for (int w = 0; w < workers; ++w) {
      s1 += sum[w][l];
      s2 += sum_sq[w][l];
    }
    const auto& st = *stages[l];
    StageLocalTime row;
    row.l = st.l;
    row.begin = st.begin;
    row.end = std::min(st.end, horizon + 1);
    row.volume = st.volume;
    row.floor_shape = static_cast<double>(row.end - row.begin) / static_cast<double>(st.volume);
    row.local_time = static_cast<double>(s1) / n;
    const double var = static_cast<double>(s2) / n - row.local_time * row.local_time;
    row.local_time_se = std::sqrt(std::max(0.0, var) / n);
    partial += row.floor_shape;
    row.partial_sum = partial;
    if (l >= 1 && st.l <= opts.exit_ratio_max_stage) {
      const auto& geo = family.geometry();
      const auto reference = lattice_ball_snapshot(geo, std::floor(st.inner + 1e-9) + 1.0, family.loops());
      const auto region = geo.ball(st.inner);
      std::vector<int> far(family.params().d, 0);
      far[0] = static_cast<int>(std::floor(stages[l - 1]->outer + 1e-9));
      const std::vector<VertexId> starts{x0, geo.encode(far)};
      row.exit_ratio = exit_law_ratio(reference, region, starts);
    }
    local.push_back(row.local_time);
    shape.push_back(row.floor_shape);
    rep.stages.push_back(row);
  }
  rep.rank_correlation = spearman(local, shape);
  double num = 0.0, den = 0.0;
  for (std::size_t l = 0; l < S; ++l) {
    num += local[l] * shape[l];
    den += shape[l] * shape[l];
  }
  rep.fitted_constant = den > 0.0 ? num / den : NAN;
  rep.growth_rates = family.growth_rates();
  return rep;
}

}  // namespace growlab
