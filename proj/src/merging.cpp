#include "growlab/merging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "growlab/parallel.hpp"
#include "growlab/rng.hpp"
#include "growlab/stats.hpp"

namespace growlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

nlohmann::json finite_or_string(double x) {
  if (std::isinf(x)) return "inf";
  return x;
}

template <class Scalar>
struct KernelTables {
  std::array<std::vector<Scalar>, 2> left, stay, right;
};

KernelTables<Rational> exact_tables(const MergingChainSchedule& chain) {
  KernelTables<Rational> k;
  const int N = chain.N();
  for (int p = 0; p < 2; ++p) {
    k.left[p].assign(N + 1, Rational(0));
    k.stay[p].assign(N + 1, Rational(0));
    k.right[p].assign(N + 1, Rational(0));
    for (int x = 0; x <= N; ++x) {
      if (x > 0) k.left[p][x] = chain.kernel(p, x, x - 1);
      k.stay[p][x] = chain.kernel(p, x, x);
      if (x < N) k.right[p][x] = chain.kernel(p, x, x + 1);
    }
  }
  return k;
}

KernelTables<double> float_tables(const MergingChainSchedule& chain) {
  KernelTables<double> k;
  for (int p = 0; p < 2; ++p) {
    const auto& rows = chain.kernel_rows(p);
    k.left[p] = rows.left;
    k.stay[p] = rows.stay;
    k.right[p] = rows.right;
  }
  return k;
}

template <class Scalar>
void step_law(const KernelTables<Scalar>& k, int p, const std::vector<Scalar>& in, std::vector<Scalar>& out) {
  const std::size_t n = in.size();
  out.assign(n, Scalar(0));
  for (std::size_t x = 0; x < n; ++x) {
    if (in[x] == 0) continue;
    out[x] += in[x] * k.stay[p][x];
    if (x > 0) out[x - 1] += in[x] * k.left[p][x];
    if (x + 1 < n) out[x + 1] += in[x] * k.right[p][x];
  }
}

template <class Scalar>
double to_double(const Scalar& s) {
  if constexpr (std::is_same_v<Scalar, double>) return s;
  else return s.template convert_to<double>();
}

template <class Scalar>
MergingReport evolve_pair(const MergingChainSchedule& chain, const MergingOptions& opts,
                          const KernelTables<Scalar>& k) {
  const int N = chain.N();
  MergingReport rep;
  rep.N = N;
  rep.theta = chain.theta();
  rep.eta = chain.eta();
  rep.epsilon = chain.realized_epsilon();
  rep.delta = opts.delta;
  rep.exact = std::is_same_v<Scalar, Rational>;

  const std::int64_t stride =
      opts.stride > 0 ? opts.stride : std::max<std::int64_t>(1, (opts.t_max + 9999) / 10000);
  auto checkpoints = opts.checkpoints;
  std::sort(checkpoints.begin(), checkpoints.end());
  auto next_check = checkpoints.begin();

  std::vector<Scalar> p(N + 1, Scalar(0)), q(N + 1, Scalar(0)), scratch;
  p[0] = Scalar(1);
  q[N] = Scalar(1);
  std::vector<double> pd(N + 1), qd(N + 1);

  for (std::int64_t t = 0;; ++t) {
    for (int x = 0; x <= N; ++x) {
      pd[x] = to_double(p[x]);
      qd[x] = to_double(q[x]);
    }
    const MergingRow row = merging_distance(t, pd, qd);
    if (!rep.t_tv && row.tv <= opts.delta) rep.t_tv = t;
    if (!rep.t_sup && row.relsup <= opts.delta) rep.t_sup = t;
    while (next_check != checkpoints.end() && *next_check < t) ++next_check;
    const bool checkpoint = next_check != checkpoints.end() && *next_check == t;
    if (t % stride == 0 || t == opts.t_max || checkpoint) rep.rows.push_back(row);
    if constexpr (std::is_same_v<Scalar, double>) {
      double sp = 0.0, sq = 0.0;
      for (int x = 0; x <= N; ++x) {
        sp += p[x];
        sq += q[x];
      }
      rep.max_mass_drift = std::max({rep.max_mass_drift, std::abs(sp - 1.0), std::abs(sq - 1.0)});
    }
    if (t == opts.t_max) {
      rep.final = row;
      break;
    }
    const int parity = static_cast<int>(t & 1);
    step_law(k, parity, p, scratch);
    p.swap(scratch);
    step_law(k, parity, q, scratch);
    q.swap(scratch);
  }
  if constexpr (std::is_same_v<Scalar, Rational>) {
    Rational sp = 0, sq = 0;
    for (int x = 0; x <= N; ++x) {
      sp += p[x];
      sq += q[x];
    }
    rep.max_mass_drift = std::max(std::abs((sp - 1).convert_to<double>()), std::abs((sq - 1).convert_to<double>()));
  }
  rep.budget_exhausted = !rep.t_tv || !rep.t_sup;
  return rep;
}

}  // namespace

nlohmann::json TwoStateAnalysis::to_json() const {
  return {{"theta", to_string(theta)},
          {"eta", to_string(eta)},
          {"u_A", to_string(stationary[0])},
          {"u_B", to_string(stationary[1])},
          {"drift_A", to_string(drift_a)},
          {"drift_B", to_string(drift_b)},
          {"beta", to_string(beta)},
          {"beta_value", beta.convert_to<double>()},
          {"stationary_exact", stationary_exact}};
}

TwoStateAnalysis two_state_analysis(const Rational& theta, const Rational& eta) {
  if (theta < 0 || theta >= 1) throw DomainError("two_state: theta must lie in [0, 1)");
  if (eta < 0 || eta >= 1) throw DomainError("two_state: eta must lie in [0, 1)");
  TwoStateAnalysis a;
  a.theta = theta;
  a.eta = eta;
  const Rational denom = 3 - eta;
  a.matrix[0] = {Rational(2 / denom), Rational((1 - eta) / denom)};
  a.matrix[1] = {Rational(1, 3), Rational(2, 3)};
  const Rational norm = 6 - 4 * eta;
  a.stationary = {Rational((3 - eta) / norm), Rational((3 - 3 * eta) / norm)};
  a.drift_a = -2 * theta / denom;
  a.drift_b = 2 * theta / 3;
  a.beta = a.stationary[0] * a.drift_a + a.stationary[1] * a.drift_b;
  a.stationary_exact = true;
  for (int j = 0; j < 2; ++j) {
    const Rational uj = a.stationary[0] * a.matrix[0][j] + a.stationary[1] * a.matrix[1][j];
    if (uj != a.stationary[j]) a.stationary_exact = false;
  }
  return a;
}

MergingRow merging_distance(std::int64_t t, std::span<const double> p, std::span<const double> q) {
  MergingRow row{t, 0.0, 0.0};
  for (std::size_t z = 0; z < p.size(); ++z) {
    row.tv += std::abs(p[z] - q[z]);
    if (p[z] == 0.0 && q[z] == 0.0) continue;
    if (p[z] == 0.0 || q[z] == 0.0) {
      row.relsup = kInf;
      continue;
    }
    row.relsup = std::max({row.relsup, std::abs(p[z] / q[z] - 1.0), std::abs(q[z] / p[z] - 1.0)});
  }
  row.tv /= 2.0;
  return row;
}

std::optional<MergingRow> MergingReport::at(std::int64_t t) const {
  auto it = std::lower_bound(rows.begin(), rows.end(), t, [](const MergingRow& r, std::int64_t x) { return r.t < x; });
  if (it == rows.end() || it->t != t) return std::nullopt;
  return *it;
}

nlohmann::json MergingReport::to_json() const {
  nlohmann::json j{{"N", N},
                   {"theta", to_string(theta)},
                   {"eta", to_string(eta)},
                   {"eps", to_string(epsilon)},
                   {"eps_value", epsilon.convert_to<double>()},
                   {"delta", delta},
                   {"T_tv", t_tv ? nlohmann::json(*t_tv) : nlohmann::json("not reached")},
                   {"T_sup", t_sup ? nlohmann::json(*t_sup) : nlohmann::json("not reached")},
                   {"final_t", final.t},
                   {"final_tv", final.tv},
                   {"final_relsup", finite_or_string(final.relsup)},
                   {"budget_exhausted", budget_exhausted},
                   {"max_mass_drift", max_mass_drift},
                   {"exact_arithmetic", exact}};
  return j;
}

MergingReport merging_distances(const MergingChainSchedule& chain, const MergingOptions& opts, const Budget& budget) {
  if (opts.t_max < 0) throw DomainError("merging: t_max must be >= 0");
  if (!(opts.delta > 0.0 && opts.delta < 1.0)) throw DomainError("merging: delta must lie in (0, 1)");
  if (opts.t_max > budget.step_cap)
    throw BudgetError("merging: t_max " + std::to_string(opts.t_max) + " exceeds the step cap", budget.step_cap);
  if (opts.exact) {
    if (opts.t_max > kExactMergingSteps)
      throw BudgetError("merging: exact arithmetic is limited to " + std::to_string(kExactMergingSteps) + " steps",
                        kExactMergingSteps);
    return evolve_pair(chain, opts, exact_tables(chain));
  }
  return evolve_pair(chain, opts, float_tables(chain));
}

std::optional<std::int64_t> tv_merging_time(const MergingChainSchedule& chain, double delta, std::int64_t t_max) {
  const auto k = float_tables(chain);
  const int N = chain.N();
  std::vector<double> p(N + 1, 0.0), q(N + 1, 0.0), scratch;
  p[0] = 1.0;
  q[N] = 1.0;
  for (std::int64_t t = 0; t <= t_max; ++t) {
    double tv = 0.0;
    for (int x = 0; x <= N; ++x) tv += std::abs(p[x] - q[x]);
    if (tv / 2.0 <= delta) return t;
    const int parity = static_cast<int>(t & 1);
    step_law(k, parity, p, scratch);
    p.swap(scratch);
    step_law(k, parity, q, scratch);
    q.swap(scratch);
  }
  return std::nullopt;
}

nlohmann::json ConstraintCertificate::to_json() const {
  return {{"eps", to_string(epsilon)},
          {"eps_value", epsilon.convert_to<double>()},
          {"rows_stochastic", rows_stochastic},
          {"detailed_balance", detailed_balance},
          {"within_envelope", within_envelope},
          {"pass", pass}};
}

ConstraintCertificate certify_constraints(const MergingChainSchedule& chain) {
  ConstraintCertificate c;
  c.epsilon = chain.realized_epsilon();
  const int N = chain.N();
  const Rational third(1, 3), two_thirds(2, 3);
  c.rows_stochastic = c.detailed_balance = c.within_envelope = true;
  auto inside = [&](const Rational& value, const Rational& centre) {
    return value >= centre - c.epsilon && value <= centre + c.epsilon;
  };
  for (int p = 0; p < 2; ++p) {
    for (int x = 0; x <= N; ++x) {
      Rational row = 0;
      for (int y = std::max(0, x - 1); y <= std::min(N, x + 1); ++y) {
        const Rational k = chain.kernel(p, x, y);
        row += k;
        const bool endpoint_hold = x == y && (x == 0 || x == N);
        if (!inside(k, endpoint_hold ? two_thirds : third)) c.within_envelope = false;
        if (chain.measure(p, x) * k != chain.measure(p, y) * chain.kernel(p, y, x)) c.detailed_balance = false;
      }
      if (row != 1) c.rows_stochastic = false;
      if (!inside(Rational(N + 1) * chain.measure(p, x), Rational(1))) c.within_envelope = false;
    }
  }
  c.pass = c.rows_stochastic && c.detailed_balance && c.within_envelope && c.epsilon < Rational(1, 6);
  return c;
}

nlohmann::json ExcursionReport::to_json() const {
  nlohmann::json rowsj = nlohmann::json::array();
  for (const auto& r : rows) rowsj.push_back({{"N", r.N}, {"prob", r.prob}, {"std_err", r.std_err}});
  return {{"theta", to_string(theta)}, {"eta", to_string(eta)},     {"replicates", replicates},
          {"slope", slope},            {"intercept", intercept}, {"r_squared", r_squared},
          {"decreasing", decreasing},  {"rows", rowsj}};
}

ExcursionReport excursion_tail(std::span<const int> n_grid, const Rational& theta, const Rational& eta,
                               std::uint64_t replicates, std::uint64_t seed, const Budget& budget, int workers) {
  if (replicates == 0) throw DomainError("excursion_tail: replicates must be > 0");
  if (replicates > budget.replicate_cap)
    throw BudgetError("excursion_tail: replicates exceed the replicate cap", 0);
  ExcursionReport rep;
  rep.theta = theta;
  rep.eta = eta;
  rep.replicates = replicates;
  workers = resolve_workers(workers);
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    const int N = n_grid[g];
    const MergingChainSchedule chain(N, theta, eta);
    const auto& even = chain.kernel_rows(0);
    const auto& odd = chain.kernel_rows(1);
    const int horizon = N / 2;  // sigma_0 >= N/2 iff X_t != 0 for 1 <= t < N/2
    std::vector<std::uint64_t> hits(workers, 0);
    parallel_chunks(replicates, workers, [&](int w, std::uint64_t begin, std::uint64_t end) {
      for (std::uint64_t r = begin; r < end; ++r) {
        CounterRng rng(seed ^ (static_cast<std::uint64_t>(N) << 40), r);
        int x = 0;
        bool returned = false;
        for (int t = 0; t + 1 < horizon; ++t) {
          const auto& rows = (t & 1) ? odd : even;
          const double u = rng.uniform();
          if (u < rows.left[x]) --x;
          else if (u >= rows.left[x] + rows.stay[x]) ++x;
          if (x == 0) {
            returned = true;
            break;
          }
        }
        if (!returned) ++hits[w];
      }
    });
    ExcursionRow row{};
    row.N = N;
    for (auto h : hits) row.hits += h;
    row.prob = static_cast<double>(row.hits) / static_cast<double>(replicates);
    row.std_err = std::sqrt(row.prob * (1.0 - row.prob) / static_cast<double>(replicates));
    row.log_prob = row.hits > 0 ? std::log(row.prob) : -kInf;
    rep.rows.push_back(row);
  }
  std::vector<double> x, y;
  for (const auto& r : rep.rows) {
    if (r.hits == 0) continue;
    x.push_back(r.N);
    y.push_back(r.log_prob);
  }
  const auto fit = least_squares(x, y);
  rep.slope = fit.slope;
  rep.intercept = fit.intercept;
  rep.r_squared = fit.r_squared;
  rep.decreasing = true;
  for (std::size_t k = 1; k < rep.rows.size(); ++k)
    if (!(rep.rows[k].prob < rep.rows[k - 1].prob)) rep.decreasing = false;
  return rep;
}

}  // namespace growlab
