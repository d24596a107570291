#include "growlab/acceptance.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "growlab/bounds.hpp"
#include "growlab/evolving_sets.hpp"
#include "growlab/families.hpp"
#include "growlab/isoperimetry.hpp"
#include "growlab/merging.hpp"
#include "growlab/rng.hpp"
#include "growlab/walk.hpp"

namespace growlab {

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// Criteria 1 and 2 share the two test families.
struct SetFamily {
  std::string name;
  std::shared_ptr<ExplicitSequence> seq;
};

std::vector<SetFamily> set_families(std::int64_t horizon) {
  return {{"two_vertex", ExplicitSequence::frozen(two_vertex_graph(), horizon, "two_vertex")},
          {"growing_path", growing_path_family(horizon)}};
}

CriterionResult evolving_set_identity(const AcceptanceOptions& o) {
  CriterionResult r{1, "evolving-set identity", true, {}, 0.0, {}};
  constexpr std::int64_t T = 10;
  constexpr std::uint64_t n = 100'000;
  std::uint64_t checks = 0, failures = 0;
  double worst_z = 0.0;
  for (const auto& fam : set_families(T)) {
    const SnapshotTimeline tl(*fam.seq, T);
    const VertexId x0 = 0;
    const auto run = run_plain(tl, x0, T, n, o.seed + 1, {}, o.workers);
    ExactEvolver<double> ev(tl, 0, x0);
    const double pi0 = static_cast<double>(tl.at(0).degree_of(x0));
    for (std::int64_t t = 0; t <= T; ++t) {
      if (t > 0) ev.step();
      const auto& g = tl.at(t);
      for (Index i = 0; i < g.size(); ++i) {
        const double scale = static_cast<double>(g.degree(i)) / pi0;
        const double est = scale * run.membership_prob(t, i);
        const double se = scale * run.membership_se(t, i);
        const double diff = std::abs(est - ev.mass()[i]);
        ++checks;
        const bool ok = se > 0 ? diff <= 3.0 * se : diff <= 1e-12;
        if (se > 0) worst_z = std::max(worst_z, diff / se);
        if (!ok) ++failures;
      }
    }
  }
  r.pass = failures == 0;
  r.detail = std::to_string(checks) + " (t, y) checks, " + std::to_string(failures) + " outside 3 SE, worst |z| = " +
             fmt(worst_z);
  r.data = {{"checks", checks}, {"failures", failures}, {"worst_z", worst_z}, {"replicates", n}};
  return r;
}

CriterionResult martingale(const AcceptanceOptions& o) {
  CriterionResult r{2, "martingale property", true, {}, 0.0, {}};
  constexpr std::int64_t T = 20;
  constexpr std::uint64_t n = 100'000;
  std::uint64_t failures = 0;
  double worst_z = 0.0;
  for (const auto& fam : set_families(T)) {
    const SnapshotTimeline tl(*fam.seq, T);
    const auto run = run_plain(tl, 0, T, n, o.seed + 2, {}, o.workers);
    const double pi0 = static_cast<double>(tl.at(0).degree_of(0));
    for (std::int64_t t = 0; t <= T; ++t) {
      const double diff = std::abs(run.mean_weight[t] - pi0);
      const double se = run.weight_se[t];
      if (se > 0) worst_z = std::max(worst_z, diff / se);
      if (se > 0 ? diff > 3.0 * se : diff > 1e-12) ++failures;
    }
  }
  r.pass = failures == 0;
  r.detail = std::to_string(failures) + " of 42 times outside 3 SE, worst |z| = " + fmt(worst_z);
  r.data = {{"failures", failures}, {"worst_z", worst_z}};
  return r;
}

struct SoundnessTally {
  std::uint64_t checks = 0;
  std::uint64_t first_violations = 0;
  std::uint64_t second_violations = 0;
  double worst_first = 0.0;   ///< max exact / first_bound
  double worst_second = 0.0;  ///< max exact / second_bound
};

void soundness_scan(const GrowingGraphSequence& seq, VertexId x0, std::int64_t T, const BoundParams& params,
                    int workers, SoundnessTally& tally) {
  const SnapshotTimeline tl(seq, T);
  ProfileCache cache(seq, 20, workers);
  const auto first = make_first_bound(tl, cache, params, x0, T);
  std::vector<std::int64_t> volumes;
  std::vector<double> cheeger;
  for (std::int64_t u = 0; u <= T; ++u) {
    volumes.push_back(tl.at(u).volume());
    cheeger.push_back(cache.at(tl.ptr(u))->cheeger());
  }
  ExactEvolver<double> ev(tl, 0, x0);
  for (std::int64_t t = 1; t <= T; ++t) {
    ev.step();
    if (t < 2) continue;
    const double second = second_bound(volumes, cheeger, t, params);
    const auto& g = ev.graph();
    std::map<std::int64_t, double> first_by_degree;
    for (Index i = 0; i < g.size(); ++i) {
      const std::int64_t deg = g.degree(i);
      auto it = first_by_degree.find(deg);
      if (it == first_by_degree.end()) it = first_by_degree.emplace(deg, first(t, deg).value).first;
      const double p = ev.mass()[i];
      ++tally.checks;
      if (p > it->second) ++tally.first_violations;
      if (p > second) ++tally.second_violations;
      tally.worst_first = std::max(tally.worst_first, p / it->second);
      tally.worst_second = std::max(tally.worst_second, p / second);
    }
  }
}

CriterionResult bound_soundness(const AcceptanceOptions& o) {
  CriterionResult r{3, "bound soundness", true, {}, 0.0, {}};
  SoundnessTally tally;
  {
    auto seq = ExplicitSequence::frozen(two_vertex_graph(), 50, "two_vertex");
    BoundParams p{0.5, 0.5, 2};
    soundness_scan(*seq, 0, 50, p, o.workers, tally);
  }
  {
    LatticeBallParams lp;
    lp.d = 2;
    lp.beta = 1.0;
    lp.a = 1.0;
    lp.gamma = 0.5;
    lp.horizon = 200;
    LatticeBallFamily fam(lp);
    fam.set_cd(calibrate_lattice_cd(2, fam.loops(), 25, o.workers).c_d);
    BoundParams p{0.5, 0.5, *fam.delta_cap()};
    soundness_scan(fam, fam.origin(), 200, p, o.workers, tally);
  }
  r.pass = tally.first_violations == 0 && tally.second_violations == 0;
  r.detail = std::to_string(tally.checks) + " checks, violations first/second = " +
             std::to_string(tally.first_violations) + "/" + std::to_string(tally.second_violations) +
             ", max exact/bound = " + fmt(tally.worst_first) + " / " + fmt(tally.worst_second);
  r.data = {{"checks", tally.checks},
            {"first_violations", tally.first_violations},
            {"second_violations", tally.second_violations},
            {"max_ratio_first", tally.worst_first},
            {"max_ratio_second", tally.worst_second}};
  return r;
}

CriterionResult flat_profile(const AcceptanceOptions&) {
  CriterionResult r{4, "flat-profile closed form", true, {}, 0.0, {}};
  constexpr std::int64_t steps = 40;
  constexpr std::int64_t x0_degree = 3;
  double worst = 0.0;
  int points = 0;
  for (double alpha : {0.1, 0.3, 0.5, 0.7, 0.9})
    for (double gamma : {0.25, 0.5})
      for (double phi : {0.05, 0.4}) {
        BoundParams params{alpha, gamma, std::nullopt};
        const auto prof = IsoperimetricProfile::constant(phi, 1000.0, ProfileSource::analytic_lower_bound);
        std::vector<const IsoperimetricProfile*> span(steps, &prof);
        const auto traj = iterate_L(span, params, 5, x0_degree);
        const double Ls = std::pow(static_cast<double>(x0_degree), alpha - 1.0);
        for (std::int64_t k = 0; k <= steps; ++k) {
          const double closed = Ls * std::exp(-params.c_plus() * phi * phi * static_cast<double>(k));
          worst = std::max(worst, std::abs(traj.values[k] - closed) / closed);
        }
        ++points;
      }
  r.pass = worst <= 1e-8 && points == 20;
  r.detail = std::to_string(points) + " grid points, max relative error " + fmt(worst);
  r.data = {{"points", points}, {"max_relative_error", worst}};
  return r;
}

GraphSnapshot random_connected_graph(CounterRng& rng) {
  const int n = 2 + static_cast<int>(rng.below(9));
  std::vector<EdgeEntry> edges;
  for (int x = 1; x < n; ++x)
    edges.push_back({static_cast<VertexId>(rng.below(x)), x, 1 + static_cast<std::int64_t>(rng.below(3))});
  for (int x = 0; x < n; ++x)
    for (int y = x + 1; y < n; ++y)
      if (rng.uniform() < 0.3) edges.push_back({x, y, 1 + static_cast<std::int64_t>(rng.below(3))});
  for (int x = 0; x < n; ++x)
    if (rng.uniform() < 0.5) edges.push_back({x, x, 1 + static_cast<std::int64_t>(rng.below(3))});
  return GraphSnapshot::from_edges(edges);
}

CriterionResult on_diagonal(const AcceptanceOptions& o) {
  CriterionResult r{5, "on-diagonal lower bound", true, {}, 0.0, {}};
  std::uint64_t checks = 0, violations = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (std::uint64_t k = 0; k < 100; ++k) {
    CounterRng rng(o.seed + 5, k);
    const auto g = random_connected_graph(rng);
    const auto rep = on_diag_lower_check(g, 50);
    checks += rep.checks;
    violations += rep.violations;
    worst = std::min(worst, rep.worst_margin);
  }
  r.pass = violations == 0 && worst >= -1e-12;
  r.detail = "100 graphs, " + std::to_string(checks) + " checks, worst slack " + fmt(worst);
  r.data = {{"checks", checks}, {"violations", violations}, {"worst_slack", worst}};
  return r;
}

CriterionResult merging_falsification(const AcceptanceOptions&) {
  CriterionResult r{6, "merging falsification", true, {}, 0.0, {}};
  const Rational small(1, 20);
  const MergingChainSchedule chain(32, small, small);
  const auto cert = certify_constraints(chain);
  MergingOptions mo;
  mo.t_max = 100 * 32 * 32;
  mo.delta = 0.5;
  const auto rep = merging_distances(chain, mo);
  const double tv = rep.final.tv;
  std::array<std::optional<std::int64_t>, 3> times;
  const std::array<int, 3> ns{12, 16, 20};
  for (std::size_t k = 0; k < ns.size(); ++k)
    times[k] = tv_merging_time(MergingChainSchedule(ns[k], small, small), 0.5, 10'000'000);
  const double quadratic = (20.0 / 12.0) * (20.0 / 12.0);
  double growth = NAN;
  if (times[0] && times[2]) growth = static_cast<double>(*times[2]) / static_cast<double>(*times[0]);
  const bool tv_ok = tv >= 0.99;
  const bool growth_ok = !times[2] || (times[0] && growth > quadratic);
  r.pass = cert.pass && tv_ok && growth_ok;
  auto show = [](const std::optional<std::int64_t>& t) { return t ? std::to_string(*t) : std::string("none"); };
  r.detail = "eps = " + fmt(cert.epsilon.convert_to<double>()) + (cert.pass ? " (certified)" : " (NOT certified)") +
             ", TV(t=102400) = " + fmt(tv) + (tv_ok ? "" : " < 0.99") + ", T_TV(1/2) N=12/16/20 = " + show(times[0]) +
             "/" + show(times[1]) + "/" + show(times[2]) + ", T(20)/T(12) = " + fmt(growth) + " vs " + fmt(quadratic);
  r.data = {{"eps", cert.epsilon.convert_to<double>()},
            {"certified", cert.pass},
            {"tv_at_100N2", tv},
            {"T_tv_12", times[0] ? nlohmann::json(*times[0]) : nlohmann::json(nullptr)},
            {"T_tv_16", times[1] ? nlohmann::json(*times[1]) : nlohmann::json(nullptr)},
            {"T_tv_20", times[2] ? nlohmann::json(*times[2]) : nlohmann::json(nullptr)},
            {"growth_ratio", std::isnan(growth) ? nlohmann::json(nullptr) : nlohmann::json(growth)},
            {"quadratic_ratio", quadratic}};
  return r;
}

CriterionResult two_state(const AcceptanceOptions&) {
  CriterionResult r{7, "two-state drift", true, {}, 0.0, {}};
  const Rational tenth(1, 10);
  const auto a = two_state_analysis(tenth, tenth);
  // Oracle: stationary law of a two-state chain from its off-diagonal rates.
  const Rational eta = tenth, theta = tenth;
  const Rational ab = (1 - eta) / (3 - eta), ba(1, 3);
  const Rational uA = ba / (ab + ba), uB = ab / (ab + ba);
  const Rational oracle = uA * (-2 * theta / (3 - eta)) + uB * (2 * theta / 3);
  const bool exact_ok = a.beta == Rational(-1, 280) && oracle == a.beta && a.stationary_exact;
  int negative = 0, total = 0;
  Rational worst = -1;
  for (int i = 1; i <= 19; ++i)
    for (int j = 1; j <= 19; ++j) {
      const auto g = two_state_analysis(Rational(i, 20), Rational(j, 20));
      ++total;
      if (g.beta < 0) ++negative;
      if (g.beta > worst) worst = g.beta;
    }
  r.pass = exact_ok && negative == total;
  r.detail = "beta(0.1, 0.1) = " + to_string(a.beta) + (exact_ok ? " (matches oracle)" : " (MISMATCH)") + ", " +
             std::to_string(negative) + "/" + std::to_string(total) + " grid points negative, max " +
             fmt(worst.convert_to<double>());
  r.data = {{"beta", to_string(a.beta)}, {"grid_negative", negative}, {"grid_total", total}};
  return r;
}

CriterionResult excursion(const AcceptanceOptions& o) {
  CriterionResult r{8, "excursion tail", true, {}, 0.0, {}};
  const std::vector<int> grid{8, 16, 24, 32};
  const auto drift = excursion_tail(grid, Rational(1, 20), Rational(1, 20), 100'000, o.seed + 8, {}, o.workers);
  const auto null = excursion_tail(grid, Rational(0), Rational(0), 100'000, o.seed + 8, {}, o.workers);
  const bool shape = drift.slope < 0 && drift.r_squared >= 0.9 && drift.decreasing;
  const bool contrast = std::abs(drift.slope) >= 5.0 * std::abs(null.slope);
  r.pass = shape && contrast;
  std::string probs;
  for (const auto& row : drift.rows) probs += (probs.empty() ? "" : "/") + fmt(row.prob);
  r.detail = "P = " + probs + ", slope " + fmt(drift.slope) + " (R^2 " + fmt(drift.r_squared) + "), null slope " +
             fmt(null.slope) + ", ratio " + fmt(std::abs(drift.slope / null.slope)) + " (need >= 5)";
  r.data = {{"drift", drift.to_json()}, {"null", null.to_json()}};
  return r;
}

CriterionResult phase_diagram(const AcceptanceOptions& o) {
  CriterionResult r{9, "phase-diagram consistency", true, {}, 0.0, {}};
  const auto a = zd_phase(3, 1.2);
  const auto b = zd_phase(4, 3.0);
  const auto c = zd_phase(3, 0.8);
  const bool phases = a.phase == ZdPhase::transient_via_second_bound &&
                      b.phase == ZdPhase::transient_via_first_bound && b.witness_alpha && *b.witness_alpha > 0.0 &&
                      *b.witness_alpha < 0.5 && c.phase == ZdPhase::upper_bounds_silent;
  const std::array<std::int64_t, 2> ks{1000, 10000};
  auto growth = [&](double beta) {
    LatticeBallParams lp;
    lp.d = 3;
    lp.beta = beta;
    lp.a = 1.0;
    lp.gamma = 0.5;
    lp.horizon = ks[1];
    LatticeBallFamily fam(lp);
    const SnapshotTimeline tl(fam, ks[1]);
    const auto rows = return_stats_mc(tl, fam.origin(), ks, 100'000, o.seed + 9, {}, o.workers);
    return std::array<double, 2>{rows[0].mean, rows[1].mean};
  };
  const auto slow = growth(0.8);
  const auto fast = growth(1.2);
  const double f_slow = slow[1] / slow[0];
  const double f_fast = fast[1] / fast[0];
  const bool contrast = f_slow >= 1.1 * f_fast;
  r.pass = phases && contrast;
  r.detail = std::string("phases ") + (phases ? "ok" : "WRONG") + ", E[N0] growth 1e3->1e4: beta=0.8 x" + fmt(f_slow) +
             ", beta=1.2 x" + fmt(f_fast) + " (margin " + fmt(f_slow / f_fast - 1.0) + ")";
  r.data = {{"phase_3_1.2", to_string(a.phase)},
            {"phase_4_3", to_string(b.phase)},
            {"witness_alpha", b.witness_alpha ? nlohmann::json(*b.witness_alpha) : nlohmann::json(nullptr)},
            {"phase_3_0.8", to_string(c.phase)},
            {"mean_slow", slow},
            {"mean_fast", fast},
            {"factor_slow", f_slow},
            {"factor_fast", f_fast}};
  return r;
}

CriterionResult lower_bound_stability(const AcceptanceOptions&) {
  CriterionResult r{10, "lower-bound stability", true, {}, 0.0, {}};
  LatticeBallParams lp;
  lp.d = 2;
  lp.beta = 2.0 / 3.0;
  lp.a = 1.0;
  lp.gamma = 0.5;
  lp.horizon = 2000;
  LatticeBallFamily fam(lp);
  LowerBoundConfig cfg;
  cfg.psi_exponent = 2.0;
  cfg.delta0 = 0.5;
  for (std::int64_t t = 1000; t <= 2000; t += 10) cfg.t_grid.push_back(t);
  const auto rep = lower_bound_check(fam, cfg);
  r.pass = rep.positive && rep.stability <= 2.0 && rep.empty_at.empty();
  r.detail = "c_hat = " + fmt(rep.c_hat) + ", max/min over [1000, 2000] = " + fmt(rep.stability) + ", window m* " +
             std::to_string(rep.rows.front().window) + ".." + std::to_string(rep.rows.back().window);
  r.data = rep.to_json();
  return r;
}

CriterionResult isoperimetry_oracle(const AcceptanceOptions& o) {
  CriterionResult r{11, "isoperimetry oracle", true, {}, 0.0, {}};
  const auto path = exact_profile(path_graph(4, 0), 20, o.workers);
  const bool path_ok = path.cheeger_ratio && path.cheeger_ratio->first * 3 == path.cheeger_ratio->second &&
                       path.cheeger_witness == std::vector<VertexId>{0, 1};
  LatticeGeometry geo(2);
  const auto loops = loops_for_gamma(2, 0.5);
  const double cd = calibrate_lattice_cd(2, loops, 25, o.workers).c_d;
  std::uint64_t checks = 0, failures = 0;
  for (int radius = 0; radius <= 2; ++radius) {
    const auto g = lattice_ball_snapshot(geo, radius, loops);
    const auto exact = exact_profile(g, 20, o.workers);
    const auto analytic = IsoperimetricProfile::power_law(cd, 2, static_cast<double>(g.volume()));
    std::vector<double> rs;
    for (const auto& [x, _] : exact.breakpoints()) rs.push_back(x);
    for (const auto& [x, _] : analytic.breakpoints()) rs.push_back(x);
    for (double x = 0.25; x <= g.volume(); x += 0.25) rs.push_back(x);
    for (double x : rs) {
      if (!(x > 0.0)) continue;
      ++checks;
      if (exact.at(x) < analytic.at(x) * (1.0 - 1e-12)) ++failures;
    }
  }
  r.pass = path_ok && failures == 0;
  r.detail = std::string("P4 Cheeger ") +
             (path.cheeger_ratio ? std::to_string(path.cheeger_ratio->first) + "/" + std::to_string(path.cheeger_ratio->second)
                                 : "none") +
             " witness " + (path_ok ? "{0,1}" : "WRONG") + ", Z^2 balls r<=2 (c_d = " + fmt(cd) + "): " +
             std::to_string(failures) + " of " + std::to_string(checks) + " points below the analytic bound";
  r.data = {{"path_ok", path_ok}, {"c_d", cd}, {"checks", checks}, {"failures", failures}};
  return r;
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts,
                                            const std::function<void(const CriterionResult&)>& on_result) {
  using Fn = CriterionResult (*)(const AcceptanceOptions&);
  const std::array<Fn, 11> all{evolving_set_identity, martingale,     bound_soundness,       flat_profile,
                               on_diagonal,           merging_falsification, two_state,      excursion,
                               phase_diagram,         lower_bound_stability, isoperimetry_oracle};
  std::vector<CriterionResult> out;
  for (int id = 1; id <= static_cast<int>(all.size()); ++id) {
    if (!opts.only.empty() && !opts.only.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    CriterionResult res;
    try {
      res = all[id - 1](opts);
    } catch (const std::exception& e) {
      res = {id, "criterion " + std::to_string(id), false, std::string("error: ") + e.what(), 0.0, {}};
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (on_result) on_result(res);
    out.push_back(std::move(res));
  }
  return out;
}

std::string format_result(const CriterionResult& r) {
  std::ostringstream os;
  os << (r.pass ? "[PASS] " : "[FAIL] ") << r.id << " " << r.name << ": " << r.detail << " (" << fmt(r.seconds)
     << " s)";
  return os.str();
}

nlohmann::json acceptance_json(const std::vector<CriterionResult>& results) {
  nlohmann::json arr = nlohmann::json::array();
  bool all = true;
  for (const auto& r : results) {
    all = all && r.pass;
    arr.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail}, {"seconds", r.seconds},
                   {"data", r.data}});
  }
  return {{"all_pass", all}, {"criteria", arr}};
}

}  // namespace growlab
