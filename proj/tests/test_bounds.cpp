#include <doctest.h>

#include <cmath>
#include <random>

#include "growlab/bounds.hpp"
#include "growlab/families.hpp"
#include "growlab/isoperimetry.hpp"
#include "growlab/walk.hpp"
#include "oracles.hpp"

using namespace growlab;

namespace {

/// integral_{lo/2}^{hi/2} dz / (c z phi(z^(1/(alpha-1)))^2) by Simpson's rule in log z.
double l_integral(const IsoperimetricProfile& p, double lo, double hi, double c, double alpha, int n = 20000) {
  const double a = std::log(lo / 2), b = std::log(hi / 2);
  const double h = (b - a) / n;
  auto f = [&](double u) {
    const double phi = p.at(std::exp(u / (alpha - 1)));
    return std::isinf(phi) ? 0.0 : 1.0 / (c * phi * phi);
  };
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4 : 2);
  return s * h / 3;
}

std::shared_ptr<ExplicitSequence> frozen_two_vertex(std::int64_t horizon) {
  auto seq = ExplicitSequence::frozen(two_vertex_graph(), horizon);
  seq->declare_gamma(0.5);
  seq->declare_delta(2);
  return seq;
}

}  // namespace

TEST_CASE("rate constants") {
  BoundParams p;
  p.alpha = 0.5;
  p.gamma = 0.5;
  CHECK(p.c_plus() == 0.5);
  CHECK(p.c_star() == 0.5);
  p.alpha = 0.3;
  p.gamma = 0.25;
  CHECK(p.c_plus() == doctest::Approx(2 * 0.3 * 0.7 * 0.0625 / 0.5625));
  CHECK(p.c_star() == doctest::Approx(0.0625 / (2 * 0.5625)));
  p.alpha = 1.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p.alpha = 0.5;
  p.gamma = 0.6;
  CHECK_THROWS_AS(p.validate(), DomainError);
}

TEST_CASE("flat profiles give geometric decay of L") {
  BoundParams params;
  for (double alpha : {0.2, 0.5, 0.8})
    for (double phi : {0.05, 0.3}) {
      params.alpha = alpha;
      const auto prof = IsoperimetricProfile::constant(phi, 500, ProfileSource::exact);
      std::vector<const IsoperimetricProfile*> ps(30, &prof);
      const auto traj = iterate_L(ps, params, 0, 4);
      CHECK(traj.values[0] == doctest::Approx(std::pow(4.0, alpha - 1)));
      for (std::size_t u = 1; u < traj.values.size(); ++u)
        CHECK(traj.values[u] == doctest::Approx(traj.values[u - 1] * std::exp(-params.c_plus() * phi * phi)).epsilon(1e-9));
    }
}

TEST_CASE("L on the frozen two-vertex graph starts at 2^(-1/2)") {
  auto seq = frozen_two_vertex(10);
  SnapshotTimeline tl(*seq, 10);
  ProfileCache cache(*seq);
  BoundParams params;
  const auto fb = make_first_bound(tl, cache, params, 0, 10);
  CHECK(fb.L(3, 3) == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("each L step solves the integral condition") {
  BoundParams params;
  const auto power = IsoperimetricProfile::power_law(0.4, 2, 2000);
  const auto stepped = exact_profile(path_graph(7, 2));
  for (double alpha : {0.25, 0.5, 0.75}) {
    params.alpha = alpha;
    for (const auto* prof : {&power, &stepped}) {
      double L = std::pow(3.0, alpha - 1);
      for (int k = 0; k < 6; ++k) {
        const auto next = iterate_L_step(*prof, L, params.c_plus(), alpha);
        REQUIRE_FALSE(next.floored);
        CHECK(next.value < L);
        CHECK(l_integral(*prof, next.value, L, params.c_plus(), alpha) == doctest::Approx(1.0).epsilon(1e-6));
        L = next.value;
      }
    }
  }
}

TEST_CASE("L with no admissible set floors and flags") {
  std::vector<EdgeEntry> e = {{0, 0, 3}};
  const auto prof = exact_profile(GraphSnapshot::from_edges(e));
  const auto step = iterate_L_step(prof, 0.5, 0.5, 0.5);
  CHECK(step.floored);
  CHECK(step.value == kLFloor);
}

TEST_CASE("L trajectories are non-increasing and at most one") {
  std::mt19937_64 rng(9);
  BoundParams params;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<IsoperimetricProfile> profs;
    for (int u = 0; u < 8; ++u) profs.push_back(exact_profile(oracle::random_connected(3 + (trial + u) % 6, rng)));
    std::vector<const IsoperimetricProfile*> ps;
    for (auto& p : profs) ps.push_back(&p);
    params.alpha = 0.1 + 0.08 * trial;
    const auto traj = iterate_L(ps, params, 0, 1 + trial % 4);
    CHECK(traj.values[0] <= 1.0);
    for (std::size_t u = 1; u < traj.values.size(); ++u) CHECK(traj.values[u] <= traj.values[u - 1]);
  }
}

TEST_CASE("first bound on the frozen two-vertex graph at t = 2") {
  auto seq = frozen_two_vertex(2);
  SnapshotTimeline tl(*seq, 2);
  ProfileCache cache(*seq);
  BoundParams params;
  const auto fb = make_first_bound(tl, cache, params, 0, 2);
  const auto b = fb(2, 2);
  CHECK(b.argmin_s == 1);
  CHECK(b.value >= 0.5);
  // Only s = 1 is available: 2*2/4 + sqrt(2) * 2^(-1/2) e^(-c_+ / 4).
  CHECK(b.value == doctest::Approx(1.0 + std::exp(-0.125)));
}

TEST_CASE("larger profiles never raise the first bound") {
  const std::int64_t T = 40;
  std::vector<std::int64_t> vols;
  std::vector<std::shared_ptr<const IsoperimetricProfile>> lo, hi;
  for (std::int64_t u = 0; u <= T; ++u) {
    const double v = 20.0 * (u + 1);
    vols.push_back(static_cast<std::int64_t>(v));
    lo.push_back(std::make_shared<IsoperimetricProfile>(IsoperimetricProfile::power_law(0.2, 2, v)));
    hi.push_back(std::make_shared<IsoperimetricProfile>(IsoperimetricProfile::power_law(0.35, 2, v)));
  }
  BoundParams params;
  FirstBoundEvaluator a(vols, lo, params, 5), b(vols, hi, params, 5);
  for (std::int64_t t = 2; t <= T; ++t)
    for (std::int64_t deg : {1, 5}) CHECK(b(t, deg).value <= a(t, deg).value * (1 + 1e-12));
}

TEST_CASE("s grid") {
  CHECK(FirstBoundEvaluator::s_grid(2) == std::vector<std::int64_t>{1});
  CHECK(FirstBoundEvaluator::s_grid(512).size() == 511);
  const auto g = FirstBoundEvaluator::s_grid(10000);
  CHECK(g.size() < 200);
  CHECK(std::find(g.begin(), g.end(), 5000) != g.end());
}

TEST_CASE("second bound") {
  BoundParams params;
  params.delta = 4;
  const double C = second_bound_constant(4);
  CHECK(C == 8.0);
  CHECK(second_bound_constant(1) == 2.0);
  SUBCASE("zero Cheeger constants leave the constant term") {
    std::vector<std::int64_t> v(21, 10);
    std::vector<double> phi(21, 0.0);
    CHECK(second_bound(v, phi, 20, params) == doctest::Approx(C * (0.1 + 1.0)));
  }
  SUBCASE("flat Cheeger constants") {
    std::vector<std::int64_t> v;
    std::vector<double> phi(201, 0.25);
    for (int t = 0; t <= 200; ++t) v.push_back(10 + t);
    const double want = C * (1.0 / v[100] + std::exp(-params.c_star() * 0.0625 * 100));
    CHECK(second_bound(v, phi, 200, params) == doctest::Approx(want));
  }
  SUBCASE("unknown degree bound is rejected") {
    BoundParams none;
    std::vector<std::int64_t> v(5, 4);
    std::vector<double> phi(5, 0.5);
    CHECK_THROWS_AS(second_bound(v, phi, 4, none), DomainError);
  }
}

TEST_CASE("bounds dominate exact transition probabilities") {
  struct Case {
    std::shared_ptr<GrowingGraphSequence> seq;
    VertexId x0;
    std::int64_t T;
  };
  std::vector<Case> cases;
  cases.push_back({frozen_two_vertex(50), 0, 50});
  cases.push_back({growing_path_family(30), 0, 30});
  {
    auto p5 = ExplicitSequence::frozen(path_graph(5, 1), 30);
    p5->declare_gamma(1.0 / 3.0);
    p5->declare_delta(3);
    cases.push_back({p5, 2, 30});
  }
  {
    ExpanderParams ep;
    ep.horizon = 40;
    cases.push_back({std::make_shared<ExpanderFamily>(ep), 0, 40});
  }
  {
    LatticeBallParams lp;
    lp.d = 2;
    lp.horizon = 40;
    auto fam = std::make_shared<LatticeBallFamily>(lp);
    fam->set_cd(calibrate_lattice_cd(2, fam->loops()).c_d);
    cases.push_back({fam, fam->origin(), 40});
  }
  std::int64_t checks = 0, violations = 0;
  for (const auto& c : cases) {
    SnapshotTimeline tl(*c.seq, c.T);
    ProfileCache cache(*c.seq);
    std::vector<std::int64_t> vols;
    std::vector<double> cheeger;
    for (std::int64_t u = 0; u <= c.T; ++u) {
      vols.push_back(tl.at(u).volume());
      cheeger.push_back(cache.at(tl.ptr(u))->cheeger());
    }
    const auto exact = evolve_exact(tl, c.x0, c.T);
    for (double alpha : {0.2, 0.5, 0.8}) {
      BoundParams params;
      params.alpha = alpha;
      params.gamma = *c.seq->gamma();
      params.delta = c.seq->delta_cap();
      const auto fb = make_first_bound(tl, cache, params, c.x0, c.T);
      for (std::int64_t t = 2; t <= c.T; ++t) {
        const double second = params.delta ? second_bound(vols, cheeger, t, params) : INFINITY;
        for (const auto& [y, p] : exact[t].entries) {
          const double first = fb(t, tl.at(t).degree_of(y)).value;
          ++checks;
          if (p > first * (1 + 1e-12) || p > second * (1 + 1e-12)) ++violations;
        }
      }
    }
  }
  MESSAGE(checks << " checks");
  CHECK(violations == 0);
}

TEST_CASE("transience partial sums") {
  const int H = 10000;
  SUBCASE("quadratic volume") {
    std::vector<double> v(H + 1), phi(H, 0.3);
    for (int t = 0; t <= H; ++t) v[t] = std::max(1.0, double(t) * t);
    const auto rep = transience_report(v, phi);
    const double pi2_6 = M_PI * M_PI / 6;
    CHECK(rep.rows.back().sum_inv_vol == doctest::Approx(pi2_6 - 1.0 / H).epsilon(1e-6));
    CHECK(rep.inv_vol_flag == SeriesFlag::consistent_with_convergence);
    CHECK(rep.volume_exponent == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(rep.mixing_flag == SeriesFlag::consistent_with_convergence);
  }
  SUBCASE("linear volume and vanishing Cheeger constants") {
    std::vector<double> v(H + 1), phi(H, 0.0);
    for (int t = 0; t <= H; ++t) v[t] = std::max(1.0, double(t));
    const auto rep = transience_report(v, phi);
    CHECK(rep.inv_vol_flag == SeriesFlag::consistent_with_divergence);
    CHECK(rep.mixing_flag == SeriesFlag::consistent_with_divergence);
  }
}

TEST_CASE("lattice phase classification") {
  CHECK(zd_phase(3, 1.2).phase == ZdPhase::transient_via_second_bound);
  const auto c = zd_phase(4, 3.0);
  CHECK(c.phase == ZdPhase::transient_via_first_bound);
  REQUIRE(c.witness_alpha);
  CHECK(*c.witness_alpha > 0.0);
  CHECK(*c.witness_alpha < 0.5);
  CHECK(zd_phase(3, 0.8).phase == ZdPhase::upper_bounds_silent);
  CHECK_THROWS_AS(zd_phase(2, 1.5), DomainError);
  CHECK_THROWS_AS(zd_phase(3, 0.0), DomainError);
  for (int d = 3; d <= 9; ++d)
    for (double beta = 0.05; beta < 7; beta += 0.05) {
      const auto z = zd_phase(d, beta);
      const bool second = beta > 1 && beta < d / 2.0;
      const bool first = beta > 1 && beta >= d / 2.0;
      const bool silent = beta <= 1;
      CHECK(second + first + silent == 1);
      if (second) CHECK(z.phase == ZdPhase::transient_via_second_bound);
      if (first) {
        CHECK(z.phase == ZdPhase::transient_via_first_bound);
        CHECK(*z.witness_alpha < 1 - 2.0 / d);
      }
      if (silent) CHECK(z.phase == ZdPhase::upper_bounds_silent);
    }
}

TEST_CASE("lower bound scan on slowly growing planar balls") {
  LatticeBallParams lp;
  lp.d = 2;
  lp.beta = 2.0 / 3.0;
  lp.horizon = 300;
  LatticeBallFamily fam(lp);
  fam.set_cd(calibrate_lattice_cd(2, fam.loops()).c_d);
  LowerBoundConfig cfg;
  for (std::int64_t t = 10; t <= 300; t += 10) cfg.t_grid.push_back(t);
  const auto rep = lower_bound_check(fam, cfg, {}, [&](std::int64_t u) { return analytic_profile(fam, u).cheeger(); });
  CHECK(rep.positive);
  CHECK(rep.empty_at.empty());
  CHECK(rep.c_hat > 0.0);
  for (const auto& r : rep.rows) {
    CHECK(r.admissible >= 1);
    CHECK(r.min_v_times_p > 0.0);
    CHECK(std::isfinite(r.zeta));
    CHECK(std::abs(r.ball_like_ratio) < 0.5);
  }
  CHECK(rep.rows.back().running_min == doctest::Approx(rep.c_hat));
}

TEST_CASE("frozen recurrence experiment") {
  SUBCASE("a zero-length stage contributes nothing") {
    FrozenNestedParams p;
    p.d = 2;
    p.inner = {1, 2, 4};
    p.outer = {1.5, 3, 6};
    p.stage_starts = {0, 20, 20};
    p.horizon = 60;
    FrozenNestedFamily fam(p);
    FrozenRecurrenceOptions opts;
    opts.replicates = 2000;
    const auto rep = frozen_recurrence_experiment(fam, 60, opts);
    REQUIRE(rep.stages.size() == 3);
    CHECK(rep.stages[1].local_time == 0.0);
    CHECK(rep.stages[1].floor_shape == 0.0);
  }
  SUBCASE("local time tracks stage length over volume") {
    FrozenNestedParams p;
    p.d = 3;
    p.inner = {1, 2, 4, 8, 16};
    p.outer = {1.5, 3, 6, 12, 24};
    p.stage_starts = {0, 40, 100, 1500, 3000};
    p.horizon = 12000;
    FrozenNestedFamily fam(p);
    FrozenRecurrenceOptions opts;
    opts.replicates = 3000;
    opts.workers = 2;
    opts.exit_ratio_max_stage = 2;
    const auto rep = frozen_recurrence_experiment(fam, 12000, opts);
    MESSAGE("rank correlation " << rep.rank_correlation << ", fitted constant " << rep.fitted_constant);
    CHECK(rep.rank_correlation > 0.0);
    for (const auto& s : rep.stages)
      if (s.exit_ratio) CHECK(std::isfinite(*s.exit_ratio));
  }
}
