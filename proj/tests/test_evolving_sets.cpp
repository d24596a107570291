#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "growlab/evolving_sets.hpp"
#include "growlab/families.hpp"
#include "growlab/walk.hpp"
#include "oracles.hpp"

using namespace growlab;

TEST_CASE("one evolving-set step") {
  const auto g = two_vertex_graph();
  SUBCASE("empty set stays empty") {
    for (double u : {0.0, 0.3, 0.99}) CHECK(evolving_step({}, g, g, u).empty());
  }
  SUBCASE("the full frozen vertex set is kept for u < 1") {
    const std::vector<VertexId> all = {0, 1};
    for (double u : {0.0, 0.5, 0.999}) CHECK(evolving_step(all, g, g, u) == all);
  }
  SUBCASE("a single vertex of the two-vertex graph") {
    const std::vector<VertexId> a = {0};
    CHECK(evolving_step(a, g, g, 0.3) == std::vector<VertexId>{0, 1});
    CHECK(evolving_step(a, g, g, 0.7).empty());
  }
  SUBCASE("a shrinking snapshot is a hard error") {
    std::vector<EdgeEntry> heavy = {{0, 1, 3}, {0, 0, 1}, {1, 1, 1}};
    const auto before = GraphSnapshot::from_edges(heavy);
    const std::vector<VertexId> a = {0};
    CHECK_THROWS_AS(evolving_step(a, before, g, 0.5), StructuralError);
  }
}

TEST_CASE("smaller thresholds give supersets") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const auto g = oracle::random_connected(3 + trial % 8, rng);
    std::vector<VertexId> s;
    for (auto v : g.vertices())
      if (unif(rng) < 0.4) s.push_back(v);
    double u1 = unif(rng), u2 = unif(rng);
    if (u1 > u2) std::swap(u1, u2);
    const auto big = evolving_step(s, g, g, u1);
    const auto small = evolving_step(s, g, g, u2);
    CHECK(std::includes(big.begin(), big.end(), small.begin(), small.end()));
  }
}

TEST_CASE("plain evolving sets on the frozen two-vertex graph") {
  auto seq = ExplicitSequence::frozen(two_vertex_graph(), 20);
  SnapshotTimeline tl(*seq, 20);
  const std::uint64_t n = 100000;
  const auto run = run_plain(tl, 0, 20, n, 5);
  CHECK(run.membership_prob(0, tl.at(0).index(0)) == 1.0);
  CHECK(run.mean_weight[0] == 2.0);
  for (std::int64_t t = 0; t <= 20; ++t) {
    CHECK(std::abs(run.mean_weight[t] - 2.0) <= 3 * run.weight_se[t] + 1e-12);
    // Extinction is absorbing.
    if (t > 0) CHECK(run.extinct_fraction[t] >= run.extinct_fraction[t - 1]);
  }
}

TEST_CASE("set membership reproduces walk probabilities on the growing path") {
  auto seq = growing_path_family(10);
  SnapshotTimeline tl(*seq, 10);
  const std::uint64_t n = 100000;
  const auto run = run_plain(tl, 0, 10, n, 8, {}, 2);
  const auto ref = oracle::evolve(*seq, 0, 10);
  const double pi0 = static_cast<double>(tl.at(0).degree_of(0));
  double worst = 0;
  for (std::int64_t t = 0; t <= 10; ++t) {
    const auto& g = tl.at(t);
    for (Index i = 0; i < g.size(); ++i) {
      const double scale = static_cast<double>(g.degree(i)) / pi0;
      const double p = oracle::prob_at(ref[t], g.id(i)).convert_to<double>();
      const double est = scale * run.membership_prob(t, i);
      const double se = scale * run.membership_se(t, i);
      if (se == 0) {
        CHECK(est == doctest::Approx(p));
        continue;
      }
      worst = std::max(worst, std::abs(est - p) / se);
    }
  }
  MESSAGE("worst |z| " << worst);
  CHECK(worst <= 3.0);
}

TEST_CASE("size-biased weighting") {
  auto seq = ExplicitSequence::frozen(two_vertex_graph(), 16);
  SnapshotTimeline tl(*seq, 16);
  const std::uint64_t n = 100000;
  SizeBiasedOptions opts;
  opts.alpha = 0.5;
  opts.anchor = 0;
  const auto sb = run_size_biased(tl, 0, 16, n, 13, opts);
  SUBCASE("weight starts at exactly one") {
    CHECK(sb.mean_lr[0] == 1.0);
    CHECK(sb.lr_se[0] == 0.0);
  }
  SUBCASE("L at the anchor respects its closed-form ceiling") {
    CHECK(sb.x0_bound == doctest::Approx(std::pow(2.0, -0.5)));
    CHECK(sb.L[0] <= sb.x0_bound + 3 * sb.L_se[0] + 1e-12);
  }
  SUBCASE("L does not increase beyond Monte Carlo error") {
    for (std::size_t u = 1; u < sb.L.size(); ++u)
      CHECK(sb.L[u] <= sb.L[u - 1] + 3 * std::hypot(sb.L_se[u], sb.L_se[u - 1]) + 1e-12);
  }
  SUBCASE("weighted and plain estimators agree") {
    const auto plain = run_plain(tl, 0, 16, n, 14);
    for (std::int64_t t = 0; t <= 16; ++t)
      for (Index i = 0; i < 2; ++i) {
        const double scale = static_cast<double>(tl.at(t).degree(i)) / 2.0;
        const double a = scale * plain.membership_prob(t, i);
        const double b = sb.walk_estimate[t][i];
        const double se = std::hypot(scale * plain.membership_se(t, i), sb.walk_se[t][i]);
        CHECK(std::abs(a - b) <= 3 * se + 1e-12);
      }
  }
}

TEST_CASE("evolving-set runs do not depend on the worker count") {
  auto seq = growing_path_family(12);
  SnapshotTimeline tl(*seq, 12);
  const auto a = run_plain(tl, 0, 12, 4000, 77, {}, 1);
  const auto b = run_plain(tl, 0, 12, 4000, 77, {}, 4);
  CHECK(a.membership == b.membership);
  CHECK(a.mean_weight == b.mean_weight);
}
