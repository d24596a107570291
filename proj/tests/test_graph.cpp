#include <doctest.h>

#include <algorithm>
#include <random>

#include "growlab/families.hpp"
#include "growlab/graph.hpp"
#include "growlab/sequence.hpp"
#include "oracles.hpp"

using namespace growlab;

TEST_CASE("self-loops count once in the degree") {
  const auto g = two_vertex_graph();
  CHECK(g.size() == 2);
  CHECK(g.degree_of(0) == 2);
  CHECK(g.degree_of(1) == 2);
  CHECK(g.volume() == 4);
  CHECK(g.self_loops(g.index(0)) == 1);
  CHECK(g.multiplicity_of(0, 1) == 1);
}

TEST_CASE("repeated edge entries accumulate and isolated ids are dropped") {
  std::vector<EdgeEntry> e = {{0, 1, 1}, {1, 0, 2}, {5, 5, 0}};
  const auto g = GraphSnapshot::from_edges(e);
  CHECK(g.size() == 2);
  CHECK_FALSE(g.contains(5));
  CHECK(g.multiplicity_of(1, 0) == 3);
}

TEST_CASE("malformed listings raise structural errors") {
  std::vector<EdgeEntry> asym = {{0, 1, 2}, {1, 0, 1}};
  CHECK_THROWS_AS(GraphSnapshot::from_directed(asym), StructuralError);
  std::vector<EdgeEntry> neg = {{0, 1, -1}};
  CHECK_THROWS_AS(GraphSnapshot::from_edges(neg), StructuralError);
  const auto g = two_vertex_graph();
  CHECK_THROWS_AS(g.index(7), StructuralError);
}

TEST_CASE("cached degrees and volume match a recount from the multiplicity map") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = oracle::random_connected(2 + trial % 12, rng);
    const auto m = oracle::dense(g);
    std::int64_t vol = 0;
    for (Index i = 0; i < g.size(); ++i) {
      CHECK(g.degree(i) == oracle::dense_degree(m, i));
      vol += oracle::dense_degree(m, i);
      for (Index j = 0; j < g.size(); ++j) CHECK(g.multiplicity(i, j) == g.multiplicity(j, i));
    }
    CHECK(g.volume() == vol);
    std::int64_t from_edges = 0;
    for (const auto& e : g.edges()) from_edges += e.x == e.y ? e.mult : 2 * e.mult;
    CHECK(from_edges == vol);
    CHECK(g.connected());
  }
}

TEST_CASE("json dump round-trips") {
  std::mt19937_64 rng(3);
  const auto g = oracle::random_connected(7, rng);
  const auto j = g.to_json(4);
  CHECK(j["t"] == 4);
  CHECK(j["volume"] == g.volume());
  CHECK(GraphSnapshot::from_json(j) == g);
}

TEST_CASE("frozen two-vertex sequence validates with laziness floor one half") {
  auto seq = ExplicitSequence::frozen(two_vertex_graph(), 10);
  const auto r = validate_monotone(*seq, 10);
  CHECK(r.pass);
  CHECK(r.laziness_floor == doctest::Approx(0.5));
  CHECK(r.max_degree == 2);
}

TEST_CASE("a multiplicity drop is reported at the time it happens") {
  std::vector<EdgeEntry> before = {{0, 1, 2}, {0, 0, 1}, {1, 1, 1}};
  std::vector<EdgeEntry> after = {{0, 1, 1}, {0, 0, 1}, {1, 1, 1}};
  ExplicitSequence seq({0, 5},
                       {std::make_shared<const GraphSnapshot>(GraphSnapshot::from_edges(before)),
                        std::make_shared<const GraphSnapshot>(GraphSnapshot::from_edges(after))},
                       10);
  const auto r = validate_monotone(seq, 10);
  CHECK_FALSE(r.pass);
  REQUIRE(r.violation);
  CHECK(r.violation->t == 5);
  CHECK(std::min(r.violation->x, r.violation->y) == 0);
  CHECK(std::max(r.violation->x, r.violation->y) == 1);
  CHECK(r.violation->before == 2);
  CHECK(r.violation->after == 1);
  // Repeating the scan gives the same report.
  CHECK(validate_monotone(seq, 10).to_json() == r.to_json());
}

TEST_CASE("growing planar balls validate at the configured laziness") {
  LatticeBallParams p;
  p.d = 2;
  p.beta = 0.5;
  p.gamma = 0.5;
  p.horizon = 100;
  LatticeBallFamily fam(p);
  const auto r = validate_monotone(fam, 100);
  CHECK(r.pass);
  CHECK(r.laziness_floor == doctest::Approx(0.5));
  CHECK(fam.radius(100) == 4);
}

TEST_CASE("relative boundary") {
  LatticeGeometry geo(2);
  const auto ref = lattice_ball_snapshot(geo, 5, 0);
  SUBCASE("whole vertex set has no boundary") {
    std::vector<VertexId> all(ref.vertices().begin(), ref.vertices().end());
    CHECK(relative_boundary(all, ref).empty());
  }
  SUBCASE("ball of radius 2 has the radius-2 sphere as boundary") {
    const auto ball = geo.ball(2);
    auto got = relative_boundary(ball, ref);
    std::vector<VertexId> sphere;
    for (auto v : ball)
      if (geo.norm(v) == 2) sphere.push_back(v);
    std::sort(got.begin(), got.end());
    CHECK(got == sphere);
    CHECK(sphere.size() == 8);
  }
  SUBCASE("single interior vertex is its own boundary") {
    const std::vector<VertexId> one = {geo.origin()};
    CHECK(relative_boundary(one, ref) == one);
  }
  SUBCASE("regions outside the reference are rejected") {
    const std::vector<VertexId> far = {geo.encode(std::vector<int>{9, 0})};
    CHECK_THROWS_AS(relative_boundary(far, ref), DomainError);
    CHECK_THROWS_AS(relative_boundary({}, ref), DomainError);
  }
}

TEST_CASE("explicit sequences reject decreasing stage starts") {
  auto s = std::make_shared<const GraphSnapshot>(two_vertex_graph());
  CHECK_THROWS_AS(ExplicitSequence({0, 5, 3}, {s, s, s}, 10), DomainError);
  CHECK_THROWS_AS(ExplicitSequence({1}, {s}, 10), DomainError);
}

TEST_CASE("timeline rejects a vertex that disappears") {
  std::vector<EdgeEntry> big = {{0, 1, 1}, {1, 2, 1}};
  std::vector<EdgeEntry> small = {{0, 1, 1}};
  ExplicitSequence seq({0, 2},
                       {std::make_shared<const GraphSnapshot>(GraphSnapshot::from_edges(big)),
                        std::make_shared<const GraphSnapshot>(GraphSnapshot::from_edges(small))},
                       4);
  CHECK_THROWS_AS(SnapshotTimeline(seq, 4), StructuralError);
  CHECK_FALSE(validate_monotone(seq, 4).pass);
}
