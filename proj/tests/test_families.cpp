#include <doctest.h>

#include <cmath>

#include "growlab/families.hpp"
#include "growlab/isoperimetry.hpp"
#include "growlab/walk.hpp"
#include "oracles.hpp"

using namespace growlab;

namespace {

LatticeBallFamily planar(double beta, std::int64_t horizon) {
  LatticeBallParams p;
  p.d = 2;
  p.beta = beta;
  p.horizon = horizon;
  return LatticeBallFamily(p);
}

}  // namespace

TEST_CASE("lattice ball at t = 16 contains the induced radius-2 ball") {
  auto fam = planar(1.0, 16);
  const auto g = fam.snapshot_at(16);
  const auto& geo = fam.geometry();
  const auto ball = geo.ball(2);
  for (auto v : ball) {
    REQUIRE(g->contains(v));
    const auto c = geo.decode(v);
    for (int axis = 0; axis < 2; ++axis)
      for (int s : {-1, 1}) {
        auto n = c;
        n[axis] += s;
        const auto w = geo.encode(n);
        if (geo.norm(w) <= 2) CHECK(g->multiplicity_of(v, w) >= 1);
      }
  }
  // 13 points of degree at least 2d + loops.
  CHECK(g->volume() >= static_cast<std::int64_t>(ball.size()) * (4 + fam.loops()));
}

TEST_CASE("lattice ball at t = 0 is one vertex whose kernel is the identity") {
  auto fam = planar(1.0, 4);
  const auto g = fam.snapshot_at(0);
  REQUIRE(g->size() == 1);
  const auto row = step_kernel(*g, fam.origin());
  REQUIRE(row.size() == 1);
  CHECK(row[0].second == 1.0);
}

TEST_CASE("loops realize the laziness floor exactly at interior vertices") {
  for (int d : {2, 3, 4})
    for (double gamma : {0.25, 0.5}) {
      const auto m = loops_for_gamma(d, gamma);
      CHECK(static_cast<double>(m) / static_cast<double>(2 * d + m) >= gamma);
      CHECK(static_cast<double>(m - 1) / static_cast<double>(2 * d + m - 1) < gamma);
    }
  CHECK(loops_for_gamma(2, 0.5) == 4);
}

TEST_CASE("volume of the d = 3, beta = 1.2 family stays within constant factors of t^1.2") {
  LatticeBallParams p;
  p.d = 3;
  p.beta = 1.2;
  p.horizon = 10000;
  LatticeBallFamily fam(p);
  double lo = INFINITY, hi = 0;
  for (double t = 100; t <= 10000; t *= 1.35) {
    const auto r = fam.radius(static_cast<std::int64_t>(t));
    const double v = fam.limit_ball_volume(static_cast<double>(r));
    const double ratio = v / std::pow(std::floor(t), 1.2);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  MESSAGE("v(t)/t^1.2 in [" << lo << ", " << hi << "]");
  CHECK(lo > 0);
  CHECK(hi / lo < 3.0);
}

TEST_CASE("every shipped family validates at its full horizon") {
  auto lattice = planar(1.0, 60);
  CHECK(validate_monotone(lattice, 60).pass);

  ExpanderParams ep;
  ep.horizon = 60;
  ExpanderFamily expander(ep);
  CHECK(validate_monotone(expander, 60).pass);

  auto path = growing_path_family(20);
  CHECK(validate_monotone(*path, 20).pass);

  FrozenNestedParams fp;
  fp.d = 2;
  fp.inner = {1, 2, 4};
  fp.outer = {1.5, 3, 6};
  fp.stage_starts = {0, 10, 30};
  fp.horizon = 50;
  FrozenNestedFamily frozen(fp);
  CHECK(validate_monotone(frozen, 50).pass);
}

TEST_CASE("induced edges persist in growing lattice balls") {
  auto fam = planar(1.0, 40);
  const auto& geo = fam.geometry();
  for (std::int64_t t = 0; t <= 40; ++t) {
    const auto g = fam.snapshot_at(t);
    for (auto v : g->vertices()) {
      auto c = geo.decode(v);
      c[0] += 1;
      const auto w = geo.encode(c);
      if (g->contains(w)) CHECK(g->multiplicity_of(v, w) >= 1);
    }
  }
}

TEST_CASE("frozen nested balls with doubling radii") {
  FrozenNestedParams p;
  p.d = 3;
  p.inner = {1, 2, 4, 8};
  p.outer = {1.5, 3, 6, 12};
  p.stage_starts = {0, 5, 20, 60};
  p.delta = 1.0 / 3.0;
  p.horizon = 100;
  FrozenNestedFamily fam(p);
  SUBCASE("snapshot is frozen within a stage") {
    for (std::int64_t t = 20; t < 60; ++t) CHECK(fam.snapshot_at(t).get() == fam.snapshot_at(20).get());
    CHECK(fam.snapshot_at(60).get() != fam.snapshot_at(59).get());
  }
  SUBCASE("stages sit between inner and outer balls") {
    const auto& geo = fam.geometry();
    for (const auto& st : fam.stages()) {
      const auto g = fam.snapshot_at(st.begin);
      for (auto v : geo.ball(st.inner)) CHECK(g->contains(v));
      for (auto v : g->vertices()) CHECK(static_cast<double>(geo.norm(v)) <= st.outer);
    }
  }
  SUBCASE("stage volumes grow exponentially in the stage index") {
    for (double rate : fam.growth_rates()) CHECK(rate > 0.0);
    // log v(K_l)/l for r_l = 2^l approaches 3 log 2 from above.
    const auto deg = 6 + fam.loops();
    double prev = INFINITY;
    for (int l = 1; l <= 8; ++l) {
      const double v = static_cast<double>(LatticeGeometry::ball_size(3, std::int64_t{1} << l) * deg);
      const double rate = std::log(v) / l;
      CHECK(rate > 3 * std::log(2.0));
      CHECK(rate < prev);
      prev = rate;
    }
  }
}

TEST_CASE("frozen nesting violations are rejected") {
  FrozenNestedParams p;
  p.d = 2;
  p.inner = {1, 2};
  p.outer = {3, 4};
  p.stage_starts = {0, 5};
  CHECK_THROWS_AS(FrozenNestedFamily{p}, DomainError);
  p.outer = {1.5, 2};
  p.inner = {1, 1.8};
  CHECK_THROWS_AS(FrozenNestedFamily{p}, DomainError);
}

TEST_CASE("zero-length frozen stages are allowed") {
  FrozenNestedParams p;
  p.d = 2;
  p.inner = {1, 2, 4};
  p.outer = {1.5, 3, 6};
  p.stage_starts = {0, 10, 10};
  p.horizon = 20;
  FrozenNestedFamily fam(p);
  CHECK(fam.stages()[1].begin == fam.stages()[1].end);
  CHECK(fam.stage_of(10) == 2);
}

TEST_CASE("expander family keeps its certified Cheeger floor") {
  ExpanderParams p;
  p.horizon = 40;
  p.gamma = 0.5;
  ExpanderFamily fam(p);
  for (std::int64_t t = 0; t <= 40; t += 5) {
    const auto n = fam.vertex_count(t);
    if (n < 2 || n > 12) continue;
    const auto g = fam.snapshot_at(t);
    const double exact = oracle::profile_at(*g, static_cast<double>(g->volume()) / 2.0);
    CHECK(exact == doctest::Approx(fam.cheeger(n)));
    CHECK(exact >= fam.certified_floor() - 1e-12);
  }
}

TEST_CASE("merging schedule kernels") {
  SUBCASE("no drift gives rows of thirds") {
    MergingChainSchedule chain(8, Rational(0), Rational(0));
    for (int t = 0; t < 2; ++t)
      for (int x = 1; x < 8; ++x) {
        CHECK(chain.kernel(t, x, x - 1) == Rational(1, 3));
        CHECK(chain.kernel(t, x, x) == Rational(1, 3));
        CHECK(chain.kernel(t, x, x + 1) == Rational(1, 3));
      }
  }
  SUBCASE("left half, x + t even, pushes toward 0") {
    const Rational th(1, 10), et(1, 10);
    MergingChainSchedule chain(8, th, et);
    const Rational den = 3 - et;
    for (int x = 1; x < 4; ++x) {
      const int t = x % 2;
      CHECK(chain.kernel(t, x, x - 1) == (1 + th) / den);
      CHECK(chain.kernel(t, x, x) == (1 - et) / den);
      CHECK(chain.kernel(t, x, x + 1) == (1 - th) / den);
    }
  }
  SUBCASE("rows are stochastic and the chain is mirror symmetric") {
    MergingChainSchedule chain(10, Rational(1, 20), Rational(3, 40));
    for (int t = 0; t < 2; ++t)
      for (int x = 0; x <= 10; ++x) {
        Rational s = 0;
        for (int y = std::max(0, x - 1); y <= std::min(10, x + 1); ++y) {
          s += chain.kernel(t, x, y);
          CHECK(chain.kernel(t, x, y) == chain.kernel(t, 10 - x, 10 - y));
        }
        CHECK(s == 1);
      }
  }
  SUBCASE("stationary measure stays within the realized epsilon of uniform") {
    MergingChainSchedule chain(16, Rational(1, 20), Rational(1, 20));
    const Rational eps = chain.realized_epsilon();
    for (int t = 0; t < 2; ++t)
      for (int x = 0; x <= 16; ++x) {
        Rational dev = 17 * chain.measure(t, x) - 1;
        if (dev < 0) dev = -dev;
        CHECK(dev <= eps);
      }
  }
}
