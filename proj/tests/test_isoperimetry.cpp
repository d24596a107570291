#include <doctest.h>

#include <cmath>
#include <random>

#include "growlab/families.hpp"
#include "growlab/isoperimetry.hpp"
#include "oracles.hpp"

using namespace growlab;

namespace {

/// Probe radii: every breakpoint, midpoints between them, and past v/2.
std::vector<double> probes(const IsoperimetricProfile& p) {
  std::vector<double> r;
  const auto bp = p.breakpoints();
  for (std::size_t i = 0; i < bp.size(); ++i) {
    if (bp[i].first > 0) r.push_back(bp[i].first);
    if (i + 1 < bp.size()) r.push_back((bp[i].first + bp[i + 1].first) / 2);
  }
  r.push_back(0.5);
  r.push_back(p.volume() / 2);
  r.push_back(p.volume());
  return r;
}

}  // namespace

TEST_CASE("exact profiles agree with plain subset enumeration") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = oracle::random_connected(2 + trial % 9, rng);
    const auto p = exact_profile(g, 20, 1 + trial % 3);
    CHECK(p.source() == ProfileSource::exact);
    for (double r : probes(p)) {
      const double want = oracle::profile_at(g, r);
      if (std::isinf(want))
        CHECK(std::isinf(p.at(r)));
      else
        CHECK(p.at(r) == doctest::Approx(want).epsilon(1e-12));
    }
    CHECK(p.cheeger() == doctest::Approx(oracle::profile_at(g, p.volume())));
    CHECK_NOTHROW(p.check_monotone());
  }
}

TEST_CASE("path on four vertices without loops") {
  const auto g = path_graph(4, 0);
  const auto p = exact_profile(g);
  CHECK(p.volume() == 6);
  CHECK(p.cheeger() == doctest::Approx(1.0 / 3.0));
  REQUIRE(p.cheeger_ratio);
  CHECK(p.cheeger_ratio->first * 3 == p.cheeger_ratio->second);
  CHECK(p.cheeger_witness == std::vector<VertexId>{0, 1});
  CHECK(p.at(1) == doctest::Approx(1.0));
  CHECK_FALSE(p.admissible(0.5));
}

TEST_CASE("two components have zero Cheeger constant") {
  std::vector<EdgeEntry> e = {{0, 1, 1}, {2, 3, 1}};
  const auto p = exact_profile(GraphSnapshot::from_edges(e));
  CHECK(p.cheeger() == 0.0);
}

TEST_CASE("relabeling vertices leaves the profile unchanged") {
  std::mt19937_64 rng(4);
  const auto g = oracle::random_connected(8, rng);
  std::vector<EdgeEntry> shuffled;
  for (const auto& e : g.edges()) shuffled.push_back({100 - e.x * 7, 100 - e.y * 7, e.mult});
  const auto a = exact_profile(g);
  const auto b = exact_profile(GraphSnapshot::from_edges(shuffled));
  REQUIRE(a.breakpoints().size() == b.breakpoints().size());
  for (std::size_t i = 0; i < a.breakpoints().size(); ++i) {
    CHECK(a.breakpoints()[i].first == b.breakpoints()[i].first);
    CHECK(a.breakpoints()[i].second == b.breakpoints()[i].second);
  }
}

TEST_CASE("enumeration cap") {
  CHECK_THROWS_AS(exact_profile(path_graph(12, 1), 10), DomainError);
}

TEST_CASE("analytic lower bounds") {
  SUBCASE("expander families give a constant profile") {
    ExpanderParams ep;
    ep.gamma = 0.5;
    ep.horizon = 20;
    ExpanderFamily fam(ep);
    const auto p = analytic_profile(fam, 10);
    CHECK(p.source() == ProfileSource::analytic_lower_bound);
    for (double r : {1.0, 5.0, 1e6}) CHECK(p.at(r) == doctest::Approx(0.25));
    CHECK(p.cheeger() == doctest::Approx(0.25));
  }
  SUBCASE("power law formula") {
    const auto p = analytic_profile(PowerLawCertificate{0.1, 3}, 1000);
    CHECK(p.at(8) == doctest::Approx(0.05));
    CHECK(p.at(700) == doctest::Approx(0.1 * std::pow(500.0, -1.0 / 3.0)));
  }
  SUBCASE("families without a certificate are rejected") {
    auto seq = growing_path_family(5);
    CHECK_THROWS_AS(analytic_profile(*seq, 1), DomainError);
  }
}

TEST_CASE("calibrated coefficient is dominated by exact profiles of small planar balls") {
  const auto loops = loops_for_gamma(2, 0.5);
  const auto cal = calibrate_lattice_cd(2, loops);
  CHECK(cal.c_d > 0);
  LatticeGeometry geo(2);
  for (double radius : {1.0, 2.0}) {
    const auto g = lattice_ball_snapshot(geo, radius, loops);
    const auto exact = exact_profile(g);
    const auto bound = IsoperimetricProfile::power_law(cal.c_d, 2, exact.volume());
    for (double r = 0.25; r <= exact.volume(); r += 0.25)
      if (exact.admissible(r)) CHECK(exact.at(r) >= bound.at(r) * (1 - 1e-12));
    CHECK(dominating_coefficient(exact, 2) >= cal.c_d * (1 - 1e-12));
  }
}

TEST_CASE("profile cache switches to the analytic bound above the cap") {
  LatticeBallParams lp;
  lp.d = 2;
  lp.horizon = 30;
  lp.c_d = 0.3;
  LatticeBallFamily fam(lp);
  ProfileCache cache(fam, 12);
  CHECK(cache.at(fam.snapshot_at(1))->source() == ProfileSource::exact);
  CHECK(cache.at(fam.snapshot_at(30))->source() == ProfileSource::analytic_lower_bound);
  CHECK(cache.at(fam.snapshot_at(1)).get() == cache.at(fam.snapshot_at(1)).get());
}

TEST_CASE("profile json marks missing admissible sets") {
  std::vector<EdgeEntry> e = {{0, 0, 2}};
  const auto p = exact_profile(GraphSnapshot::from_edges(e));
  const auto j = p.to_json();
  CHECK(j.dump().find("none") != std::string::npos);
  CHECK(j.dump().find("inf") == std::string::npos);
}
