#include <doctest.h>

#include <cmath>

#include "growlab/families.hpp"
#include "growlab/merging.hpp"

using namespace growlab;

namespace {

/// Parity-environment drift rebuilt from the kernel of a long chain: moving
/// keeps the parity of x + t, staying flips it.
Rational drift_from_kernel(const Rational& theta, const Rational& eta) {
  MergingChainSchedule chain(40, theta, eta);
  const int x = 10;
  Rational move[2], stay[2], drift[2];
  for (int p = 0; p < 2; ++p) {
    const int t = (x + p) % 2;  // x + t even for p = 0
    move[p] = chain.kernel(t, x, x - 1) + chain.kernel(t, x, x + 1);
    stay[p] = chain.kernel(t, x, x);
    drift[p] = chain.kernel(t, x, x + 1) - chain.kernel(t, x, x - 1);
  }
  const Rational ua = stay[1] / (stay[0] + stay[1]);
  return ua * drift[0] + (1 - ua) * drift[1];
}

/// Exact laws from 0 and N, evolved row by row through chain.kernel.
std::vector<std::pair<std::vector<Rational>, std::vector<Rational>>> evolve_both(const MergingChainSchedule& chain,
                                                                                 int T) {
  const int N = chain.N();
  std::vector<Rational> p(N + 1), q(N + 1);
  p[0] = 1;
  q[N] = 1;
  std::vector<std::pair<std::vector<Rational>, std::vector<Rational>>> out{{p, q}};
  for (int t = 0; t < T; ++t) {
    std::vector<Rational> np(N + 1), nq(N + 1);
    for (int x = 0; x <= N; ++x)
      for (int y = std::max(0, x - 1); y <= std::min(N, x + 1); ++y) {
        np[y] += p[x] * chain.kernel(t, x, y);
        nq[y] += q[x] * chain.kernel(t, x, y);
      }
    p = np;
    q = nq;
    out.push_back({p, q});
  }
  return out;
}

}  // namespace

TEST_CASE("two-state environment") {
  SUBCASE("no laziness penalty gives equal weights") {
    const auto a = two_state_analysis(Rational(1, 10), Rational(0));
    CHECK(a.stationary[0] == Rational(1, 2));
    CHECK(a.stationary[1] == Rational(1, 2));
  }
  SUBCASE("drift at theta = eta = 1/10") {
    const auto a = two_state_analysis(Rational(1, 10), Rational(1, 10));
    CHECK(a.beta == Rational(-1, 280));
    CHECK(a.beta == drift_from_kernel(Rational(1, 10), Rational(1, 10)));
    CHECK(a.stationary_exact);
  }
  SUBCASE("agrees with the kernel over a parameter grid") {
    for (int i = 0; i < 10; i += 3)
      for (int j = 0; j < 10; j += 3) {
        const Rational th(i, 10), et(j, 10);
        const auto a = two_state_analysis(th, et);
        CHECK(a.beta == drift_from_kernel(th, et));
        CHECK(a.stationary[0] + a.stationary[1] == 1);
      }
  }
  CHECK_THROWS_AS(two_state_analysis(Rational(1), Rational(0)), DomainError);
}

TEST_CASE("merging distances match an independent exact evolution") {
  MergingChainSchedule chain(6, Rational(1, 20), Rational(1, 10));
  const int T = 30;
  MergingOptions opts;
  opts.t_max = T;
  opts.stride = 1;
  opts.exact = true;
  const auto rep = merging_distances(chain, opts);
  const auto laws = evolve_both(chain, T);
  CHECK(rep.max_mass_drift == 0.0);
  for (int t = 0; t <= T; ++t) {
    const auto& [p, q] = laws[t];
    Rational tv = 0;
    for (int z = 0; z <= 6; ++z) {
      // Mirror symmetry of the schedule carries the law from 0 onto the law from N.
      CHECK(p[z] == q[6 - z]);
      tv += p[z] > q[z] ? p[z] - q[z] : q[z] - p[z];
    }
    const auto row = rep.at(t);
    REQUIRE(row);
    CHECK(row->tv == doctest::Approx((tv / 2).convert_to<double>()).epsilon(1e-12));
  }
  CHECK(rep.at(0)->tv == 1.0);
  CHECK(std::isinf(rep.at(0)->relsup));
}

TEST_CASE("floating evolution conserves mass") {
  MergingChainSchedule chain(32, Rational(1, 20), Rational(1, 20));
  MergingOptions opts;
  opts.t_max = 5000;
  const auto rep = merging_distances(chain, opts);
  CHECK(rep.max_mass_drift <= 1e-12);
  REQUIRE(rep.t_tv);
  CHECK(*rep.t_tv > 0);
}

TEST_CASE("exact merging is capped") {
  MergingChainSchedule chain(8, Rational(1, 20), Rational(1, 20));
  MergingOptions opts;
  opts.exact = true;
  opts.t_max = kExactMergingSteps + 10;
  CHECK_THROWS_AS(merging_distances(chain, opts), BudgetError);
}

TEST_CASE("symmetric chain merges on the diffusive scale") {
  const auto t16 = tv_merging_time(MergingChainSchedule(16, Rational(0), Rational(0)), 0.5, 100000);
  const auto t32 = tv_merging_time(MergingChainSchedule(32, Rational(0), Rational(0)), 0.5, 100000);
  REQUIRE(t16);
  REQUIRE(t32);
  const double ratio = static_cast<double>(*t32) / static_cast<double>(*t16);
  MESSAGE("T(32)/T(16) = " << ratio);
  CHECK(ratio >= 3.0);
  CHECK(ratio <= 6.0);
}

TEST_CASE("strong drift toward the ends slows merging beyond the diffusive scale") {
  double prev = 0;
  for (int N : {8, 16, 24, 32}) {
    const auto t = tv_merging_time(MergingChainSchedule(N, Rational(9, 10), Rational(9, 10)), 0.5, 2'000'000);
    REQUIRE(t);
    const double scaled = static_cast<double>(*t) / (N * N);
    MESSAGE("N = " << N << ", T/N^2 = " << scaled);
    CHECK(scaled > prev);
    prev = scaled;
  }
}

TEST_CASE("constraint certificate") {
  SUBCASE("no drift") {
    MergingChainSchedule chain(8, Rational(0), Rational(0));
    CHECK(chain.realized_epsilon() == 0);
    const auto c = certify_constraints(chain);
    CHECK(c.pass);
  }
  SUBCASE("theta = eta = 1/20") {
    MergingChainSchedule chain(8, Rational(1, 20), Rational(1, 20));
    const auto c = certify_constraints(chain);
    CHECK(c.rows_stochastic);
    CHECK(c.detailed_balance);
    CHECK(c.within_envelope);
    CHECK(c.epsilon > 0);
    CHECK(c.epsilon < Rational(1, 6));
    CHECK(c.pass);
  }
  SUBCASE("detailed balance by hand") {
    MergingChainSchedule chain(8, Rational(1, 20), Rational(3, 20));
    for (int t = 0; t < 2; ++t)
      for (int x = 0; x < 8; ++x)
        CHECK(chain.measure(t, x) * chain.kernel(t, x, x + 1) == chain.measure(t, x + 1) * chain.kernel(t, x + 1, x));
  }
}

TEST_CASE("excursion tail") {
  const std::vector<int> small = {4};
  const auto r = excursion_tail(small, Rational(1, 20), Rational(1, 20), 20000, 3);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].prob >= 0.0);
  CHECK(r.rows[0].prob <= 1.0);
  CHECK(r.rows[0].hits <= 20000);

  SUBCASE("symmetric walk decays like a power of N") {
    const std::vector<int> grid = {8, 16, 24, 32};
    const auto rep = excursion_tail(grid, Rational(0), Rational(0), 100000, 5, {}, 2);
    // Least-squares slope of -0.5 log N against N on the same grid.
    double mx = 0, my = 0;
    for (int n : grid) {
      mx += n / 4.0;
      my += -0.5 * std::log(n) / 4.0;
    }
    double sxy = 0, sxx = 0;
    for (int n : grid) {
      sxy += (n - mx) * (-0.5 * std::log(n) - my);
      sxx += (n - mx) * (n - mx);
    }
    const double want = sxy / sxx;
    MESSAGE("slope " << rep.slope << ", power-law slope " << want);
    CHECK(rep.slope < want / 1.5);
    CHECK(rep.slope > want * 1.5);
  }
  SUBCASE("worker count does not change the counts") {
    const std::vector<int> grid = {6, 10};
    const auto a = excursion_tail(grid, Rational(1, 20), Rational(1, 20), 5000, 9, {}, 1);
    const auto b = excursion_tail(grid, Rational(1, 20), Rational(1, 20), 5000, 9, {}, 3);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(a.rows[i].hits == b.rows[i].hits);
  }
}
