#include "growlab/walk.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "growlab/parallel.hpp"
#include "growlab/stats.hpp"

namespace growlab {

namespace {

void check_replicates(std::uint64_t n, const Budget& budget) {
  if (n > budget.replicate_cap)
    throw BudgetError("replicate cap exceeded: " + std::to_string(n) + " > " + std::to_string(budget.replicate_cap));
}

void check_horizon(const SnapshotTimeline& tl, std::int64_t T) {
  if (T < 0) throw DomainError("horizon must be >= 0");
  if (T > tl.last()) throw DomainError("horizon " + std::to_string(T) + " beyond the resolved timeline");
}

struct RegionMarks {
  std::vector<char> inside;    // in H
  std::vector<char> boundary;  // in the inner boundary of H
  std::int64_t volume = 0;
};

RegionMarks mark_region(const GraphSnapshot& g, std::span<const VertexId> region) {
  RegionMarks m;
  m.inside.assign(g.size(), 0);
  m.boundary.assign(g.size(), 0);
  const auto bd = relative_boundary(region, g);
  if (bd.empty()) throw DomainError("hitting time: region has no boundary in the reference graph");
  for (auto v : region) {
    const Index i = g.index(v);
    if (!m.inside[i]) m.volume += g.degree(i);
    m.inside[i] = 1;
  }
  for (auto v : bd) m.boundary[g.index(v)] = 1;
  return m;
}

Index sample_neighbor(const GraphSnapshot& g, Index pos, CounterRng& rng) {
  std::int64_t u = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(g.degree(pos))));
  const Neighbor* n = g.row(pos).data();
  while (u >= n->mult) {
    u -= n->mult;
    ++n;
  }
  return n->to;
}

}  // namespace

std::vector<std::pair<VertexId, double>> step_kernel(const GraphSnapshot& g, VertexId x) {
  const Index i = g.index(x);
  if (g.degree(i) == 0) throw StructuralError("step_kernel: isolated vertex " + std::to_string(x));
  std::vector<std::pair<VertexId, double>> row;
  const double d = static_cast<double>(g.degree(i));
  for (const auto& n : g.row(i)) row.emplace_back(g.id(n.to), static_cast<double>(n.mult) / d);
  return row;
}

std::vector<std::pair<VertexId, Rational>> step_kernel_exact(const GraphSnapshot& g, VertexId x) {
  const Index i = g.index(x);
  if (g.degree(i) == 0) throw StructuralError("step_kernel: isolated vertex " + std::to_string(x));
  std::vector<std::pair<VertexId, Rational>> row;
  for (const auto& n : g.row(i)) row.emplace_back(g.id(n.to), Rational(n.mult, g.degree(i)));
  return row;
}

double DistributionVector::at(VertexId y) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), y,
                             [](const std::pair<VertexId, double>& e, VertexId key) { return e.first < key; });
  return (it != entries.end() && it->first == y) ? it->second : 0.0;
}

double DistributionVector::total() const {
  double s = 0;
  for (const auto& e : entries) s += e.second;
  return s;
}

std::vector<DistributionVector> evolve_exact(const SnapshotTimeline& timeline, VertexId x0, std::int64_t T,
                                             const Budget& budget) {
  check_horizon(timeline, T);
  if (T > budget.step_cap)
    throw BudgetError("step cap exceeded: evolution to t = " + std::to_string(T) + " exceeds " +
                          std::to_string(budget.step_cap) + " kernel steps",
                      budget.step_cap + 1);
  std::vector<DistributionVector> out;
  ExactEvolver<double> ev(timeline, 0, x0);
  for (std::int64_t t = 0;; ++t) {
    DistributionVector d{t, {}};
    const auto& g = ev.graph();
    const auto m = ev.mass();
    for (Index i = 0; i < g.size(); ++i)
      if (m[i] != 0.0) d.entries.emplace_back(g.id(i), m[i]);
    out.push_back(std::move(d));
    if (t == T) break;
    ev.step();
  }
  return out;
}

std::vector<WalkPath> simulate_paths(const SnapshotTimeline& timeline, VertexId x0, std::int64_t T,
                                     std::uint64_t replicates, std::uint64_t seed, const Budget& budget, int workers) {
  check_horizon(timeline, T);
  check_replicates(replicates, budget);
  const Index start = timeline.at(0).index(x0);
  std::vector<WalkPath> paths(replicates);
  parallel_chunks(replicates, workers, [&](int, std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t r = begin; r < end; ++r) {
      CounterRng rng(seed, r);
      auto& p = paths[r];
      p.seed = seed;
      p.replicate = r;
      p.start = x0;
      p.positions.reserve(static_cast<std::size_t>(T) + 1);
      walk_indices(timeline, start, 0, T, rng,
                   [&](std::int64_t t, Index i) { p.positions.push_back(timeline.at(t).id(i)); });
    }
  });
  return paths;
}

double MarginalCounts::prob(std::int64_t t, Index i) const {
  return static_cast<double>(counts[t][i]) / static_cast<double>(replicates);
}

double MarginalCounts::std_err(std::int64_t t, Index i) const {
  const double p = prob(t, i);
  return std::sqrt(p * (1.0 - p) / static_cast<double>(replicates));
}

MarginalCounts simulate_marginals(const SnapshotTimeline& timeline, VertexId x0, std::int64_t T,
                                  std::uint64_t replicates, std::uint64_t seed, const Budget& budget, int workers) {
  check_horizon(timeline, T);
  check_replicates(replicates, budget);
  const Index start = timeline.at(0).index(x0);
  workers = std::max(1, std::min<int>(workers, static_cast<int>(std::max<std::uint64_t>(replicates, 1))));
  auto blank = [&] {
    std::vector<std::vector<std::uint64_t>> c(static_cast<std::size_t>(T) + 1);
    for (std::int64_t t = 0; t <= T; ++t) c[t].assign(timeline.at(t).size(), 0);
    return c;
  };
  std::vector<std::vector<std::vector<std::uint64_t>>> partial(workers);
  parallel_chunks(replicates, workers, [&](int w, std::uint64_t begin, std::uint64_t end) {
    auto c = blank();
    for (std::uint64_t r = begin; r < end; ++r) {
      CounterRng rng(seed, r);
      walk_indices(timeline, start, 0, T, rng, [&](std::int64_t t, Index i) { ++c[t][i]; });
    }
    partial[w] = std::move(c);
  });
  MarginalCounts out;
  out.replicates = replicates;
  out.counts = blank();
  for (const auto& c : partial)
    for (std::size_t t = 0; t < c.size(); ++t)
      for (std::size_t i = 0; i < c[t].size(); ++i) out.counts[t][i] += c[t][i];
  return out;
}

std::vector<ReturnStats> return_stats_exact(const SnapshotTimeline& timeline, VertexId x0, std::int64_t k_max,
                                            const Budget& budget) {
  check_horizon(timeline, k_max);
  const std::int64_t steps = k_max * (k_max + 1) / 2 + k_max;
  if (steps > budget.step_cap)
    throw BudgetError("step cap exceeded: exact return statistics to k = " + std::to_string(k_max) + " need " +
                          std::to_string(steps) + " kernel steps",
                      k_max);
  std::vector<double> p(static_cast<std::size_t>(k_max) + 1);
  {
    ExactEvolver<double> ev(timeline, 0, x0);
    p[0] = ev.prob(x0);
    for (std::int64_t t = 1; t <= k_max; ++t) {
      ev.step();
      p[t] = ev.prob(x0);
    }
  }
  // cross[t] = sum_{s<t} p(s) P(s, x0; t, x0)
  std::vector<double> cross(static_cast<std::size_t>(k_max) + 1, 0.0);
  for (std::int64_t s = 0; s < k_max; ++s) {
    if (p[s] == 0.0) continue;
    ExactEvolver<double> ev(timeline, s, x0);
    for (std::int64_t t = s + 1; t <= k_max; ++t) {
      ev.step();
      cross[t] += p[s] * ev.prob(x0);
    }
  }
  std::vector<ReturnStats> rows;
  double mean = 0, pairs = 0;
  for (std::int64_t k = 0; k <= k_max; ++k) {
    mean += p[k];
    pairs += cross[k];
    ReturnStats r;
    r.k = k;
    r.mean = mean;
    r.mean_sq = mean + 2.0 * pairs;
    r.pz_ratio = mean * mean / r.mean_sq;
    r.exact = true;
    rows.push_back(r);
  }
  return rows;
}

std::vector<ReturnStats> return_stats_mc(const SnapshotTimeline& timeline, VertexId x0, std::span<const std::int64_t> ks,
                                         std::uint64_t replicates, std::uint64_t seed, const Budget& budget,
                                         int workers) {
  if (ks.empty()) return {};
  if (!std::is_sorted(ks.begin(), ks.end()) || ks.front() < 0) throw DomainError("return_stats_mc: k grid must be ascending and >= 0");
  const std::int64_t T = ks.back();
  check_horizon(timeline, T);
  check_replicates(replicates, budget);
  std::vector<Index> target(static_cast<std::size_t>(T) + 1);
  for (std::int64_t t = 0; t <= T; ++t) target[t] = timeline.at(t).index(x0);
  // report[t] = slot in ks + 1 when t is a grid point
  std::vector<std::uint32_t> report(static_cast<std::size_t>(T) + 1, 0);
  for (std::size_t j = 0; j < ks.size(); ++j) report[ks[j]] = static_cast<std::uint32_t>(j + 1);

  workers = std::max(1, std::min<int>(workers, static_cast<int>(std::max<std::uint64_t>(replicates, 1))));
  std::vector<std::vector<std::uint64_t>> sum(workers, std::vector<std::uint64_t>(ks.size())),
      sum_sq(workers, std::vector<std::uint64_t>(ks.size()));
  parallel_chunks(replicates, workers, [&](int w, std::uint64_t begin, std::uint64_t end) {
    auto& s1 = sum[w];
    auto& s2 = sum_sq[w];
    for (std::uint64_t r = begin; r < end; ++r) {
      CounterRng rng(seed, r);
      std::uint64_t visits = 0;
      walk_indices(timeline, target[0], 0, T, rng, [&](std::int64_t t, Index i) {
        visits += (i == target[t]);
        if (const auto slot = report[t]) {
          s1[slot - 1] += visits;
          s2[slot - 1] += visits * visits;
        }
      });
    }
  });
  std::vector<ReturnStats> rows;
  const double n = static_cast<double>(replicates);
  for (std::size_t j = 0; j < ks.size(); ++j) {
    std::uint64_t a = 0, b = 0;
    for (int w = 0; w < workers; ++w) {
      a += sum[w][j];
      b += sum_sq[w][j];
    }
    ReturnStats r;
    r.k = ks[j];
    r.mean = static_cast<double>(a) / n;
    r.mean_sq = static_cast<double>(b) / n;
    r.pz_ratio = r.mean * r.mean / r.mean_sq;
    r.mean_se = std::sqrt(std::max(0.0, r.mean_sq - r.mean * r.mean) / n);
    r.exact = false;
    rows.push_back(r);
  }
  return rows;
}

HittingTail hitting_time_tail(const GraphSnapshot& g, std::span<const VertexId> region, VertexId x,
                              std::span<const double> s_grid, std::uint64_t replicates, std::uint64_t seed, double eps,
                              int workers) {
  const auto marks = mark_region(g, region);
  const Index start = g.index(x);
  if (!marks.inside[start]) throw DomainError("hitting time: start vertex is not in the region");
  if (s_grid.empty() || !std::is_sorted(s_grid.begin(), s_grid.end()) || s_grid.front() < 0)
    throw DomainError("hitting time: s grid must be ascending and >= 0");

  HittingTail out;
  const double v = static_cast<double>(marks.volume);
  out.time_scale = v / std::pow(std::max(1.0, std::log(v)), 2.0 + eps);
  out.s_grid.assign(s_grid.begin(), s_grid.end());
  std::vector<std::int64_t> cut(s_grid.size());
  for (std::size_t k = 0; k < s_grid.size(); ++k) cut[k] = static_cast<std::int64_t>(std::floor(s_grid[k] * out.time_scale));
  const std::int64_t horizon = cut.back() + 1;

  workers = std::max(1, std::min<int>(workers, static_cast<int>(std::max<std::uint64_t>(replicates, 1))));
  std::vector<std::vector<std::uint64_t>> exceed(workers, std::vector<std::uint64_t>(s_grid.size()));
  std::vector<std::uint64_t> censored(workers);
  parallel_chunks(replicates, workers, [&](int w, std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t r = begin; r < end; ++r) {
      CounterRng rng(seed, r);
      Index pos = start;
      std::int64_t tau = 0;
      while (!marks.boundary[pos] && tau < horizon) {
        pos = sample_neighbor(g, pos, rng);
        ++tau;
      }
      if (!marks.boundary[pos]) ++censored[w];
      for (std::size_t k = 0; k < cut.size(); ++k)
        if (tau > cut[k]) ++exceed[w][k];
    }
  });
  const double n = static_cast<double>(replicates);
  out.censored = 0;
  for (auto c : censored) out.censored += c;
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < s_grid.size(); ++k) {
    std::uint64_t c = 0;
    for (int w = 0; w < workers; ++w) c += exceed[w][k];
    const double p = static_cast<double>(c) / n;
    out.tail.push_back(p);
    out.tail_se.push_back(std::sqrt(p * (1 - p) / n));
    if (p > 0) {
      xs.push_back(s_grid[k]);
      ys.push_back(std::log(p));
    }
  }
  out.monotone = std::is_sorted(out.tail.rbegin(), out.tail.rend());
  out.fitted_rate = -least_squares(xs, ys).slope;
  return out;
}

std::vector<std::pair<VertexId, double>> hitting_law_exact(const GraphSnapshot& g, std::span<const VertexId> region,
                                                           VertexId x, double tol, std::int64_t max_steps) {
  const auto marks = mark_region(g, region);
  const Index start = g.index(x);
  if (!marks.inside[start]) throw DomainError("hitting law: start vertex is not in the region");
  std::vector<double> law(g.size(), 0.0);
  std::vector<double> alive(g.size(), 0.0), next;
  if (marks.boundary[start]) {
    law[start] = 1.0;
  } else {
    alive[start] = 1.0;
    double surviving = 1.0;
    for (std::int64_t step = 0; surviving > tol; ++step) {
      if (step >= max_steps) throw BudgetError("hitting law: killed chain did not drain within the step cap", step);
      apply_kernel<double>(g, alive, next);
      surviving = 0.0;
      for (Index i = 0; i < g.size(); ++i) {
        if (next[i] == 0.0) continue;
        if (marks.boundary[i]) {
          law[i] += next[i];
          next[i] = 0.0;
        } else {
          surviving += next[i];
        }
      }
      alive.swap(next);
    }
  }
  std::vector<std::pair<VertexId, double>> out;
  for (Index i = 0; i < g.size(); ++i)
    if (marks.boundary[i]) out.emplace_back(g.id(i), law[i]);
  return out;
}

std::vector<std::pair<VertexId, double>> hitting_law_mc(const GraphSnapshot& g, std::span<const VertexId> region,
                                                        VertexId x, std::uint64_t replicates, std::uint64_t seed,
                                                        int workers) {
  const auto marks = mark_region(g, region);
  const Index start = g.index(x);
  if (!marks.inside[start]) throw DomainError("hitting law: start vertex is not in the region");
  workers = std::max(1, std::min<int>(workers, static_cast<int>(std::max<std::uint64_t>(replicates, 1))));
  std::vector<std::vector<std::uint64_t>> hits(workers, std::vector<std::uint64_t>(g.size()));
  parallel_chunks(replicates, workers, [&](int w, std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t r = begin; r < end; ++r) {
      CounterRng rng(seed, r);
      Index pos = start;
      while (!marks.boundary[pos]) pos = sample_neighbor(g, pos, rng);
      ++hits[w][pos];
    }
  });
  std::vector<std::pair<VertexId, double>> out;
  for (Index i = 0; i < g.size(); ++i) {
    if (!marks.boundary[i]) continue;
    std::uint64_t c = 0;
    for (int w = 0; w < workers; ++w) c += hits[w][i];
    out.emplace_back(g.id(i), static_cast<double>(c) / static_cast<double>(replicates));
  }
  return out;
}

double exit_law_ratio(const GraphSnapshot& g, std::span<const VertexId> region, std::span<const VertexId> starts,
                      double tol) {
  std::vector<std::vector<std::pair<VertexId, double>>> laws;
  for (auto x : starts) laws.push_back(hitting_law_exact(g, region, x, tol));
  double worst = 1.0;
  for (std::size_t a = 0; a < laws.size(); ++a)
    for (std::size_t b = 0; b < laws.size(); ++b) {
      if (a == b) continue;
      for (std::size_t z = 0; z < laws[a].size(); ++z) {
        const double pa = laws[a][z].second, pb = laws[b][z].second;
        if (pa == 0.0) continue;
        if (pb == 0.0) return std::numeric_limits<double>::infinity();
        worst = std::max(worst, pa / pb);
      }
    }
  return worst;
}

OnDiagonalReport on_diag_lower_check(const GraphSnapshot& g, std::int64_t T) {
  if (g.empty()) throw DomainError("on_diag_lower_check: empty snapshot");
  if (T < 0) throw DomainError("on_diag_lower_check: T must be >= 0");
  OnDiagonalReport rep{std::numeric_limits<double>::infinity(), g.id(0), 0, 0, 0};
  const double v = static_cast<double>(g.volume());
  std::vector<double> mass, next;
  for (Index x = 0; x < g.size(); ++x) {
    const double floor = static_cast<double>(g.degree(x)) / v;
    mass.assign(g.size(), 0.0);
    mass[x] = 1.0;
    for (std::int64_t t = 0; t <= T; ++t) {
      if (t > 0)
        for (int rep2 = 0; rep2 < 2; ++rep2) {
          apply_kernel<double>(g, mass, next);
          mass.swap(next);
        }
      const double margin = mass[x] - floor;
      ++rep.checks;
      if (margin < -1e-12) ++rep.violations;
      if (margin < rep.worst_margin) {
        rep.worst_margin = margin;
        rep.worst_x = g.id(x);
        rep.worst_t = t;
      }
    }
  }
  return rep;
}

}  // namespace growlab
