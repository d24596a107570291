#include "growlab/evolving_sets.hpp"

#include <algorithm>
#include <cmath>

#include "growlab/parallel.hpp"
#include "growlab/rng.hpp"
#include "growlab/stats.hpp"

namespace growlab {

std::vector<VertexId> evolving_step(std::span<const VertexId> set, const GraphSnapshot& now,
                                    const GraphSnapshot& next, double u) {
  std::vector<std::int64_t> numer(now.size(), 0);
  std::vector<Index> touched;
  for (VertexId x : set) {
    auto i = now.find(x);
    if (!i) throw StructuralError("evolving_step: vertex " + std::to_string(x) + " is not in V_t");
    for (const auto& n : now.row(*i)) {
      if (numer[n.to] == 0) touched.push_back(n.to);
      numer[n.to] += n.mult;
    }
  }
  std::sort(touched.begin(), touched.end());
  std::vector<VertexId> out;
  for (Index y : touched) {
    const VertexId id = now.id(y);
    auto j = next.find(id);
    if (!j) throw StructuralError("evolving_step: vertex " + std::to_string(id) + " vanished from V_(t+1)");
    const std::int64_t denom = next.degree(*j);
    if (numer[y] > denom)
      throw StructuralError("evolving_step: ratio above one at vertex " + std::to_string(id) +
                            "; the sequence is not monotone");
    if (static_cast<double>(numer[y]) > u * static_cast<double>(denom)) out.push_back(id);
  }
  return out;
}

void evolving_step_indices(const SnapshotTimeline& tl, std::int64_t t, std::span<const Index> set, double u,
                           std::vector<std::int64_t>& numer, std::vector<Index>& touched, std::vector<Index>& out) {
  const auto& g = tl.at(t);
  const auto& h = tl.at(t + 1);
  const bool remap = tl.changes_after(t);
  touched.clear();
  for (Index x : set)
    for (const auto& n : g.row(x)) {
      if (numer[n.to] == 0) touched.push_back(n.to);
      numer[n.to] += n.mult;
    }
  std::sort(touched.begin(), touched.end());
  out.clear();
  for (Index y : touched) {
    const Index ny = remap ? tl.remap(t, y) : y;
    const std::int64_t denom = h.degree(ny);
    const std::int64_t num = numer[y];
    numer[y] = 0;
    if (num > denom)
      throw StructuralError("evolving set: ratio above one at vertex " + std::to_string(g.id(y)) + ", t = " +
                            std::to_string(t) + "; the sequence is not monotone");
    if (static_cast<double>(num) > u * static_cast<double>(denom)) out.push_back(ny);
  }
}

double PlainSetRun::membership_prob(std::int64_t t, Index i) const {
  return static_cast<double>(membership[t][i]) / static_cast<double>(replicates);
}

double PlainSetRun::membership_se(std::int64_t t, Index i) const {
  const double p = membership_prob(t, i);
  return std::sqrt(p * (1 - p) / static_cast<double>(replicates));
}

namespace {

void check_run(const SnapshotTimeline& tl, std::int64_t T, std::uint64_t replicates, const Budget& budget) {
  if (T < 0 || T > tl.last()) throw DomainError("evolving sets: horizon outside the resolved timeline");
  if (replicates == 0) throw DomainError("evolving sets: need at least one replicate");
  if (replicates > budget.replicate_cap)
    throw BudgetError("replicate cap exceeded: " + std::to_string(replicates) + " > " +
                      std::to_string(budget.replicate_cap));
}

std::size_t max_size(const SnapshotTimeline& tl, std::int64_t T) {
  std::size_t m = 0;
  for (std::int64_t t = 0; t <= T; ++t) m = std::max(m, tl.at(t).size());
  return m;
}

}  // namespace

PlainSetRun run_plain(const SnapshotTimeline& tl, VertexId x0, std::int64_t T, std::uint64_t replicates,
                      std::uint64_t seed, const Budget& budget, int workers) {
  check_run(tl, T, replicates, budget);
  const Index start = tl.at(0).index(x0);
  const std::size_t cap = max_size(tl, T);
  workers = std::max(1, std::min<int>(workers, static_cast<int>(replicates)));

  struct Acc {
    std::vector<std::vector<std::uint64_t>> membership;
    std::vector<std::uint64_t> sum;
    std::vector<unsigned __int128> sum_sq;
    std::vector<std::uint64_t> extinct;
  };
  auto blank = [&] {
    Acc a;
    a.membership.resize(T + 1);
    for (std::int64_t t = 0; t <= T; ++t) a.membership[t].assign(tl.at(t).size(), 0);
    a.sum.assign(T + 1, 0);
    a.sum_sq.assign(T + 1, 0);
    a.extinct.assign(T + 1, 0);
    return a;
  };
  std::vector<Acc> parts(workers);
  parallel_chunks(replicates, workers, [&](int w, std::uint64_t begin, std::uint64_t end) {
    Acc a = blank();
    std::vector<std::int64_t> numer(cap, 0);
    std::vector<Index> touched, cur, nxt;
    for (std::uint64_t r = begin; r < end; ++r) {
      CounterRng rng(seed, r);
      cur.assign(1, start);
      for (std::int64_t t = 0; t <= T; ++t) {
        const auto& g = tl.at(t);
        std::uint64_t weight = 0;
        for (Index i : cur) {
          ++a.membership[t][i];
          weight += static_cast<std::uint64_t>(g.degree(i));
        }
        a.sum[t] += weight;
        a.sum_sq[t] += static_cast<unsigned __int128>(weight) * weight;
        if (cur.empty()) ++a.extinct[t];
        if (t == T) break;
        const double u = rng.uniform();
        if (cur.empty()) continue;
        evolving_step_indices(tl, t, cur, u, numer, touched, nxt);
        cur.swap(nxt);
      }
    }
    parts[w] = std::move(a);
  });

  PlainSetRun out;
  out.replicates = replicates;
  out.x0_degree = tl.at(0).degree(start);
  Acc total = blank();
  for (const auto& a : parts)
    for (std::int64_t t = 0; t <= T; ++t) {
      for (std::size_t i = 0; i < a.membership[t].size(); ++i) total.membership[t][i] += a.membership[t][i];
      total.sum[t] += a.sum[t];
      total.sum_sq[t] += a.sum_sq[t];
      total.extinct[t] += a.extinct[t];
    }
  const double n = static_cast<double>(replicates);
  for (std::int64_t t = 0; t <= T; ++t) {
    const double m = static_cast<double>(total.sum[t]) / n;
    const double m2 = static_cast<double>(total.sum_sq[t]) / n;
    out.mean_weight.push_back(m);
    out.weight_se.push_back(std::sqrt(std::max(0.0, m2 - m * m) / n));
    out.extinct_fraction.push_back(static_cast<double>(total.extinct[t]) / n);
  }
  out.membership = std::move(total.membership);
  return out;
}

SizeBiasedRun run_size_biased(const SnapshotTimeline& tl, VertexId x0, std::int64_t T, std::uint64_t replicates,
                              std::uint64_t seed, const SizeBiasedOptions& opts, const Budget& budget, int workers) {
  check_run(tl, T, replicates, budget);
  if (!(opts.alpha > 0.0 && opts.alpha < 1.0)) throw DomainError("size-biased run: alpha must lie in (0, 1)");
  const std::int64_t s = opts.anchor.value_or(T / 2);
  if (s < 0 || s > T) throw DomainError("size-biased run: anchor outside [0, T]");
  const Index start = tl.at(0).index(x0);
  const double x0_deg = static_cast<double>(tl.at(0).degree(start));
  const double threshold = static_cast<double>(tl.at(s).volume()) / 2.0;
  const double alpha = opts.alpha;
  const double c_plus = 2.0 * alpha * (1.0 - alpha) * opts.gamma * opts.gamma / ((1.0 - opts.gamma) * (1.0 - opts.gamma));
  const bool contraction = static_cast<bool>(opts.profile);
  const std::size_t cap = max_size(tl, T);
  const std::size_t span_u = static_cast<std::size_t>(T - s + 1);
  workers = std::max(1, std::min<int>(workers, static_cast<int>(replicates)));

  struct Acc {
    std::vector<MomentSum> lr;
    std::vector<std::vector<MomentSum>> walk;
    std::vector<MomentSum> L;
    std::vector<FixedSum> rhs;
    std::vector<MomentSum> diff;
  };
  auto blank = [&] {
    Acc a;
    a.lr.resize(T + 1);
    a.walk.resize(T + 1);
    for (std::int64_t t = 0; t <= T; ++t) a.walk[t].resize(tl.at(t).size());
    a.L.resize(span_u);
    a.rhs.resize(span_u);
    a.diff.resize(span_u);
    return a;
  };
  std::vector<Acc> parts(workers);
  parallel_chunks(replicates, workers, [&](int w, std::uint64_t begin, std::uint64_t end) {
    Acc a = blank();
    std::vector<std::int64_t> numer(cap, 0);
    std::vector<Index> touched, cur, nxt;
    for (std::uint64_t r = begin; r < end; ++r) {
      CounterRng rng(seed, r);
      cur.assign(1, start);
      bool in_event = true;  // A_u
      double prev_rhs_term = 0.0;
      for (std::int64_t t = 0; t <= T; ++t) {
        const auto& g = tl.at(t);
        double weight = 0;
        for (Index i : cur) weight += static_cast<double>(g.degree(i));
        const double lr = weight / x0_deg;
        a.lr[t].add(lr);
        for (Index i : cur) a.walk[t][i].add(static_cast<double>(g.degree(i)) / x0_deg);
        if (weight > threshold) in_event = false;
        // Weighted Z_u equals pi(S_u)^alpha / pi_0(x0) on A_u and zero otherwise.
        const double zw = (in_event && weight > 0) ? std::pow(weight, alpha) / x0_deg : 0.0;
        if (t >= s) {
          const std::size_t k = static_cast<std::size_t>(t - s);
          a.L[k].add(zw);
          if (contraction) {
            if (t > s) a.diff[k - 1].add(zw - prev_rhs_term);
            if (t < T) {
              double factor = 0.0;
              if (zw > 0) {
                const double phi = opts.profile(t, weight);
                factor = std::isfinite(phi) ? std::max(0.0, 1.0 - c_plus * phi * phi) : 0.0;
              }
              prev_rhs_term = zw * factor;
              a.rhs[k].add(prev_rhs_term);
            }
          }
        }
        if (t == T) break;
        const double u = rng.uniform();
        if (cur.empty()) continue;
        evolving_step_indices(tl, t, cur, u, numer, touched, nxt);
        cur.swap(nxt);
      }
    }
    parts[w] = std::move(a);
  });

  Acc total = blank();
  for (const auto& a : parts) {
    for (std::int64_t t = 0; t <= T; ++t) {
      total.lr[t].merge(a.lr[t]);
      for (std::size_t i = 0; i < a.walk[t].size(); ++i) total.walk[t][i].merge(a.walk[t][i]);
    }
    for (std::size_t k = 0; k < span_u; ++k) {
      total.L[k].merge(a.L[k]);
      total.rhs[k].merge(a.rhs[k]);
      total.diff[k].merge(a.diff[k]);
    }
  }

  SizeBiasedRun out;
  out.replicates = replicates;
  out.anchor = s;
  out.alpha = alpha;
  out.x0_bound = std::pow(x0_deg, alpha - 1.0);
  const std::uint64_t n = replicates;
  out.walk_estimate.resize(T + 1);
  out.walk_se.resize(T + 1);
  for (std::int64_t t = 0; t <= T; ++t) {
    out.mean_lr.push_back(total.lr[t].mean(n));
    out.lr_se.push_back(total.lr[t].std_err(n));
    for (const auto& m : total.walk[t]) {
      out.walk_estimate[t].push_back(m.mean(n));
      out.walk_se[t].push_back(m.std_err(n));
    }
  }
  for (std::size_t k = 0; k < span_u; ++k) {
    out.L.push_back(total.L[k].mean(n));
    out.L_se.push_back(total.L[k].std_err(n));
  }
  if (contraction)
    for (std::size_t k = 0; k + 1 < span_u; ++k) {
      out.contraction_lhs.push_back(out.L[k + 1]);
      out.contraction_rhs.push_back(total.rhs[k].value() / static_cast<double>(n));
      out.contraction_se.push_back(total.diff[k].std_err(n));
    }
  return out;
}

}  // namespace growlab
