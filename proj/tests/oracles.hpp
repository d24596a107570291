#pragma once

// Independent reference computations for the unit tests. They use dense
// matrices and plain subset loops so they share no code with the library.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "growlab/graph.hpp"
#include "growlab/rational.hpp"
#include "growlab/sequence.hpp"

namespace oracle {

using growlab::GraphSnapshot;
using growlab::Rational;

/// Dense multiplicity matrix over the snapshot's index order.
inline std::vector<std::vector<std::int64_t>> dense(const GraphSnapshot& g) {
  const std::size_t n = g.size();
  std::vector<std::vector<std::int64_t>> m(n, std::vector<std::int64_t>(n, 0));
  for (const auto& e : g.edges()) {
    const auto a = g.index(e.x), b = g.index(e.y);
    m[a][b] = e.mult;
    m[b][a] = e.mult;
  }
  return m;
}

inline std::int64_t dense_degree(const std::vector<std::vector<std::int64_t>>& m, std::size_t i) {
  std::int64_t d = 0;
  for (auto v : m[i]) d += v;
  return d;
}

/// P(0, x0; t, .) as vertex -> probability, by dense rational products over a
/// sequence, re-indexing by vertex id between snapshots.
inline std::vector<std::vector<std::pair<growlab::VertexId, Rational>>> evolve(const growlab::GrowingGraphSequence& seq,
                                                                               growlab::VertexId x0, std::int64_t T) {
  std::vector<std::vector<std::pair<growlab::VertexId, Rational>>> out;
  std::vector<std::pair<growlab::VertexId, Rational>> cur = {{x0, Rational(1)}};
  out.push_back(cur);
  for (std::int64_t t = 0; t < T; ++t) {
    const auto g = seq.snapshot_at(t);
    const auto m = dense(*g);
    std::vector<Rational> next(g->size(), Rational(0));
    for (const auto& [v, p] : cur) {
      const auto i = g->index(v);
      const Rational deg(dense_degree(m, i));
      for (std::size_t j = 0; j < g->size(); ++j)
        if (m[i][j]) next[j] += p * Rational(m[i][j]) / deg;
    }
    cur.clear();
    for (std::size_t j = 0; j < g->size(); ++j)
      if (next[j] != 0) cur.push_back({g->id(static_cast<growlab::Index>(j)), next[j]});
    out.push_back(cur);
  }
  return out;
}

inline Rational prob_at(const std::vector<std::pair<growlab::VertexId, Rational>>& row, growlab::VertexId y) {
  for (const auto& [v, p] : row)
    if (v == y) return p;
  return Rational(0);
}

/// phi(r) by looping over every proper nonempty subset mask.
inline double profile_at(const GraphSnapshot& g, double r) {
  const auto m = dense(g);
  const std::size_t n = g.size();
  std::int64_t vol = 0;
  for (std::size_t i = 0; i < n; ++i) vol += dense_degree(m, i);
  const double cap = std::min(r, static_cast<double>(vol) / 2.0);
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t mask = 1; mask + 1 < (std::uint64_t{1} << n); ++mask) {
    std::int64_t w = 0, cut = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(mask >> i & 1)) continue;
      w += dense_degree(m, i);
      for (std::size_t j = 0; j < n; ++j)
        if (!(mask >> j & 1)) cut += m[i][j];
    }
    if (static_cast<double>(w) <= cap) best = std::min(best, static_cast<double>(cut) / static_cast<double>(w));
  }
  return best;
}

/// Connected multigraph on n vertices: a random spanning tree plus extra
/// edges and loops with small multiplicities.
inline GraphSnapshot random_connected(int n, std::mt19937_64& rng, bool loops = true) {
  std::vector<growlab::EdgeEntry> edges;
  std::uniform_int_distribution<int> mult(1, 3);
  for (int v = 1; v < n; ++v) {
    std::uniform_int_distribution<int> parent(0, v - 1);
    edges.push_back({parent(rng), v, mult(rng)});
  }
  std::bernoulli_distribution extra(0.3);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (extra(rng)) edges.push_back({a, b, mult(rng)});
  if (loops)
    for (int a = 0; a < n; ++a)
      if (extra(rng)) edges.push_back({a, a, mult(rng)});
  if (n == 1) edges.push_back({0, 0, 1});
  return GraphSnapshot::from_edges(edges);
}

}  // namespace oracle
