#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "growlab/rational.hpp"
#include "growlab/sequence.hpp"

namespace growlab {

/// Z^d with the graph (L1) metric. Coordinates are packed into vertex ids,
/// floor(63/d) bits per axis.
class LatticeGeometry {
 public:
  explicit LatticeGeometry(int dimension);

  int dimension() const { return d_; }
  std::int64_t max_radius() const { return (std::int64_t{1} << (bits_ - 1)) - 1; }

  VertexId encode(std::span<const int> coords) const;
  std::vector<int> decode(VertexId id) const;
  VertexId origin() const;
  std::int64_t norm(VertexId id) const;
  std::int64_t distance(VertexId a, VertexId b) const;

  /// Points with |x|_1 <= radius, ascending by id.
  std::vector<VertexId> ball(double radius) const;
  /// |B(0, r)| in Z^d.
  static std::uint64_t ball_size(int d, std::int64_t r);

 private:
  int d_;
  int bits_;
};

/// Integer self-loop count m with m/(2d+m) >= gamma, equality when
/// 2d*gamma/(1-gamma) is an integer.
std::int64_t loops_for_gamma(int d, double gamma);

/// Induced lattice ball B(0, radius) with `loops` self-loops per vertex.
GraphSnapshot lattice_ball_snapshot(const LatticeGeometry& geo, double radius, std::int64_t loops);

/// Smallest integer >= x, tolerant of pow() landing a few ulps above an integer.
std::int64_t robust_ceil(double x);

struct LatticeBallParams {
  int d = 2;
  double beta = 1.0;
  double a = 1.0;
  double gamma = 0.5;
  std::int64_t horizon = 100;
  std::optional<double> c_d;  ///< analytic profile coefficient, if certified
};

/// Growing induced balls B(0, r(t)) with r(t) = ceil(a t^(beta/d)), so that
/// v(t) grows like t^beta.
class LatticeBallFamily final : public GrowingGraphSequence {
 public:
  explicit LatticeBallFamily(LatticeBallParams p, const Budget& budget = {});

  SnapshotPtr snapshot_at(std::int64_t t) const override;
  std::int64_t horizon() const override { return p_.horizon; }
  std::optional<double> gamma() const override { return p_.gamma; }
  std::optional<std::int64_t> delta_cap() const override { return 2 * p_.d + loops_; }
  std::optional<AnalyticCertificate> certificate() const override;
  nlohmann::json descriptor() const override;
  std::optional<std::int64_t> distance(VertexId a, VertexId b) const override { return geo_.distance(a, b); }

  const LatticeBallParams& params() const { return p_; }
  const LatticeGeometry& geometry() const { return geo_; }
  VertexId origin() const { return geo_.origin(); }
  std::int64_t loops() const { return loops_; }
  std::int64_t radius(std::int64_t t) const;
  /// Smallest t with radius(t) >= m.
  std::int64_t first_time_with_radius(std::int64_t m) const;
  SnapshotPtr ball(std::int64_t r) const;
  /// Volume of B(0, r) measured with limit-graph degrees 2d + loops.
  std::int64_t limit_ball_volume(double r) const;

  void set_cd(double c) { p_.c_d = c; }

 private:
  LatticeBallParams p_;
  LatticeGeometry geo_;
  std::int64_t loops_;
  mutable std::mutex mu_;
  mutable std::map<std::int64_t, SnapshotPtr> cache_;
};

struct FrozenNestedParams {
  int d = 3;
  std::vector<double> inner;                 ///< r_l, radius of K_l
  std::vector<double> outer;                 ///< r'_l, radius of K^l
  std::vector<std::int64_t> stage_starts;    ///< t_l, starting at 0
  std::vector<double> graph_radius;          ///< radius of G_{t_l}; defaults to inner
  double delta = 1.0 / 3.0;
  double gamma = 0.5;
  std::int64_t horizon = 0;                  ///< defaults to one past the last stage start
};

struct StageInfo {
  int l;
  std::int64_t begin;
  std::int64_t end;
  double inner;
  double outer;
  double graph_radius;
  std::int64_t inner_volume;  ///< v(K_l) with limit-graph degrees
  std::int64_t volume;        ///< v(t_l)
};

/// Stage-wise frozen lattice balls K_l <= G_t = G_{t_l} <= K^l.
class FrozenNestedFamily final : public GrowingGraphSequence {
 public:
  explicit FrozenNestedFamily(FrozenNestedParams p, const Budget& budget = {});

  SnapshotPtr snapshot_at(std::int64_t t) const override;
  std::int64_t horizon() const override { return p_.horizon; }
  std::optional<double> gamma() const override { return p_.gamma; }
  std::optional<std::int64_t> delta_cap() const override { return 2 * p_.d + loops_; }
  std::vector<FrozenInterval> frozen_schedule() const override;
  nlohmann::json descriptor() const override;
  std::optional<std::int64_t> distance(VertexId a, VertexId b) const override { return geo_.distance(a, b); }

  const FrozenNestedParams& params() const { return p_; }
  const LatticeGeometry& geometry() const { return geo_; }
  VertexId origin() const { return geo_.origin(); }
  std::int64_t loops() const { return loops_; }
  const std::vector<StageInfo>& stages() const { return stages_; }
  int stage_of(std::int64_t t) const;
  /// log v(K_l) / l for l >= 1.
  std::vector<double> growth_rates() const;

 private:
  FrozenNestedParams p_;
  LatticeGeometry geo_;
  std::int64_t loops_;
  std::vector<SnapshotPtr> snaps_;
  std::vector<StageInfo> stages_;
};

struct ExpanderParams {
  double a = 1.0;
  double beta = 1.0;
  double gamma = 0.5;
  std::int64_t horizon = 100;
};

/// Nested complete graphs K_{n(t)}, n(t) = max(1, ceil(a t^(beta/2))), with
/// enough self-loops per vertex for gamma-laziness. Their Cheeger constant
/// never drops below (1 - gamma)/2.
class ExpanderFamily final : public GrowingGraphSequence {
 public:
  explicit ExpanderFamily(ExpanderParams p, const Budget& budget = {});

  SnapshotPtr snapshot_at(std::int64_t t) const override;
  std::int64_t horizon() const override { return p_.horizon; }
  std::optional<double> gamma() const override { return p_.gamma; }
  std::optional<AnalyticCertificate> certificate() const override { return ConstantCertificate{certified_floor()}; }
  nlohmann::json descriptor() const override;

  std::int64_t vertex_count(std::int64_t t) const;
  std::int64_t loops(std::int64_t n) const;
  double certified_floor() const { return (1.0 - p_.gamma) / 2.0; }
  /// Exact Cheeger constant of K_n with loops(n) loops per vertex.
  double cheeger(std::int64_t n) const;

 private:
  ExpanderParams p_;
  mutable std::mutex mu_;
  mutable std::map<std::int64_t, SnapshotPtr> cache_;
};

/// Birth-death conductances on {0..N} whose drift points to 0 on [0, N/2]
/// and to N on [N/2, N], alternating with the parity of x + t.
class MergingChainSchedule {
 public:
  MergingChainSchedule(int N, Rational theta, Rational eta);

  int N() const { return n_; }
  const Rational& theta() const { return theta_; }
  const Rational& eta() const { return eta_; }

  /// pi^(t)(x, y); zero unless |x - y| <= 1.
  Rational conductance(std::int64_t t, int x, int y) const;
  Rational degree(std::int64_t t, int x) const;
  Rational kernel(std::int64_t t, int x, int y) const;
  /// Reversible probability measure mu^(t)(x) proportional to pi^(t)(x).
  Rational measure(std::int64_t t, int x) const;

  /// Conductances scaled by a common integer so that they form a multigraph.
  const GraphSnapshot& snapshot(std::int64_t t) const { return scaled_[t & 1]; }
  std::int64_t scale() const { return scale_; }

  struct Tridiagonal {
    std::vector<double> left;   ///< K(x, x-1)
    std::vector<double> stay;   ///< K(x, x)
    std::vector<double> right;  ///< K(x, x+1)
  };
  const Tridiagonal& kernel_rows(std::int64_t t) const { return rows_[t & 1]; }

  /// Smallest eps meeting all envelope constraints over one period.
  Rational realized_epsilon() const;

 private:
  int n_;
  Rational theta_;
  Rational eta_;
  std::array<std::vector<Rational>, 2> edge_;  ///< edge_[p][x] = pi(x, x+1)
  std::array<std::vector<Rational>, 2> loop_;  ///< loop_[p][x] = pi(x, x)
  std::int64_t scale_ = 1;
  std::array<GraphSnapshot, 2> scaled_;
  std::array<Tridiagonal, 2> rows_;
};

/// Vertices 0 and 1 joined by one edge, one self-loop each.
GraphSnapshot two_vertex_graph();

/// Path 0 - 1 - ... - (n-1) with `loops` self-loops per vertex.
GraphSnapshot path_graph(int n, std::int64_t loops = 0);

/// P_4 for t in [0, 3], P_6 for t in [4, 7], P_8 from t = 8 on, one loop per
/// vertex, rooted at vertex 0.
std::shared_ptr<ExplicitSequence> growing_path_family(std::int64_t horizon);

}  // namespace growlab
