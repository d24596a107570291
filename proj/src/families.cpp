#include "growlab/families.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace growlab {

LatticeGeometry::LatticeGeometry(int dimension) : d_(dimension), bits_(dimension > 0 ? 63 / dimension : 0) {
  if (dimension < 1 || dimension > 6) throw DomainError("lattice dimension must be in [1, 6]");
}

VertexId LatticeGeometry::encode(std::span<const int> coords) const {
  if (static_cast<int>(coords.size()) != d_) throw DomainError("lattice coordinate has wrong dimension");
  const std::int64_t offset = std::int64_t{1} << (bits_ - 1);
  std::int64_t id = 0;
  for (int k = d_ - 1; k >= 0; --k) {
    if (std::abs(coords[k]) > max_radius()) throw DomainError("lattice coordinate out of encodable range");
    id = (id << bits_) | (coords[k] + offset);
  }
  return id;
}

std::vector<int> LatticeGeometry::decode(VertexId id) const {
  const std::int64_t offset = std::int64_t{1} << (bits_ - 1);
  const std::int64_t mask = (std::int64_t{1} << bits_) - 1;
  std::vector<int> c(d_);
  for (int k = 0; k < d_; ++k) {
    c[k] = static_cast<int>((id & mask) - offset);
    id >>= bits_;
  }
  return c;
}

VertexId LatticeGeometry::origin() const {
  std::vector<int> zero(d_, 0);
  return encode(zero);
}

std::int64_t LatticeGeometry::norm(VertexId id) const {
  std::int64_t s = 0;
  for (int c : decode(id)) s += std::abs(c);
  return s;
}

std::int64_t LatticeGeometry::distance(VertexId a, VertexId b) const {
  const auto ca = decode(a);
  const auto cb = decode(b);
  std::int64_t s = 0;
  for (int k = 0; k < d_; ++k) s += std::abs(ca[k] - cb[k]);
  return s;
}

std::vector<VertexId> LatticeGeometry::ball(double radius) const {
  const std::int64_t r = radius < 0 ? -1 : static_cast<std::int64_t>(std::floor(radius + 1e-9));
  std::vector<VertexId> out;
  if (r < 0) return out;
  if (r > max_radius()) throw DomainError("lattice radius exceeds encodable range");
  std::vector<int> c(d_, 0);
  // Depth-first over axes with the remaining L1 budget.
  auto rec = [&](auto&& self, int axis, std::int64_t budget) -> void {
    if (axis == d_) {
      out.push_back(encode(c));
      return;
    }
    for (std::int64_t v = -budget; v <= budget; ++v) {
      c[axis] = static_cast<int>(v);
      self(self, axis + 1, budget - std::abs(v));
    }
    c[axis] = 0;
  };
  rec(rec, 0, r);
  std::sort(out.begin(), out.end());
  return out;
}

std::uint64_t LatticeGeometry::ball_size(int d, std::int64_t r) {
  if (r < 0) return 0;
  // |B_d(r)| = sum_k 2^k C(d,k) C(r,k).
  std::uint64_t total = 0;
  std::uint64_t choose_d = 1;
  long double choose_r = 1;
  for (int k = 0; k <= d && k <= r; ++k) {
    if (k > 0) {
      choose_d = choose_d * (d - k + 1) / k;
      choose_r = choose_r * static_cast<long double>(r - k + 1) / k;
    }
    total += static_cast<std::uint64_t>(std::llround(static_cast<long double>(std::uint64_t{1} << k) * choose_d * choose_r));
  }
  return total;
}

std::int64_t loops_for_gamma(int d, double gamma) {
  if (!(gamma > 0.0) || gamma > 0.5) throw DomainError("gamma must lie in (0, 1/2]");
  return robust_ceil(2.0 * d * gamma / (1.0 - gamma));
}

std::int64_t robust_ceil(double x) {
  return static_cast<std::int64_t>(std::ceil(x - 1e-9 * std::max(1.0, std::abs(x))));
}

GraphSnapshot lattice_ball_snapshot(const LatticeGeometry& geo, double radius, std::int64_t loops) {
  const auto points = geo.ball(radius);
  const int d = geo.dimension();
  std::vector<EdgeEntry> edges;
  edges.reserve(points.size() * (d + 1));
  for (VertexId p : points) {
    edges.push_back({p, p, loops});
    auto c = geo.decode(p);
    for (int k = 0; k < d; ++k) {
      c[k] += 1;
      const VertexId q = geo.encode(c);
      c[k] -= 1;
      if (std::binary_search(points.begin(), points.end(), q)) edges.push_back({p, q, 1});
    }
  }
  // A radius-0 ball without loops would have no edges at all.
  if (loops == 0 && points.size() == 1) throw DomainError("lattice ball of a single vertex needs self-loops");
  return GraphSnapshot::from_edges(edges);
}

LatticeBallFamily::LatticeBallFamily(LatticeBallParams p, const Budget& budget)
    : p_(std::move(p)), geo_(p_.d), loops_(0) {
  if (p_.d < 2) throw DomainError("lattice_ball: d must be >= 2");
  if (!(p_.beta > 0.0)) throw DomainError("lattice_ball: beta must be > 0");
  if (!(p_.a > 0.0)) throw DomainError("lattice_ball: a must be > 0");
  if (p_.horizon < 0) throw DomainError("lattice_ball: horizon must be >= 0");
  loops_ = loops_for_gamma(p_.d, p_.gamma);
  const std::int64_t r_max = radius(p_.horizon);
  if (r_max > geo_.max_radius()) throw BudgetError("lattice_ball: radius " + std::to_string(r_max) + " at the horizon is not encodable", p_.horizon);
  const auto states = LatticeGeometry::ball_size(p_.d, r_max);
  if (states > budget.state_cap) {
    // Report the first t whose ball exceeds the cap.
    std::int64_t lo = 0, hi = p_.horizon;
    while (lo < hi) {
      const std::int64_t mid = lo + (hi - lo) / 2;
      if (LatticeGeometry::ball_size(p_.d, radius(mid)) > budget.state_cap) hi = mid;
      else lo = mid + 1;
    }
    throw BudgetError("lattice_ball: " + std::to_string(states) + " states at the horizon exceed the state cap " +
                          std::to_string(budget.state_cap) + " (first exceeded at t = " + std::to_string(lo) + ")",
                      lo);
  }
}

std::int64_t LatticeBallFamily::radius(std::int64_t t) const {
  if (t <= 0) return 0;
  return robust_ceil(p_.a * std::pow(static_cast<double>(t), p_.beta / p_.d));
}

std::int64_t LatticeBallFamily::first_time_with_radius(std::int64_t m) const {
  if (m <= 0) return 0;
  // radius() is non-decreasing; gallop then bisect.
  std::int64_t hi = 1;
  while (radius(hi) < m) {
    if (hi > (std::int64_t{1} << 60)) throw DomainError("radius " + std::to_string(m) + " is never reached");
    hi *= 2;
  }
  std::int64_t lo = hi / 2;
  while (lo < hi) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (radius(mid) >= m) hi = mid;
    else lo = mid + 1;
  }
  return lo;
}

SnapshotPtr LatticeBallFamily::ball(std::int64_t r) const {
  std::lock_guard lock(mu_);
  auto it = cache_.find(r);
  if (it != cache_.end()) return it->second;
  auto snap = std::make_shared<const GraphSnapshot>(lattice_ball_snapshot(geo_, static_cast<double>(r), loops_));
  cache_.emplace(r, snap);
  return snap;
}

SnapshotPtr LatticeBallFamily::snapshot_at(std::int64_t t) const {
  if (t < 0) throw DomainError("snapshot_at: negative time");
  return ball(radius(std::min(t, p_.horizon)));
}

std::optional<AnalyticCertificate> LatticeBallFamily::certificate() const {
  if (!p_.c_d) return std::nullopt;
  return PowerLawCertificate{*p_.c_d, p_.d};
}

std::int64_t LatticeBallFamily::limit_ball_volume(double r) const {
  const auto n = LatticeGeometry::ball_size(p_.d, static_cast<std::int64_t>(std::floor(r + 1e-9)));
  return static_cast<std::int64_t>(n) * (2 * p_.d + loops_);
}

nlohmann::json LatticeBallFamily::descriptor() const {
  nlohmann::json j{{"family", "lattice_ball"}, {"d", p_.d},         {"beta", p_.beta}, {"a", p_.a},
                   {"gamma", p_.gamma},        {"loops", loops_},   {"horizon", p_.horizon},
                   {"limit", "Z^" + std::to_string(p_.d) + " with " + std::to_string(loops_) + " loops per vertex"}};
  if (p_.c_d) j["c_d"] = *p_.c_d;
  return j;
}

FrozenNestedFamily::FrozenNestedFamily(FrozenNestedParams p, const Budget& budget)
    : p_(std::move(p)), geo_(p_.d), loops_(0) {
  const std::size_t L = p_.inner.size();
  if (L == 0) throw DomainError("frozen_nested: need at least one stage");
  if (p_.outer.size() != L || p_.stage_starts.size() != L)
    throw DomainError("frozen_nested: inner, outer and stage_starts must have equal length");
  if (p_.graph_radius.empty()) p_.graph_radius = p_.inner;
  if (p_.graph_radius.size() != L) throw DomainError("frozen_nested: graph_radius must match the stage count");
  if (!(p_.delta > 0.0)) throw DomainError("frozen_nested: delta must be > 0");
  if (p_.stage_starts.front() != 0) throw DomainError("frozen_nested: first stage must start at t = 0");
  if (p_.horizon <= 0) p_.horizon = p_.stage_starts.back() + 1;
  loops_ = loops_for_gamma(p_.d, p_.gamma);

  for (std::size_t l = 0; l < L; ++l) {
    const std::string at = " at stage " + std::to_string(l);
    if (l > 0 && p_.stage_starts[l] < p_.stage_starts[l - 1])
      throw DomainError("frozen_nested: stage starts must not decrease" + at);
    if (!(p_.inner[l] >= 0.0)) throw DomainError("frozen_nested: inner radius must be >= 0" + at);
    if (p_.outer[l] < p_.inner[l]) throw DomainError("frozen_nested: outer radius below inner radius" + at);
    if (p_.graph_radius[l] < p_.inner[l] || p_.graph_radius[l] > p_.outer[l])
      throw DomainError("frozen_nested: stage graph radius must lie between inner and outer radii" + at);
    if (l > 0) {
      if (std::floor(p_.outer[l - 1] + 1e-9) > std::floor(p_.inner[l] + 1e-9))
        throw DomainError("frozen_nested: nesting violation, outer ball of stage " + std::to_string(l - 1) +
                          " is not contained in the inner ball of stage " + std::to_string(l));
      if (p_.inner[l] < (1.0 + p_.delta) * p_.outer[l - 1] * (1.0 - 1e-12))
        throw DomainError("frozen_nested: separation r_l >= (1+delta) r'_(l-1) fails" + at);
      if (p_.graph_radius[l] < p_.graph_radius[l - 1]) throw DomainError("frozen_nested: stage graphs must grow" + at);
    }
    const auto states = LatticeGeometry::ball_size(p_.d, static_cast<std::int64_t>(std::floor(p_.graph_radius[l] + 1e-9)));
    if (states > budget.state_cap)
      throw BudgetError("frozen_nested: stage " + std::to_string(l) + " has " + std::to_string(states) +
                            " states, above the state cap " + std::to_string(budget.state_cap),
                        p_.stage_starts[l]);
  }

  const std::int64_t limit_degree = 2 * p_.d + loops_;
  for (std::size_t l = 0; l < L; ++l) {
    snaps_.push_back(std::make_shared<const GraphSnapshot>(lattice_ball_snapshot(geo_, p_.graph_radius[l], loops_)));
    StageInfo s;
    s.l = static_cast<int>(l);
    s.begin = p_.stage_starts[l];
    s.end = l + 1 < L ? p_.stage_starts[l + 1] : p_.horizon + 1;
    s.inner = p_.inner[l];
    s.outer = p_.outer[l];
    s.graph_radius = p_.graph_radius[l];
    s.inner_volume = static_cast<std::int64_t>(
                         LatticeGeometry::ball_size(p_.d, static_cast<std::int64_t>(std::floor(p_.inner[l] + 1e-9)))) *
                     limit_degree;
    s.volume = snaps_.back()->volume();
    stages_.push_back(s);
  }
}

int FrozenNestedFamily::stage_of(std::int64_t t) const {
  auto it = std::upper_bound(p_.stage_starts.begin(), p_.stage_starts.end(), t);
  return static_cast<int>(it - p_.stage_starts.begin()) - 1;
}

SnapshotPtr FrozenNestedFamily::snapshot_at(std::int64_t t) const {
  if (t < 0) throw DomainError("snapshot_at: negative time");
  return snaps_[stage_of(t)];
}

std::vector<FrozenInterval> FrozenNestedFamily::frozen_schedule() const {
  std::vector<FrozenInterval> out;
  for (const auto& s : stages_) out.push_back({s.begin, s.end});
  return out;
}

std::vector<double> FrozenNestedFamily::growth_rates() const {
  std::vector<double> out;
  for (std::size_t l = 1; l < stages_.size(); ++l)
    out.push_back(std::log(static_cast<double>(stages_[l].inner_volume)) / static_cast<double>(l));
  return out;
}

nlohmann::json FrozenNestedFamily::descriptor() const {
  return {{"family", "frozen_nested"}, {"d", p_.d},        {"inner", p_.inner},
          {"outer", p_.outer},         {"stage_starts", p_.stage_starts},
          {"graph_radius", p_.graph_radius},
          {"delta", p_.delta},         {"gamma", p_.gamma}, {"loops", loops_},
          {"horizon", p_.horizon},
          {"limit", "Z^" + std::to_string(p_.d) + " with " + std::to_string(loops_) + " loops per vertex"}};
}

ExpanderFamily::ExpanderFamily(ExpanderParams p, const Budget& budget) : p_(p) {
  if (!(p_.gamma > 0.0) || p_.gamma > 0.5) throw DomainError("expander: gamma must lie in (0, 1/2]");
  if (!(p_.beta > 0.0) || !(p_.a > 0.0)) throw DomainError("expander: a and beta must be > 0");
  if (p_.horizon < 0) throw DomainError("expander: horizon must be >= 0");
  const auto n = static_cast<std::uint64_t>(vertex_count(p_.horizon));
  if (n > budget.state_cap)
    throw BudgetError("expander: " + std::to_string(n) + " vertices at the horizon exceed the state cap", p_.horizon);
}

std::int64_t ExpanderFamily::vertex_count(std::int64_t t) const {
  if (t <= 0) return 1;
  return std::max<std::int64_t>(1, robust_ceil(p_.a * std::pow(static_cast<double>(t), p_.beta / 2.0)));
}

std::int64_t ExpanderFamily::loops(std::int64_t n) const {
  // Non-decreasing in n, so multiplicities never drop as the graph grows.
  return std::max<std::int64_t>(1, robust_ceil(p_.gamma * static_cast<double>(n - 1) / (1.0 - p_.gamma)));
}

double ExpanderFamily::cheeger(std::int64_t n) const {
  if (n <= 1) return 0.0;  // no proper subset, reported through the profile sentinel elsewhere
  const double deg = static_cast<double>(n - 1 + loops(n));
  const std::int64_t k = n / 2;  // largest admissible set size minimizes (n - k)/deg
  return static_cast<double>(n - k) / deg;
}

SnapshotPtr ExpanderFamily::snapshot_at(std::int64_t t) const {
  if (t < 0) throw DomainError("snapshot_at: negative time");
  const std::int64_t n = vertex_count(std::min(t, p_.horizon));
  std::lock_guard lock(mu_);
  auto it = cache_.find(n);
  if (it != cache_.end()) return it->second;
  std::vector<EdgeEntry> edges;
  const std::int64_t m = loops(n);
  for (std::int64_t x = 0; x < n; ++x) {
    edges.push_back({x, x, m});
    for (std::int64_t y = x + 1; y < n; ++y) edges.push_back({x, y, 1});
  }
  auto snap = std::make_shared<const GraphSnapshot>(GraphSnapshot::from_edges(edges));
  cache_.emplace(n, snap);
  return snap;
}

nlohmann::json ExpanderFamily::descriptor() const {
  return {{"family", "expander"},
          {"a", p_.a},
          {"beta", p_.beta},
          {"gamma", p_.gamma},
          {"loops", loops(vertex_count(p_.horizon))},
          {"horizon", p_.horizon},
          {"certified_floor", certified_floor()},
          {"limit", "complete graphs with self-loops"}};
}

MergingChainSchedule::MergingChainSchedule(int N, Rational theta, Rational eta)
    : n_(N), theta_(std::move(theta)), eta_(std::move(eta)) {
  if (N < 2 || N % 2 != 0) throw DomainError("merging: N must be even and >= 2");
  if (theta_ < 0 || theta_ >= 1) throw DomainError("merging: theta must lie in [0, 1)");
  if (eta_ < 0 || eta_ >= 1) throw DomainError("merging: eta must lie in [0, 1)");
  const int half = N / 2;
  for (int p = 0; p < 2; ++p) {
    auto& e = edge_[p];
    auto& l = loop_[p];
    e.assign(N, Rational(0));
    l.assign(N + 1, Rational(0));
    l[0] = 2;
    l[N] = 2;
    for (int x = 1; x <= half; ++x) {
      const bool even = (x + p) % 2 == 0;
      e[x - 1] = even ? Rational(1 + theta_) : Rational(1 - theta_);
      l[x] = even ? Rational(1 - eta_) : Rational(1);
    }
    for (int x = half; x <= N - 1; ++x) {
      const bool even = (x + p) % 2 == 0;
      e[x] = even ? Rational(1 + theta_) : Rational(1 - theta_);
      l[x] = even ? Rational(1 - eta_) : Rational(1);
    }
  }

  BigInt lcm = 1;
  for (int p = 0; p < 2; ++p) {
    for (const auto& q : edge_[p]) lcm = boost::multiprecision::lcm(lcm, boost::multiprecision::denominator(q));
    for (const auto& q : loop_[p]) lcm = boost::multiprecision::lcm(lcm, boost::multiprecision::denominator(q));
  }
  if (lcm > BigInt(1'000'000'000)) throw DomainError("merging: conductance denominators too large to scale to integers");
  scale_ = lcm.convert_to<std::int64_t>();

  for (int p = 0; p < 2; ++p) {
    std::vector<EdgeEntry> list;
    for (int x = 0; x < N; ++x)
      list.push_back({x, x + 1, to_int64(Rational(edge_[p][x] * scale_))});
    for (int x = 0; x <= N; ++x)
      list.push_back({x, x, to_int64(Rational(loop_[p][x] * scale_))});
    scaled_[p] = GraphSnapshot::from_edges(list);

    auto& rows = rows_[p];
    rows.left.assign(N + 1, 0.0);
    rows.stay.assign(N + 1, 0.0);
    rows.right.assign(N + 1, 0.0);
    for (int x = 0; x <= N; ++x) {
      if (x > 0) rows.left[x] = kernel(p, x, x - 1).convert_to<double>();
      rows.stay[x] = kernel(p, x, x).convert_to<double>();
      if (x < N) rows.right[x] = kernel(p, x, x + 1).convert_to<double>();
    }
  }
}

Rational MergingChainSchedule::conductance(std::int64_t t, int x, int y) const {
  if (x < 0 || y < 0 || x > n_ || y > n_) throw DomainError("merging: state out of range");
  const int p = static_cast<int>(t & 1);
  if (x == y) return loop_[p][x];
  if (std::abs(x - y) != 1) return Rational(0);
  return edge_[p][std::min(x, y)];
}

Rational MergingChainSchedule::degree(std::int64_t t, int x) const {
  Rational d = conductance(t, x, x);
  if (x > 0) d += conductance(t, x, x - 1);
  if (x < n_) d += conductance(t, x, x + 1);
  return d;
}

Rational MergingChainSchedule::kernel(std::int64_t t, int x, int y) const {
  return conductance(t, x, y) / degree(t, x);
}

Rational MergingChainSchedule::measure(std::int64_t t, int x) const {
  Rational total = 0;
  for (int z = 0; z <= n_; ++z) total += degree(t, z);
  return degree(t, x) / total;
}

Rational MergingChainSchedule::realized_epsilon() const {
  const Rational third(1, 3);
  const Rational two_thirds(2, 3);
  Rational eps = 0;
  auto widen = [&](const Rational& dev) {
    const Rational a = dev < 0 ? Rational(-dev) : dev;
    if (a > eps) eps = a;
  };
  for (int p = 0; p < 2; ++p) {
    for (int x = 0; x <= n_; ++x) {
      for (int y = std::max(0, x - 1); y <= std::min(n_, x + 1); ++y) {
        const bool endpoint_hold = x == y && (x == 0 || x == n_);
        widen(kernel(p, x, y) - (endpoint_hold ? two_thirds : third));
      }
      widen(Rational(n_ + 1) * measure(p, x) - 1);
    }
  }
  return eps;
}

GraphSnapshot two_vertex_graph() { return path_graph(2, 1); }

GraphSnapshot path_graph(int n, std::int64_t loops) {
  if (n < 1) throw DomainError("path_graph: needs n >= 1");
  if (n == 1 && loops == 0) throw DomainError("path_graph: a single vertex needs a loop");
  std::vector<EdgeEntry> edges;
  for (int x = 0; x + 1 < n; ++x) edges.push_back({x, x + 1, 1});
  if (loops > 0)
    for (int x = 0; x < n; ++x) edges.push_back({x, x, loops});
  return GraphSnapshot::from_edges(edges);
}

std::shared_ptr<ExplicitSequence> growing_path_family(std::int64_t horizon) {
  std::vector<SnapshotPtr> stages;
  for (int n : {4, 6, 8}) stages.push_back(std::make_shared<const GraphSnapshot>(path_graph(n, 1)));
  auto seq = std::make_shared<ExplicitSequence>(std::vector<std::int64_t>{0, 4, 8}, std::move(stages), horizon,
                                                "growing_path");
  seq->declare_gamma(1.0 / 3.0);
  seq->declare_delta(3);
  return seq;
}

}  // namespace growlab
