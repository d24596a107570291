#include "growlab/isoperimetry.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "growlab/families.hpp"
#include "growlab/parallel.hpp"

namespace growlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double piece_value(const ProfileSegment& s, double r) {
  if (std::isinf(s.coefficient)) return kInf;
  return s.exponent == 0.0 ? s.coefficient : s.coefficient * std::pow(r, -s.exponent);
}

}  // namespace

const char* to_string(ProfileSource s) {
  return s == ProfileSource::exact ? "exact" : "analytic-lower-bound";
}

IsoperimetricProfile::IsoperimetricProfile(std::vector<ProfileSegment> segments, double volume, ProfileSource source)
    : segments_(std::move(segments)), volume_(volume), source_(source) {
  if (segments_.empty() || segments_.front().start != 0.0) throw DomainError("profile: first segment must start at r = 0");
  for (std::size_t k = 1; k < segments_.size(); ++k)
    if (!(segments_[k].start > segments_[k - 1].start)) throw DomainError("profile: segment starts must increase");
  if (!(volume_ >= 0.0)) throw DomainError("profile: negative volume");
}

IsoperimetricProfile IsoperimetricProfile::constant(double value, double volume, ProfileSource source) {
  if (value < 0.0) throw DomainError("profile: negative value");
  return IsoperimetricProfile({{0.0, value, 0.0}}, volume, source);
}

IsoperimetricProfile IsoperimetricProfile::power_law(double coefficient, int dimension, double volume) {
  if (!(coefficient > 0.0) || dimension < 1) throw DomainError("profile: power law needs c > 0 and d >= 1");
  const double half = volume / 2.0;
  const double p = 1.0 / dimension;
  if (!(half > 0.0)) return constant(coefficient, volume, ProfileSource::analytic_lower_bound);
  return IsoperimetricProfile({{0.0, coefficient, p}, {half, coefficient * std::pow(half, -p), 0.0}}, volume,
                              ProfileSource::analytic_lower_bound);
}

double IsoperimetricProfile::at(double r) const {
  if (!(r > 0.0)) throw DomainError("profile: r must be > 0");
  r = std::min(r, volume_ / 2.0);
  if (!(r > 0.0)) return kInf;
  auto it = std::upper_bound(segments_.begin(), segments_.end(), r,
                             [](double x, const ProfileSegment& s) { return x < s.start; });
  return piece_value(*(it - 1), r);
}

bool IsoperimetricProfile::admissible(double r) const { return std::isfinite(at(r)); }

std::vector<std::pair<double, double>> IsoperimetricProfile::breakpoints() const {
  std::vector<std::pair<double, double>> out;
  for (const auto& s : segments_) {
    if (s.start == 0.0 && s.exponent > 0.0) continue;  // value at 0 is unbounded
    out.emplace_back(s.start, s.start == 0.0 ? piece_value(s, 1.0) : piece_value(s, s.start));
  }
  return out;
}

void IsoperimetricProfile::check_monotone() const {
  for (std::size_t k = 0; k < segments_.size(); ++k) {
    const auto& s = segments_[k];
    if (s.exponent < 0.0 || s.coefficient < 0.0 || std::isnan(s.coefficient))
      throw DomainError("profile: segment " + std::to_string(k) + " increases or is negative");
    if (k == 0) continue;
    const auto& prev = segments_[k - 1];
    const double left = piece_value(prev, s.start);
    const double here = piece_value(s, s.start);
    if (here > left * (1.0 + 1e-12))
      throw DomainError("profile: jump up at r = " + std::to_string(s.start));
  }
}

nlohmann::json IsoperimetricProfile::to_json() const {
  nlohmann::json pts = nlohmann::json::array();
  for (auto [r, v] : breakpoints()) pts.push_back({{"r", r}, {"phi", std::isfinite(v) ? nlohmann::json(v) : nlohmann::json("none")}});
  const double c = cheeger();
  nlohmann::json j{{"source", to_string(source_)},
                   {"volume", volume_},
                   {"cheeger", std::isfinite(c) ? nlohmann::json(c) : nlohmann::json("none")},
                   {"breakpoints", std::move(pts)}};
  if (!cheeger_witness.empty()) j["cheeger_witness"] = cheeger_witness;
  return j;
}

IsoperimetricProfile exact_profile(const GraphSnapshot& g, int cap, int workers) {
  const int n = static_cast<int>(g.size());
  if (n > cap)
    throw DomainError("exact_profile: " + std::to_string(n) + " vertices exceed the enumeration cap " + std::to_string(cap) +
                      "; use an analytic profile");
  if (n > 40) throw DomainError("exact_profile: enumeration beyond 40 vertices is not supported");
  const std::int64_t v = g.volume();
  const std::int64_t half = v / 2;
  if (half > (std::int64_t{1} << 24)) throw BudgetError("exact_profile: volume too large for weight tables");

  std::vector<std::int64_t> deg(n), inner(n);
  for (int i = 0; i < n; ++i) {
    deg[i] = g.degree(static_cast<Index>(i));
    inner[i] = deg[i] - g.self_loops(static_cast<Index>(i));
  }

  struct Best {
    std::int64_t cut = -1;
    std::uint64_t mask = 0;
  };
  const std::uint64_t full = n == 0 ? 0 : (std::uint64_t{1} << n) - 1;
  const std::uint64_t count = full;  // Gray indices 1..full
  if (count < (1u << 14)) workers = 1;
  workers = std::max(1, workers);
  std::vector<std::vector<Best>> bests(workers, std::vector<Best>(static_cast<std::size_t>(half) + 1));

  auto pair_sum = [&](int i, std::uint64_t mask) {
    std::int64_t s = 0;
    for (const auto& nb : g.row(static_cast<Index>(i)))
      if (static_cast<int>(nb.to) != i && (mask >> nb.to & 1)) s += nb.mult;
    return s;
  };

  parallel_chunks(count, workers, [&](int w, std::uint64_t begin, std::uint64_t end) {
    auto& best = bests[w];
    std::uint64_t k = begin + 1;
    const std::uint64_t stop = end + 1;
    if (k >= stop) return;
    std::uint64_t mask = k ^ (k >> 1);
    std::int64_t weight = 0;
    std::int64_t cut = 0;
    for (int i = 0; i < n; ++i)
      if (mask >> i & 1) {
        weight += deg[i];
        cut += inner[i] - pair_sum(i, mask);
      }
    for (;;) {
      if (mask != full && 2 * weight <= v) {
        auto& b = best[static_cast<std::size_t>(weight)];
        if (b.cut < 0 || cut < b.cut || (cut == b.cut && mask < b.mask)) b = {cut, mask};
      }
      if (++k >= stop) break;
      const int bit = std::countr_zero(k);
      const std::int64_t s = pair_sum(bit, mask);
      if (mask >> bit & 1) {
        cut -= inner[bit] - 2 * s;
        weight -= deg[bit];
      } else {
        cut += inner[bit] - 2 * s;
        weight += deg[bit];
      }
      mask ^= std::uint64_t{1} << bit;
    }
  });

  std::vector<Best> merged(static_cast<std::size_t>(half) + 1);
  for (const auto& b : bests)
    for (std::size_t w = 0; w < b.size(); ++w) {
      if (b[w].cut < 0) continue;
      auto& m = merged[w];
      if (m.cut < 0 || b[w].cut < m.cut || (b[w].cut == m.cut && b[w].mask < m.mask)) m = b[w];
    }

  // Prefix minimum of cut/weight over weights, compared exactly.
  std::vector<ProfileSegment> segs{{0.0, kInf, 0.0}};
  std::int64_t best_cut = -1, best_w = 1;
  std::uint64_t best_mask = 0;
  auto less = [](std::int64_t c1, std::int64_t w1, std::int64_t c2, std::int64_t w2) {
    return static_cast<__int128>(c1) * w2 < static_cast<__int128>(c2) * w1;
  };
  for (std::int64_t w = 1; w <= half; ++w) {
    const auto& m = merged[static_cast<std::size_t>(w)];
    if (m.cut < 0) continue;
    if (best_cut < 0 || less(m.cut, w, best_cut, best_w)) {
      best_cut = m.cut;
      best_w = w;
      best_mask = m.mask;
      segs.push_back({static_cast<double>(w), static_cast<double>(m.cut) / static_cast<double>(w), 0.0});
    } else if (!less(best_cut, best_w, m.cut, w) && m.mask < best_mask) {
      best_mask = m.mask;  // equal ratio: keep the smaller mask as witness
    }
  }

  IsoperimetricProfile prof(std::move(segs), static_cast<double>(v), ProfileSource::exact);
  if (best_cut >= 0) {
    prof.cheeger_ratio = std::make_pair(best_cut, best_w);
    for (int i = 0; i < n; ++i)
      if (best_mask >> i & 1) prof.cheeger_witness.push_back(g.id(static_cast<Index>(i)));
  }
  return prof;
}

IsoperimetricProfile analytic_profile(const AnalyticCertificate& cert, double volume) {
  if (const auto* p = std::get_if<PowerLawCertificate>(&cert))
    return IsoperimetricProfile::power_law(p->coefficient, p->dimension, volume);
  return IsoperimetricProfile::constant(std::get<ConstantCertificate>(cert).floor, volume,
                                        ProfileSource::analytic_lower_bound);
}

IsoperimetricProfile analytic_profile(const GrowingGraphSequence& seq, std::int64_t t) {
  auto cert = seq.certificate();
  if (!cert) throw DomainError("analytic_profile: family carries no isoperimetric certificate");
  return analytic_profile(*cert, static_cast<double>(seq.volume_at(t)));
}

double dominating_coefficient(const IsoperimetricProfile& exact, int dimension) {
  const double half = exact.volume() / 2.0;
  const double p = 1.0 / dimension;
  double c = kInf;
  const auto segs = exact.segments();
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const auto& s = segs[k];
    if (std::isinf(s.coefficient) || s.start > half) continue;
    const double lo = std::max(s.start, std::numeric_limits<double>::min());
    const double hi = std::min(k + 1 < segs.size() ? segs[k + 1].start : half, half);
    // phi(r) r^p is monotone on a power-law piece, so the ends suffice.
    for (double r : {lo, hi}) {
      if (r > half || !(r > 0.0)) continue;
      c = std::min(c, piece_value(s, r) * std::pow(r, p));
    }
  }
  return c;
}

LatticeCalibration calibrate_lattice_cd(int d, std::int64_t loops, int max_states, int workers) {
  static std::mutex mu;
  static std::map<std::tuple<int, std::int64_t, int>, LatticeCalibration> memo;
  const auto key = std::make_tuple(d, loops, max_states);
  {
    std::lock_guard lock(mu);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
  }
  LatticeGeometry geo(d);
  LatticeCalibration out{kInf, {}, 0};
  for (std::int64_t r = 1; LatticeGeometry::ball_size(d, r) <= static_cast<std::uint64_t>(max_states); ++r) {
    const auto g = lattice_ball_snapshot(geo, static_cast<double>(r), loops);
    const double c = dominating_coefficient(exact_profile(g, max_states, workers), d);
    out.radii.push_back(r);
    if (c < out.c_d) {
      out.c_d = c;
      out.binding_radius = r;
    }
  }
  if (out.radii.empty()) throw DomainError("calibrate_lattice_cd: no lattice ball fits within max_states");
  std::lock_guard lock(mu);
  memo.emplace(key, out);
  return out;
}

std::shared_ptr<const IsoperimetricProfile> ProfileCache::at(const SnapshotPtr& snap) {
  std::lock_guard lock(mu_);
  if (auto it = cache_.find(snap.get()); it != cache_.end()) return it->second.second;
  std::shared_ptr<const IsoperimetricProfile> prof;
  if (static_cast<int>(snap->size()) <= cap_) {
    prof = std::make_shared<const IsoperimetricProfile>(exact_profile(*snap, cap_, workers_));
  } else {
    auto cert = seq_.certificate();
    if (!cert)
      throw DomainError("profile: snapshot with " + std::to_string(snap->size()) +
                        " vertices exceeds the enumeration cap and the family has no analytic certificate");
    prof = std::make_shared<const IsoperimetricProfile>(analytic_profile(*cert, static_cast<double>(snap->volume())));
  }
  cache_.emplace(snap.get(), std::make_pair(snap, prof));
  return prof;
}

}  // namespace growlab
