#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "growlab/graph.hpp"
#include "growlab/sequence.hpp"

namespace growlab {

/// On [start, next start): phi(r) = coefficient * r^(-exponent).
/// An infinite coefficient marks "no admissible set".
struct ProfileSegment {
  double start;
  double coefficient;
  double exponent;
};

enum class ProfileSource { exact, analytic_lower_bound };

const char* to_string(ProfileSource s);

/// Right-continuous, non-increasing r -> phi(r) for r > 0, constant from
/// v/2 on, with Cheeger value phi(v/2).
class IsoperimetricProfile {
 public:
  IsoperimetricProfile(std::vector<ProfileSegment> segments, double volume, ProfileSource source);

  static IsoperimetricProfile constant(double value, double volume, ProfileSource source);
  /// c * min(r, v/2)^(-1/d).
  static IsoperimetricProfile power_law(double coefficient, int dimension, double volume);

  /// +infinity where no admissible set exists.
  double at(double r) const;
  bool admissible(double r) const;
  double cheeger() const { return at(volume_ / 2.0); }
  double volume() const { return volume_; }
  ProfileSource source() const { return source_; }
  std::span<const ProfileSegment> segments() const { return segments_; }

  /// (r, phi(r)) at each segment start.
  std::vector<std::pair<double, double>> breakpoints() const;
  /// Throws DomainError when some piece increases or a later piece sits above
  /// the end value of the previous one.
  void check_monotone() const;

  /// Exact profiles only: Cheeger value as cut/weight and a minimizing set
  /// (smallest index mask among ties), as vertex ids.
  std::optional<std::pair<std::int64_t, std::int64_t>> cheeger_ratio;
  std::vector<VertexId> cheeger_witness;

  /// Values as numbers, or the string "none" where no admissible set exists.
  nlohmann::json to_json() const;

 private:
  std::vector<ProfileSegment> segments_;
  double volume_;
  ProfileSource source_;
};

/// Exhaustive enumeration of all proper nonempty subsets in Gray-code order.
/// Throws DomainError above `cap` vertices.
IsoperimetricProfile exact_profile(const GraphSnapshot& g, int cap = 20, int workers = 1);

IsoperimetricProfile analytic_profile(const AnalyticCertificate& cert, double volume);
/// Throws DomainError when the family carries no certificate.
IsoperimetricProfile analytic_profile(const GrowingGraphSequence& seq, std::int64_t t);

/// Largest c with phi(r) >= c min(r, v/2)^(-1/d) for every r.
double dominating_coefficient(const IsoperimetricProfile& exact, int dimension);

struct LatticeCalibration {
  double c_d;
  std::vector<std::int64_t> radii;  ///< ball radii used
  std::int64_t binding_radius;      ///< radius whose profile set the value
};

/// Largest c_d such that exact profiles of the lattice balls B(0, r), r >= 1
/// with at most `max_states` vertices, all dominate the power-law formula.
/// Memoized per (d, loops, max_states).
LatticeCalibration calibrate_lattice_cd(int d, std::int64_t loops, int max_states = 25, int workers = 1);

/// Profiles per snapshot object: exact up to the enumeration cap, the
/// family's analytic certificate beyond. Thread-safe.
class ProfileCache {
 public:
  explicit ProfileCache(const GrowingGraphSequence& seq, int enumeration_cap = 20, int workers = 1)
      : seq_(seq), cap_(enumeration_cap), workers_(workers) {}

  std::shared_ptr<const IsoperimetricProfile> at(const SnapshotPtr& snap);

 private:
  const GrowingGraphSequence& seq_;
  int cap_;
  int workers_;
  std::mutex mu_;
  std::map<const GraphSnapshot*, std::pair<SnapshotPtr, std::shared_ptr<const IsoperimetricProfile>>> cache_;
};

}  // namespace growlab
