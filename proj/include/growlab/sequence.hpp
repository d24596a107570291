#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "growlab/graph.hpp"

namespace growlab {

/// phi_t(r) >= coefficient * min(r, v(t)/2)^(-1/dimension).
struct PowerLawCertificate {
  double coefficient;
  int dimension;
};

/// phi_t(r) >= floor for every r and t.
struct ConstantCertificate {
  double floor;
};

using AnalyticCertificate = std::variant<PowerLawCertificate, ConstantCertificate>;

/// A stage [begin, end) on which the snapshot does not change.
struct FrozenInterval {
  std::int64_t begin;
  std::int64_t end;
};

/// Generator contract t -> G_t for t in [0, horizon]. Implementations must
/// return edge-wise non-decreasing snapshots and be safe for concurrent
/// snapshot_at calls. Times past the horizon reuse the horizon snapshot.
class GrowingGraphSequence {
 public:
  virtual ~GrowingGraphSequence() = default;

  virtual SnapshotPtr snapshot_at(std::int64_t t) const = 0;
  virtual std::int64_t horizon() const = 0;

  /// Declared laziness floor: pi(x,x)/pi(x) >= gamma everywhere.
  virtual std::optional<double> gamma() const { return std::nullopt; }
  /// Declared uniform degree bound.
  virtual std::optional<std::int64_t> delta_cap() const { return std::nullopt; }
  virtual std::vector<FrozenInterval> frozen_schedule() const { return {}; }
  virtual std::optional<AnalyticCertificate> certificate() const { return std::nullopt; }
  /// Symbolic description, including a descriptor of the limit graph where
  /// one exists.
  virtual nlohmann::json descriptor() const = 0;

  /// Graph distance in the limit graph, when the family knows its geometry.
  virtual std::optional<std::int64_t> distance(VertexId, VertexId) const { return std::nullopt; }

  std::int64_t volume_at(std::int64_t t) const { return snapshot_at(t)->volume(); }
};

/// A sequence given by explicit snapshots: stage k holds from times[k]
/// (inclusive) until times[k+1]; the last stage holds through the horizon.
class ExplicitSequence final : public GrowingGraphSequence {
 public:
  ExplicitSequence(std::vector<std::int64_t> stage_starts, std::vector<SnapshotPtr> stages, std::int64_t horizon,
                   std::string name = "explicit");

  /// A single snapshot frozen for all t.
  static std::shared_ptr<ExplicitSequence> frozen(GraphSnapshot g, std::int64_t horizon, std::string name = "frozen");

  SnapshotPtr snapshot_at(std::int64_t t) const override;
  std::int64_t horizon() const override { return horizon_; }
  std::optional<double> gamma() const override { return gamma_; }
  std::optional<std::int64_t> delta_cap() const override { return delta_; }
  std::vector<FrozenInterval> frozen_schedule() const override;
  std::optional<AnalyticCertificate> certificate() const override { return certificate_; }
  nlohmann::json descriptor() const override;

  void declare_gamma(double g) { gamma_ = g; }
  void declare_delta(std::int64_t d) { delta_ = d; }
  void declare_certificate(AnalyticCertificate c) { certificate_ = c; }

 private:
  std::vector<std::int64_t> starts_;
  std::vector<SnapshotPtr> stages_;
  std::int64_t horizon_;
  std::string name_;
  std::optional<double> gamma_;
  std::optional<std::int64_t> delta_;
  std::optional<AnalyticCertificate> certificate_;
};

struct MonotoneViolation {
  std::int64_t t;  ///< first time with pi^(t)(x,y) < pi^(t-1)(x,y)
  VertexId x;
  VertexId y;
  std::int64_t before;
  std::int64_t after;
};

struct MonotoneReport {
  bool pass = true;
  std::optional<MonotoneViolation> violation;
  std::optional<std::string> structural_error;
  /// min over t, x of pi(x,x)/pi(x).
  double laziness_floor = 1.0;
  std::int64_t max_degree = 0;
  bool laziness_ok = true;   ///< realized floor >= declared gamma
  bool degree_ok = true;     ///< max degree <= declared cap
  std::optional<std::int64_t> first_disconnected;

  nlohmann::json to_json() const;
};

MonotoneReport validate_monotone(const GrowingGraphSequence& seq, std::int64_t horizon);

/// Snapshots for t = 0..T resolved once, with index remap tables between
/// consecutive distinct snapshots. Walkers and set processes use it to move
/// positions from G_t's indexing to G_{t+1}'s.
class SnapshotTimeline {
 public:
  SnapshotTimeline(const GrowingGraphSequence& seq, std::int64_t last, const Budget& budget = {});

  std::int64_t last() const { return static_cast<std::int64_t>(snaps_.size()) - 1; }
  const GraphSnapshot& at(std::int64_t t) const { return *snaps_[t]; }
  const SnapshotPtr& ptr(std::int64_t t) const { return snaps_[t]; }
  /// True when G_{t+1} is a different object than G_t.
  bool changes_after(std::int64_t t) const { return !remap_[t].empty(); }
  /// Index in G_{t+1} of index i in G_t (only valid when changes_after(t)).
  Index remap(std::int64_t t, Index i) const { return remap_[t][i]; }

 private:
  std::vector<SnapshotPtr> snaps_;
  std::vector<std::vector<Index>> remap_;
};

}  // namespace growlab
