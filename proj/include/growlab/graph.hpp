#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "growlab/common.hpp"

namespace growlab {

/// One entry of a multiplicity listing. For unordered listings x <= y is not
/// required; (x, x) counts self-loops.
struct EdgeEntry {
  VertexId x;
  VertexId y;
  std::int64_t mult;
};

struct Neighbor {
  Index to;
  std::int64_t mult;
};

/// Immutable finite multigraph: symmetric integer multiplicities pi(x,y),
/// self-loops counted once in the degree, degrees and volume cached.
/// Vertices of degree zero are never stored. Internal indices follow
/// ascending vertex id.
class GraphSnapshot {
 public:
  GraphSnapshot() = default;

  /// Each entry contributes `mult` to the unordered pair {x, y}; repeated
  /// pairs accumulate. Negative multiplicities are a StructuralError.
  static GraphSnapshot from_edges(std::span<const EdgeEntry> edges);

  /// Ordered listing where (x,y) and (y,x) must both appear with the same
  /// multiplicity. Throws StructuralError naming the first asymmetric pair.
  static GraphSnapshot from_directed(std::span<const EdgeEntry> entries);

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }

  std::span<const VertexId> vertices() const { return ids_; }
  VertexId id(Index i) const { return ids_[i]; }
  std::optional<Index> find(VertexId v) const;
  /// Throws StructuralError when v is not a vertex.
  Index index(VertexId v) const;
  bool contains(VertexId v) const { return find(v).has_value(); }

  std::int64_t degree(Index i) const { return degree_[i]; }
  std::int64_t degree_of(VertexId v) const { return degree_[index(v)]; }
  std::int64_t volume() const { return volume_; }
  std::int64_t max_degree() const { return max_degree_; }
  std::int64_t self_loops(Index i) const;

  std::span<const Neighbor> row(Index i) const {
    return {neighbors_.data() + offsets_[i], neighbors_.data() + offsets_[i + 1]};
  }
  std::int64_t multiplicity(Index a, Index b) const;
  std::int64_t multiplicity_of(VertexId x, VertexId y) const;

  /// pi(A) for a set given by indices.
  std::int64_t weight(std::span<const Index> set) const;
  /// pi(A, A^c).
  std::int64_t cut(std::span<const Index> set) const;

  bool connected() const;

  /// Unordered listing with x <= y, sorted.
  std::vector<EdgeEntry> edges() const;

  /// Debug dump `{"t": t, "edges": [[x, y, mult], ...], "volume": v}`.
  nlohmann::json to_json(std::int64_t t) const;
  static GraphSnapshot from_json(const nlohmann::json& j);

  friend bool operator==(const GraphSnapshot& a, const GraphSnapshot& b);

 private:
  static GraphSnapshot build(std::vector<EdgeEntry> directed);

  std::vector<VertexId> ids_;
  std::vector<std::uint64_t> offsets_{0};
  std::vector<Neighbor> neighbors_;
  std::vector<std::int64_t> degree_;
  std::int64_t volume_ = 0;
  std::int64_t max_degree_ = 0;
};

using SnapshotPtr = std::shared_ptr<const GraphSnapshot>;

/// Inner boundary of H relative to `reference`: the x in H having a
/// reference edge to some vertex outside H. Throws DomainError when H is
/// empty or not contained in the reference vertex set.
std::vector<VertexId> relative_boundary(std::span<const VertexId> region, const GraphSnapshot& reference);

}  // namespace growlab
