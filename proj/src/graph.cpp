#include "growlab/graph.hpp"

#include <algorithm>
#include <map>
#include <string>

namespace growlab {

namespace {

std::string pair_name(VertexId x, VertexId y) {
  return "(" + std::to_string(x) + ", " + std::to_string(y) + ")";
}

}  // namespace

GraphSnapshot GraphSnapshot::from_edges(std::span<const EdgeEntry> edges) {
  std::vector<EdgeEntry> directed;
  directed.reserve(edges.size() * 2);
  for (const auto& e : edges) {
    if (e.mult < 0) throw StructuralError("negative multiplicity on pair " + pair_name(e.x, e.y));
    if (e.mult == 0) continue;
    directed.push_back(e);
    if (e.x != e.y) directed.push_back({e.y, e.x, e.mult});
  }
  return build(std::move(directed));
}

GraphSnapshot GraphSnapshot::from_directed(std::span<const EdgeEntry> entries) {
  std::map<std::pair<VertexId, VertexId>, std::int64_t> m;
  for (const auto& e : entries) {
    if (e.mult < 0) throw StructuralError("negative multiplicity on pair " + pair_name(e.x, e.y));
    m[{e.x, e.y}] += e.mult;
  }
  std::vector<EdgeEntry> directed;
  directed.reserve(m.size());
  for (const auto& [key, mult] : m) {
    const auto [x, y] = key;
    if (x != y) {
      auto it = m.find({y, x});
      const std::int64_t back = it == m.end() ? 0 : it->second;
      if (back != mult)
        throw StructuralError("asymmetric multiplicities: pi" + pair_name(x, y) + " = " + std::to_string(mult) +
                              " but pi" + pair_name(y, x) + " = " + std::to_string(back));
    }
    if (mult > 0) directed.push_back({x, y, mult});
  }
  return build(std::move(directed));
}

GraphSnapshot GraphSnapshot::build(std::vector<EdgeEntry> directed) {
  std::sort(directed.begin(), directed.end(),
            [](const EdgeEntry& a, const EdgeEntry& b) { return a.x != b.x ? a.x < b.x : a.y < b.y; });

  GraphSnapshot g;
  g.ids_.reserve(directed.size() / 2 + 1);
  for (const auto& e : directed)
    if (g.ids_.empty() || g.ids_.back() != e.x) g.ids_.push_back(e.x);

  g.offsets_.assign(g.ids_.size() + 1, 0);
  g.degree_.assign(g.ids_.size(), 0);
  g.neighbors_.reserve(directed.size());
  std::size_t row = 0;
  for (std::size_t k = 0; k < directed.size(); ++k) {
    const auto& e = directed[k];
    while (g.ids_[row] != e.x) {
      ++row;
      g.offsets_[row] = g.neighbors_.size();
    }
    auto to = g.find(e.y);
    if (!to) throw StructuralError("edge " + pair_name(e.x, e.y) + " points outside the vertex set");
    if (!g.neighbors_.empty() && g.neighbors_.size() > g.offsets_[row] && g.neighbors_.back().to == *to) {
      g.neighbors_.back().mult += e.mult;
    } else {
      g.neighbors_.push_back({*to, e.mult});
    }
    g.degree_[row] += e.mult;
  }
  for (std::size_t r = row + 1; r <= g.ids_.size(); ++r) g.offsets_[r] = g.neighbors_.size();
  if (!g.ids_.empty()) g.offsets_[g.ids_.size()] = g.neighbors_.size();

  for (auto d : g.degree_) {
    g.volume_ += d;
    g.max_degree_ = std::max(g.max_degree_, d);
  }
  return g;
}

std::optional<Index> GraphSnapshot::find(VertexId v) const {
  auto it = std::lower_bound(ids_.begin(), ids_.end(), v);
  if (it == ids_.end() || *it != v) return std::nullopt;
  return static_cast<Index>(it - ids_.begin());
}

Index GraphSnapshot::index(VertexId v) const {
  auto i = find(v);
  if (!i) throw StructuralError("vertex " + std::to_string(v) + " is not in the snapshot");
  return *i;
}

std::int64_t GraphSnapshot::multiplicity(Index a, Index b) const {
  auto r = row(a);
  auto it = std::lower_bound(r.begin(), r.end(), b, [](const Neighbor& n, Index key) { return n.to < key; });
  return (it != r.end() && it->to == b) ? it->mult : 0;
}

std::int64_t GraphSnapshot::multiplicity_of(VertexId x, VertexId y) const {
  auto a = find(x);
  auto b = find(y);
  if (!a || !b) return 0;
  return multiplicity(*a, *b);
}

std::int64_t GraphSnapshot::self_loops(Index i) const { return multiplicity(i, i); }

std::int64_t GraphSnapshot::weight(std::span<const Index> set) const {
  std::int64_t w = 0;
  for (auto i : set) w += degree_[i];
  return w;
}

std::int64_t GraphSnapshot::cut(std::span<const Index> set) const {
  std::vector<char> in(size(), 0);
  for (auto i : set) in[i] = 1;
  std::int64_t c = 0;
  for (auto i : set)
    for (const auto& n : row(i))
      if (!in[n.to]) c += n.mult;
  return c;
}

bool GraphSnapshot::connected() const {
  if (ids_.empty()) return true;
  std::vector<char> seen(size(), 0);
  std::vector<Index> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const Index i = stack.back();
    stack.pop_back();
    for (const auto& n : row(i)) {
      if (!seen[n.to]) {
        seen[n.to] = 1;
        ++count;
        stack.push_back(n.to);
      }
    }
  }
  return count == size();
}

std::vector<EdgeEntry> GraphSnapshot::edges() const {
  std::vector<EdgeEntry> out;
  for (Index i = 0; i < size(); ++i)
    for (const auto& n : row(i))
      if (n.to >= i) out.push_back({ids_[i], ids_[n.to], n.mult});
  return out;
}

nlohmann::json GraphSnapshot::to_json(std::int64_t t) const {
  nlohmann::json edges_json = nlohmann::json::array();
  for (const auto& e : edges()) edges_json.push_back({e.x, e.y, e.mult});
  return {{"t", t}, {"edges", std::move(edges_json)}, {"volume", volume_}};
}

GraphSnapshot GraphSnapshot::from_json(const nlohmann::json& j) {
  std::vector<EdgeEntry> list;
  for (const auto& e : j.at("edges")) list.push_back({e.at(0).get<VertexId>(), e.at(1).get<VertexId>(), e.at(2).get<std::int64_t>()});
  auto g = from_edges(list);
  if (j.contains("volume") && j.at("volume").get<std::int64_t>() != g.volume())
    throw StructuralError("snapshot volume field disagrees with its edge list");
  return g;
}

bool operator==(const GraphSnapshot& a, const GraphSnapshot& b) {
  if (a.ids_ != b.ids_ || a.offsets_ != b.offsets_) return false;
  for (std::size_t k = 0; k < a.neighbors_.size(); ++k)
    if (a.neighbors_[k].to != b.neighbors_[k].to || a.neighbors_[k].mult != b.neighbors_[k].mult) return false;
  return true;
}

std::vector<VertexId> relative_boundary(std::span<const VertexId> region, const GraphSnapshot& reference) {
  if (region.empty()) throw DomainError("relative_boundary: region is empty");
  std::vector<char> in(reference.size(), 0);
  for (auto v : region) {
    auto i = reference.find(v);
    if (!i) throw DomainError("relative_boundary: vertex " + std::to_string(v) + " is not in the reference graph");
    in[*i] = 1;
  }
  std::vector<VertexId> out;
  for (Index i = 0; i < reference.size(); ++i) {
    if (!in[i]) continue;
    for (const auto& n : reference.row(i)) {
      if (!in[n.to]) {
        out.push_back(reference.id(i));
        break;
      }
    }
  }
  return out;
}

}  // namespace growlab
