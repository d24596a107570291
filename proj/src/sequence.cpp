#include "growlab/sequence.hpp"

#include <algorithm>
#include <limits>

namespace growlab {

ExplicitSequence::ExplicitSequence(std::vector<std::int64_t> stage_starts, std::vector<SnapshotPtr> stages,
                                   std::int64_t horizon, std::string name)
    : starts_(std::move(stage_starts)), stages_(std::move(stages)), horizon_(horizon), name_(std::move(name)) {
  if (starts_.empty() || starts_.size() != stages_.size()) throw DomainError("explicit sequence: need one start time per stage");
  if (starts_.front() != 0) throw DomainError("explicit sequence: first stage must start at t = 0");
  for (std::size_t k = 1; k < starts_.size(); ++k)
    if (starts_[k] <= starts_[k - 1]) throw DomainError("explicit sequence: stage start times must increase");
  for (const auto& s : stages_)
    if (!s || s->empty()) throw DomainError("explicit sequence: empty stage snapshot");
}

std::shared_ptr<ExplicitSequence> ExplicitSequence::frozen(GraphSnapshot g, std::int64_t horizon, std::string name) {
  return std::make_shared<ExplicitSequence>(std::vector<std::int64_t>{0},
                                            std::vector<SnapshotPtr>{std::make_shared<const GraphSnapshot>(std::move(g))},
                                            horizon, std::move(name));
}

SnapshotPtr ExplicitSequence::snapshot_at(std::int64_t t) const {
  if (t < 0) throw DomainError("snapshot_at: negative time");
  auto it = std::upper_bound(starts_.begin(), starts_.end(), t);
  return stages_[static_cast<std::size_t>(it - starts_.begin()) - 1];
}

std::vector<FrozenInterval> ExplicitSequence::frozen_schedule() const {
  std::vector<FrozenInterval> out;
  for (std::size_t k = 0; k < starts_.size(); ++k)
    out.push_back({starts_[k], k + 1 < starts_.size() ? starts_[k + 1] : horizon_ + 1});
  return out;
}

nlohmann::json ExplicitSequence::descriptor() const {
  return {{"family", name_}, {"stages", starts_}, {"horizon", horizon_}, {"limit", "last stage"}};
}

nlohmann::json MonotoneReport::to_json() const {
  nlohmann::json j{{"pass", pass},
                   {"laziness_floor", laziness_floor},
                   {"max_degree", max_degree},
                   {"laziness_ok", laziness_ok},
                   {"degree_ok", degree_ok}};
  if (violation)
    j["violation"] = {{"t", violation->t}, {"x", violation->x}, {"y", violation->y},
                      {"before", violation->before}, {"after", violation->after}};
  if (structural_error) j["structural_error"] = *structural_error;
  if (first_disconnected) j["first_disconnected"] = *first_disconnected;
  return j;
}

MonotoneReport validate_monotone(const GrowingGraphSequence& seq, std::int64_t horizon) {
  if (horizon < 1) throw DomainError("validate_monotone: horizon must be >= 1");
  MonotoneReport report;
  SnapshotPtr prev;
  for (std::int64_t t = 0; t <= horizon; ++t) {
    SnapshotPtr cur;
    try {
      cur = seq.snapshot_at(t);
    } catch (const StructuralError& e) {
      report.pass = false;
      report.structural_error = "t = " + std::to_string(t) + ": " + e.what();
      return report;
    }
    if (cur != prev) {
      if (prev && !report.violation) {
        for (Index i = 0; i < prev->size() && !report.violation; ++i) {
          const VertexId x = prev->id(i);
          for (const auto& n : prev->row(i)) {
            const VertexId y = prev->id(n.to);
            const std::int64_t after = cur->multiplicity_of(x, y);
            if (after < n.mult) {
              report.violation = MonotoneViolation{t, x, y, n.mult, after};
              break;
            }
          }
        }
      }
      for (Index i = 0; i < cur->size(); ++i) {
        const double ratio = static_cast<double>(cur->self_loops(i)) / static_cast<double>(cur->degree(i));
        report.laziness_floor = std::min(report.laziness_floor, ratio);
      }
      report.max_degree = std::max(report.max_degree, cur->max_degree());
      if (!report.first_disconnected && !cur->connected()) report.first_disconnected = t;
      prev = cur;
    }
  }
  if (auto g = seq.gamma()) report.laziness_ok = report.laziness_floor >= *g;
  if (auto d = seq.delta_cap()) report.degree_ok = report.max_degree <= *d;
  report.pass = !report.violation && report.laziness_ok && report.degree_ok;
  return report;
}

SnapshotTimeline::SnapshotTimeline(const GrowingGraphSequence& seq, std::int64_t last, const Budget& budget) {
  if (last < 0) throw DomainError("timeline: negative horizon");
  snaps_.reserve(static_cast<std::size_t>(last) + 1);
  remap_.resize(static_cast<std::size_t>(last) + 1);
  for (std::int64_t t = 0; t <= last; ++t) {
    auto s = seq.snapshot_at(t);
    if (s->size() > budget.state_cap)
      throw BudgetError("state cap exceeded: snapshot at t = " + std::to_string(t) + " has " + std::to_string(s->size()) +
                            " states (cap " + std::to_string(budget.state_cap) + ")",
                        t);
    snaps_.push_back(std::move(s));
  }
  for (std::int64_t t = 0; t < last; ++t) {
    const auto& a = *snaps_[t];
    const auto& b = *snaps_[t + 1];
    if (snaps_[t] == snaps_[t + 1]) continue;
    auto& table = remap_[t];
    table.resize(a.size());
    // Both id lists are sorted, so one merge pass suffices.
    std::size_t j = 0;
    for (Index i = 0; i < a.size(); ++i) {
      while (j < b.size() && b.id(static_cast<Index>(j)) < a.id(i)) ++j;
      if (j == b.size() || b.id(static_cast<Index>(j)) != a.id(i))
        throw StructuralError("vertex " + std::to_string(a.id(i)) + " present at t = " + std::to_string(t) +
                              " is missing at t = " + std::to_string(t + 1));
      table[i] = static_cast<Index>(j);
    }
    if (table.empty()) table.push_back(0);  // keep "changes" observable for empty graphs
  }
}

}  // namespace growlab
