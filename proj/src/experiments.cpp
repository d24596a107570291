#include "growlab/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "growlab/acceptance.hpp"
#include "growlab/bounds.hpp"
#include "growlab/evolving_sets.hpp"
#include "growlab/families.hpp"
#include "growlab/isoperimetry.hpp"
#include "growlab/merging.hpp"
#include "growlab/parallel.hpp"
#include "growlab/walk.hpp"

namespace growlab {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Schema

enum class Kind { Int, Num, Bool, Str, Rational, IntList, NumList, OptNum, OptInt, Vertex, CdSpec, Stages, Budget };

struct Field {
  std::string key;
  Kind kind;
  json def;
};
using Schema = std::vector<Field>;

const std::vector<std::string> kExperiments = {"validate",     "evolve", "simulate",    "evoset",
                                               "isoperimetry", "bounds", "merging",     "lower-bound",
                                               "frozen-recurrence",      "acceptance"};
const std::vector<std::string> kFamilies = {"lattice_ball", "frozen_nested", "expander", "two_vertex",
                                            "growing_path", "path",          "explicit"};

bool uses_family(const std::string& exp) { return exp != "merging" && exp != "acceptance"; }

Schema common_schema(const std::string& exp) {
  return {{"experiment", Kind::Str, exp},
          {"name", Kind::Str, exp},
          {"seed", Kind::Int, exp == "acceptance" ? 20240611 : 1},
          {"out", Kind::Str, "results"},
          {"workers", Kind::Int, 1},
          {"budget", Kind::Budget, json::object()}};
}

Schema budget_schema() {
  const Budget b;
  return {{"state_cap", Kind::Int, b.state_cap},
          {"step_cap", Kind::Int, b.step_cap},
          {"replicate_cap", Kind::Int, b.replicate_cap},
          {"enumeration_cap", Kind::Int, b.enumeration_cap}};
}

Schema experiment_schema(const std::string& exp) {
  if (exp == "validate") return {{"horizon", Kind::OptInt, nullptr}};
  if (exp == "evolve")
    return {{"x0", Kind::Vertex, nullptr},
            {"T", Kind::OptInt, nullptr},
            {"exact_arithmetic", Kind::Bool, false},
            {"return_k_max", Kind::Int, 0}};
  if (exp == "simulate")
    return {{"x0", Kind::Vertex, nullptr},
            {"T", Kind::OptInt, nullptr},
            {"replicates", Kind::Int, 10000},
            {"compare_exact", Kind::Bool, true},
            {"return_ks", Kind::IntList, json::array()}};
  if (exp == "evoset")
    return {{"x0", Kind::Vertex, nullptr},     {"T", Kind::OptInt, nullptr}, {"replicates", Kind::Int, 10000},
            {"mode", Kind::Str, "plain"},      {"alpha", Kind::Num, 0.5},    {"anchor", Kind::OptInt, nullptr},
            {"compare_exact", Kind::Bool, true}};
  if (exp == "isoperimetry") return {{"T", Kind::OptInt, nullptr}};
  if (exp == "bounds")
    return {{"x0", Kind::Vertex, nullptr}, {"y", Kind::Vertex, nullptr},    {"T", Kind::OptInt, nullptr},
            {"alpha", Kind::Num, 0.5},     {"gamma", Kind::OptNum, nullptr}, {"delta", Kind::OptInt, nullptr},
            {"exact", Kind::Bool, true},   {"tol", Kind::Num, 0.05}};
  if (exp == "merging")
    return {{"N", Kind::Int, 32},
            {"theta", Kind::Rational, "1/20"},
            {"eta", Kind::Rational, "1/20"},
            {"t_max", Kind::Int, 1000},
            {"delta", Kind::Num, 0.5},
            {"stride", Kind::Int, 0},
            {"exact_arithmetic", Kind::Bool, false},
            {"checkpoints", Kind::IntList, json::array()},
            {"excursion_n", Kind::IntList, json::array()},
            {"excursion_replicates", Kind::Int, 100000}};
  if (exp == "lower-bound")
    return {{"psi_exponent", Kind::Num, 2.0}, {"delta0", Kind::Num, 0.5}, {"t_grid", Kind::IntList, json::array()}};
  if (exp == "frozen-recurrence")
    return {{"T", Kind::OptInt, nullptr}, {"replicates", Kind::Int, 10000}, {"exit_ratio_max_stage", Kind::Int, 3}};
  if (exp == "acceptance") return {{"only", Kind::IntList, json::array()}};
  throw DomainError("unknown experiment " + exp);
}

Schema family_schema(const std::string& type) {
  if (type == "lattice_ball")
    return {{"d", Kind::Int, 2},          {"beta", Kind::Num, 1.0},        {"a", Kind::Num, 1.0},
            {"gamma", Kind::Num, 0.5},    {"horizon", Kind::Int, 100},     {"c_d", Kind::CdSpec, "calibrate"},
            {"calibration_states", Kind::Int, 25}};
  if (type == "frozen_nested")
    return {{"d", Kind::Int, 3},
            {"inner", Kind::NumList, json::array({1.0, 3.0, 8.0})},
            {"outer", Kind::NumList, json::array({2.0, 6.0, 12.0})},
            {"stage_starts", Kind::IntList, json::array({0, 50, 500})},
            {"graph_radius", Kind::NumList, json::array()},
            {"delta", Kind::Num, 1.0 / 3.0},
            {"gamma", Kind::Num, 0.5},
            {"horizon", Kind::Int, 2000}};
  if (type == "expander")
    return {{"a", Kind::Num, 1.0}, {"beta", Kind::Num, 1.0}, {"gamma", Kind::Num, 0.5}, {"horizon", Kind::Int, 100}};
  if (type == "two_vertex") return {{"horizon", Kind::Int, 50}};
  if (type == "growing_path") return {{"horizon", Kind::Int, 20}};
  if (type == "path") return {{"n", Kind::Int, 4}, {"loops", Kind::Int, 1}, {"horizon", Kind::Int, 20}};
  if (type == "explicit")
    return {{"stages", Kind::Stages, json::array()},
            {"gamma", Kind::OptNum, nullptr},
            {"delta", Kind::OptInt, nullptr},
            {"horizon", Kind::Int, 20}};
  throw DomainError("unknown family " + type);
}

/// Experiment-specific family defaults layered over the family schema.
json family_defaults(const std::string& exp) {
  if (exp == "lower-bound") return {{"family", "lattice_ball"}, {"beta", 2.0 / 3.0}, {"horizon", 2000}};
  if (exp == "frozen-recurrence") return {{"family", "frozen_nested"}};
  return {{"family", "lattice_ball"}};
}

[[noreturn]] void field_error(const std::string& path, const std::string& what) {
  throw DomainError(path + ": " + what);
}

std::string one_of(const std::vector<std::string>& names) {
  std::string s;
  for (const auto& n : names) s += (s.empty() ? "" : ", ") + n;
  return "one of " + s;
}

void expect_int_array(const json& v, const std::string& path) {
  if (!v.is_array()) field_error(path, "expected an array of integers");
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!v[i].is_number_integer()) field_error(path + "[" + std::to_string(i) + "]", "expected an integer");
}

json normalize_stages(const json& v, const std::string& path) {
  if (!v.is_array()) field_error(path, "expected an array of stages");
  json out = json::array();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string sp = path + "[" + std::to_string(i) + "]";
    const json& st = v[i];
    if (!st.is_object()) field_error(sp, "expected an object with start and edges");
    for (const auto& [k, _] : st.items())
      if (k != "start" && k != "edges") field_error(sp + "." + k, "unknown key");
    if (!st.contains("start") || !st["start"].is_number_integer()) field_error(sp + ".start", "expected an integer");
    if (!st.contains("edges") || !st["edges"].is_array()) field_error(sp + ".edges", "expected an array of [x, y, mult]");
    for (std::size_t e = 0; e < st["edges"].size(); ++e) {
      const json& edge = st["edges"][e];
      const std::string ep = sp + ".edges[" + std::to_string(e) + "]";
      expect_int_array(edge, ep);
      if (edge.size() != 3) field_error(ep, "expected [x, y, mult]");
    }
    out.push_back({{"start", st["start"]}, {"edges", st["edges"]}});
  }
  return out;
}

json normalize(const json& v, Kind kind, const std::string& path) {
  switch (kind) {
    case Kind::Int:
      if (!v.is_number_integer()) field_error(path, "expected an integer, got " + v.dump());
      return v;
    case Kind::Num:
      if (!v.is_number()) field_error(path, "expected a number, got " + v.dump());
      return v.get<double>();
    case Kind::Bool:
      if (!v.is_boolean()) field_error(path, "expected true or false, got " + v.dump());
      return v;
    case Kind::Str:
      if (!v.is_string()) field_error(path, "expected a string, got " + v.dump());
      return v;
    case Kind::Rational:
      try {
        if (v.is_string()) return to_string(parse_rational(v.get<std::string>()));
        if (v.is_number_integer()) return to_string(Rational(v.get<std::int64_t>()));
        if (v.is_number()) return to_string(decimal_rational(v.get<double>()));
      } catch (const std::exception& e) {
        field_error(path, std::string("not a rational: ") + e.what());
      }
      field_error(path, "expected a number or a \"p/q\" string, got " + v.dump());
    case Kind::IntList:
      expect_int_array(v, path);
      return v;
    case Kind::NumList: {
      if (!v.is_array()) field_error(path, "expected an array of numbers");
      json out = json::array();
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) field_error(path + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back(v[i].get<double>());
      }
      return out;
    }
    case Kind::OptNum:
      if (v.is_null()) return v;
      return normalize(v, Kind::Num, path);
    case Kind::OptInt:
      if (v.is_null()) return v;
      return normalize(v, Kind::Int, path);
    case Kind::Vertex:
      if (v.is_null() || v.is_number_integer()) return v;
      if (v.is_array()) {
        expect_int_array(v, path);
        return v;
      }
      field_error(path, "expected a vertex id or lattice coordinates, got " + v.dump());
    case Kind::CdSpec:
      if (v.is_null() || v == "calibrate") return v;
      if (v.is_number()) return v.get<double>();
      field_error(path, "expected a number, null or \"calibrate\", got " + v.dump());
    case Kind::Stages:
      return normalize_stages(v, path);
    case Kind::Budget:
      break;
  }
  field_error(path, "unsupported field kind");
}

/// Applies `schema` to `user`, merging defaults; rejects keys not in the schema.
json apply_schema(const json& user, const Schema& schema, const std::string& path, json base = json::object()) {
  if (!user.is_object()) field_error(path, "expected an object");
  for (const auto& [k, _] : user.items()) {
    const bool known = std::any_of(schema.begin(), schema.end(), [&](const Field& f) { return f.key == k; });
    if (!known) field_error(path + "." + k, "unknown key");
  }
  for (const auto& f : schema) {
    const std::string fp = path + "." + f.key;
    if (f.kind == Kind::Budget) {
      base[f.key] = apply_schema(user.value(f.key, json::object()), budget_schema(), fp);
      continue;
    }
    if (user.contains(f.key))
      base[f.key] = normalize(user[f.key], f.kind, fp);
    else if (!base.contains(f.key))
      base[f.key] = normalize(f.def, f.kind, fp);
  }
  return base;
}

void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) field_error(path, what);
}

json resolve_family(const json& user, const std::string& exp) {
  const json defaults = family_defaults(exp);
  json block = user.is_null() ? json::object() : user;
  if (!block.is_object()) field_error("config.family", "expected an object with a \"family\" type");
  std::string type = defaults["family"];
  if (block.contains("family")) {
    if (!block["family"].is_string()) field_error("config.family.family", "expected a string");
    type = block["family"];
  }
  if (std::find(kFamilies.begin(), kFamilies.end(), type) == kFamilies.end())
    field_error("config.family.family", "unknown family \"" + type + "\", expected " + one_of(kFamilies));
  if (exp == "lower-bound" && type != "lattice_ball")
    field_error("config.family.family", "lower-bound needs a lattice_ball family");
  if (exp == "frozen-recurrence" && type != "frozen_nested")
    field_error("config.family.family", "frozen-recurrence needs a frozen_nested family");

  Schema schema = family_schema(type);
  json base = json::object();
  if (type == defaults["family"])
    for (auto& f : schema)
      if (defaults.contains(f.key)) base[f.key] = normalize(defaults[f.key], f.kind, "config.family." + f.key);
  json rest = block;
  rest.erase("family");
  json out = apply_schema(rest, schema, "config.family", base);
  out["family"] = type;
  require(out["horizon"].get<std::int64_t>() >= 0, "config.family.horizon", "must be >= 0");
  return out;
}

// ---------------------------------------------------------------------------
// Output helpers

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}
std::string fmt(std::int64_t x) { return std::to_string(x); }
std::string fmt(std::uint64_t x) { return std::to_string(x); }
std::string fmt(int x) { return std::to_string(x); }
std::string fmt(bool x) { return x ? "1" : "0"; }
std::string fmt(const std::optional<double>& x) { return x ? fmt(*x) : std::string(); }
/// Profile values with "none" where no admissible set exists.
std::string fmt_phi(double x) { return std::isinf(x) ? "none" : fmt(x); }

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// Header line, then a "# units:" comment, then rows. Rows reach the file as
/// they are written, so an aborted run leaves the rows produced so far.
class CsvWriter {
 public:
  CsvWriter(const fs::path& path, std::vector<std::pair<std::string, std::string>> columns) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    std::string header, units;
    for (const auto& [name, unit] : columns) {
      header += (header.empty() ? "" : ",") + name;
      units += (units.empty() ? "" : "; ") + name + " [" + unit + "]";
    }
    width_ = columns.size();
    out_ << "# units: " << units << '\n' << header << '\n';
  }
  void row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw std::logic_error("csv row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << csv_quote(cells[i]);
    out_ << '\n';
  }

 private:
  std::ofstream out_;
  std::size_t width_ = 0;
};

struct Context {
  Context(const json& config, fs::path directory, Budget caps, std::ostream& out)
      : cfg(config), dir(std::move(directory)), budget(caps), log(out) {}

  const json& cfg;
  fs::path dir;
  Budget budget;
  int workers = 1;
  std::uint64_t seed = 1;
  std::ostream& log;
  json results = json::object();
  json usage = json::object();
  std::vector<std::string> files;
  std::optional<std::string> exhausted;  ///< set when a cap clamped the run

  CsvWriter csv(const std::string& name, std::vector<std::pair<std::string, std::string>> cols) {
    files.push_back(name);
    return CsvWriter(dir / name, std::move(cols));
  }
};

Budget budget_from(const json& b) {
  Budget out;
  auto positive = [&](const char* key) {
    const auto v = b[key].get<std::int64_t>();
    require(v > 0, std::string("config.budget.") + key, "must be > 0");
    return v;
  };
  out.state_cap = static_cast<std::size_t>(positive("state_cap"));
  out.step_cap = positive("step_cap");
  out.replicate_cap = static_cast<std::uint64_t>(positive("replicate_cap"));
  out.enumeration_cap = static_cast<int>(positive("enumeration_cap"));
  return out;
}

std::int64_t horizon_of(const Context& c, const GrowingGraphSequence& seq, const char* key = "T") {
  const json& v = c.cfg[key];
  if (v.is_null()) return seq.horizon();
  const auto T = v.get<std::int64_t>();
  require(T >= 0, std::string("config.") + key, "must be >= 0");
  return T;
}

VertexId vertex_of(const json& v, const GrowingGraphSequence& seq, const std::string& path) {
  if (v.is_null()) return default_root(seq);
  if (v.is_number_integer()) return v.get<VertexId>();
  const LatticeGeometry* geo = nullptr;
  if (auto* f = dynamic_cast<const LatticeBallFamily*>(&seq)) geo = &f->geometry();
  if (auto* f = dynamic_cast<const FrozenNestedFamily*>(&seq)) geo = &f->geometry();
  if (!geo) field_error(path, "coordinates need a lattice family");
  const auto coords = v.get<std::vector<int>>();
  if (static_cast<int>(coords.size()) != geo->dimension())
    field_error(path, "expected " + std::to_string(geo->dimension()) + " coordinates");
  return geo->encode(coords);
}

std::uint64_t replicates_of(const Context& c) {
  const auto n = c.cfg["replicates"].get<std::int64_t>();
  require(n > 0, "config.replicates", "must be > 0");
  return static_cast<std::uint64_t>(n);
}

/// Clamps an evolution length to the step cap, recording the clamp.
std::int64_t clamp_steps(Context& c, std::int64_t T, const std::string& what) {
  if (T <= c.budget.step_cap) return T;
  c.exhausted = what + ": " + std::to_string(T) + " steps exceed the step cap " + std::to_string(c.budget.step_cap) +
                ", stopped at t = " + std::to_string(c.budget.step_cap);
  return c.budget.step_cap;
}

std::vector<std::pair<std::string, std::string>> return_columns() {
  return {{"k", "steps"},         {"E_N0", "visits"},         {"E_N0_sq", "visits^2"},
          {"pz_ratio", "1"},      {"E_N0_se", "visits"},      {"exact", "bool"}};
}

void write_return_stats(Context& c, const std::vector<ReturnStats>& rows) {
  auto out = c.csv("return_stats.csv", return_columns());
  for (const auto& r : rows)
    out.row({fmt(r.k), fmt(r.mean), fmt(r.mean_sq), fmt(r.pz_ratio), fmt(r.mean_se), fmt(r.exact)});
}

// ---------------------------------------------------------------------------
// Runners

using SeqPtr = std::shared_ptr<GrowingGraphSequence>;

void run_validate(Context& c, const SeqPtr& seq) {
  const std::int64_t H = c.cfg["horizon"].is_null() ? seq->horizon() : c.cfg["horizon"].get<std::int64_t>();
  require(H >= 0, "config.horizon", "must be >= 0");
  const auto report = validate_monotone(*seq, H);
  auto out = c.csv("snapshots.csv", {{"t", "steps"},
                                     {"vertices", "count"},
                                     {"volume", "edge weight"},
                                     {"max_degree", "edge weight"},
                                     {"connected", "bool"}});
  const GraphSnapshot* prev = nullptr;
  bool connected = true;
  for (std::int64_t t = 0; t <= H; ++t) {
    const auto snap = seq->snapshot_at(t);
    if (snap.get() != prev) connected = snap->connected();
    prev = snap.get();
    out.row({fmt(t), fmt(static_cast<std::uint64_t>(snap->size())), fmt(snap->volume()), fmt(snap->max_degree()),
             fmt(connected)});
  }
  c.results["report"] = report.to_json();
  c.results["family"] = seq->descriptor();
  if (!report.pass) throw DomainError("family failed validation: " + report.to_json().dump());
}

template <class Scalar>
void evolve_rows(Context& c, const SnapshotTimeline& tl, VertexId x0, std::int64_t T, bool exact_column) {
  std::vector<std::pair<std::string, std::string>> cols = {{"t", "steps"}, {"y_id", "vertex"}, {"prob", "probability"}};
  if (exact_column) cols.push_back({"prob_exact", "rational"});
  auto out = c.csv("distribution.csv", cols);
  ExactEvolver<Scalar> ev(tl, 0, x0);
  for (std::int64_t t = 0;; ++t) {
    const auto& g = ev.graph();
    const auto mass = ev.mass();
    for (Index i = 0; i < g.size(); ++i) {
      if (mass[i] == 0) continue;
      std::vector<std::string> row = {fmt(t), fmt(g.id(i))};
      if constexpr (std::is_floating_point_v<Scalar>) {
        row.push_back(fmt(static_cast<double>(mass[i])));
      } else {
        row.push_back(fmt(mass[i].template convert_to<double>()));
        row.push_back(to_string(mass[i]));
      }
      out.row(row);
    }
    if (t == T) break;
    ev.step();
  }
  if constexpr (std::is_floating_point_v<Scalar>) {
    c.results["renormalizations"] = ev.renormalizations().size();
    c.results["final_total"] = static_cast<double>(ev.total());
  } else {
    c.results["final_total_exact"] = to_string(ev.total());
  }
  c.usage["kernel_steps"] = T;
}

void run_evolve(Context& c, const SeqPtr& seq) {
  std::int64_t T = horizon_of(c, *seq);
  const VertexId x0 = vertex_of(c.cfg["x0"], *seq, "config.x0");
  const auto k_max = c.cfg["return_k_max"].get<std::int64_t>();
  require(k_max >= 0, "config.return_k_max", "must be >= 0");
  T = clamp_steps(c, std::max(T, k_max), "evolve");
  SnapshotTimeline tl(*seq, T, c.budget);
  const bool exact = c.cfg["exact_arithmetic"].get<bool>();
  c.log << "evolve: T = " << T << (exact ? " (rational)" : "") << "\n";
  if (exact)
    evolve_rows<Rational>(c, tl, x0, T, true);
  else
    evolve_rows<double>(c, tl, x0, T, false);
  c.results["x0"] = x0;
  c.results["T"] = T;
  if (k_max > 0) write_return_stats(c, return_stats_exact(tl, x0, std::min(k_max, T), c.budget));
}

void run_simulate(Context& c, const SeqPtr& seq) {
  const std::int64_t T = clamp_steps(c, horizon_of(c, *seq), "simulate");
  const VertexId x0 = vertex_of(c.cfg["x0"], *seq, "config.x0");
  const std::uint64_t n = replicates_of(c);
  SnapshotTimeline tl(*seq, T, c.budget);
  c.log << "simulate: " << n << " walkers, T = " << T << "\n";
  const auto marg = simulate_marginals(tl, x0, T, n, c.seed, c.budget, c.workers);
  std::vector<DistributionVector> exact;
  if (c.cfg["compare_exact"].get<bool>()) exact = evolve_exact(tl, x0, T, c.budget);

  auto out = c.csv("marginals.csv", {{"t", "steps"},
                                     {"y_id", "vertex"},
                                     {"prob", "probability"},
                                     {"std_err", "probability"},
                                     {"exact_prob", "probability"},
                                     {"z", "standard errors"}});
  double worst_z = 0.0;
  std::uint64_t compared = 0;
  for (std::int64_t t = 0; t <= T; ++t) {
    const auto& g = tl.at(t);
    for (Index i = 0; i < g.size(); ++i) {
      const double p = marg.prob(t, i);
      const double se = marg.std_err(t, i);
      std::optional<double> ex, z;
      if (!exact.empty()) {
        ex = exact[t].at(g.id(i));
        if (*ex >= 10.0 / static_cast<double>(n)) {
          const double sd = std::sqrt(*ex * (1.0 - *ex) / static_cast<double>(n));
          z = sd > 0 ? (p - *ex) / sd : 0.0;
          worst_z = std::max(worst_z, std::abs(*z));
          ++compared;
        }
      }
      if (p == 0.0 && (!ex || *ex == 0.0)) continue;
      out.row({fmt(t), fmt(g.id(i)), fmt(p), fmt(se), fmt(ex), fmt(z)});
    }
  }
  c.results["x0"] = x0;
  c.results["T"] = T;
  c.results["replicates"] = n;
  if (!exact.empty()) {
    c.results["compared_points"] = compared;
    c.results["worst_abs_z"] = worst_z;
  }
  c.usage["walker_steps"] = static_cast<double>(n) * static_cast<double>(T);

  std::vector<std::int64_t> ks = c.cfg["return_ks"].get<std::vector<std::int64_t>>();
  if (!ks.empty()) {
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    require(ks.front() >= 0, "config.return_ks", "entries must be >= 0");
    const std::int64_t kmax = clamp_steps(c, ks.back(), "return statistics");
    while (!ks.empty() && ks.back() > kmax) ks.pop_back();
    SnapshotTimeline rtl(*seq, kmax, c.budget);
    write_return_stats(c, return_stats_mc(rtl, x0, ks, n, c.seed ^ 0x5bd1e995ULL, c.budget, c.workers));
  }
}

void run_evoset(Context& c, const SeqPtr& seq) {
  const std::int64_t T = clamp_steps(c, horizon_of(c, *seq), "evoset");
  const VertexId x0 = vertex_of(c.cfg["x0"], *seq, "config.x0");
  const std::uint64_t n = replicates_of(c);
  const std::string mode = c.cfg["mode"];
  require(mode == "plain" || mode == "size_biased", "config.mode", "expected plain or size_biased");
  SnapshotTimeline tl(*seq, T, c.budget);
  std::vector<DistributionVector> exact;
  if (c.cfg["compare_exact"].get<bool>()) exact = evolve_exact(tl, x0, T, c.budget);
  auto exact_at = [&](std::int64_t t, VertexId y) -> std::optional<double> {
    if (exact.empty()) return std::nullopt;
    return exact[t].at(y);
  };
  c.log << "evoset (" << mode << "): " << n << " replicates, T = " << T << "\n";
  c.results["x0"] = x0;
  c.results["T"] = T;
  c.results["mode"] = mode;
  c.usage["set_steps"] = static_cast<double>(n) * static_cast<double>(T);

  if (mode == "plain") {
    const auto run = run_plain(tl, x0, T, n, c.seed, c.budget, c.workers);
    auto out = c.csv("membership.csv", {{"t", "steps"},
                                        {"y_id", "vertex"},
                                        {"est_membership_prob", "probability"},
                                        {"std_err", "probability"},
                                        {"walk_estimate", "probability"},
                                        {"exact_prob", "probability"}});
    const double pi0 = static_cast<double>(run.x0_degree);
    for (std::int64_t t = 0; t <= T; ++t) {
      const auto& g = tl.at(t);
      for (Index i = 0; i < g.size(); ++i) {
        const double p = run.membership_prob(t, i);
        const auto ex = exact_at(t, g.id(i));
        if (p == 0.0 && (!ex || *ex == 0.0)) continue;
        const double scale = static_cast<double>(g.degree(i)) / pi0;
        out.row({fmt(t), fmt(g.id(i)), fmt(p), fmt(run.membership_se(t, i)), fmt(scale * p), fmt(ex)});
      }
    }
    auto w = c.csv("weight.csv", {{"t", "steps"},
                                  {"mean_weight", "edge weight"},
                                  {"std_err", "edge weight"},
                                  {"extinct_fraction", "1"}});
    for (std::int64_t t = 0; t <= T; ++t)
      w.row({fmt(t), fmt(run.mean_weight[t]), fmt(run.weight_se[t]), fmt(run.extinct_fraction[t])});
    c.results["x0_degree"] = run.x0_degree;
    return;
  }

  SizeBiasedOptions opts;
  opts.alpha = c.cfg["alpha"].get<double>();
  require(opts.alpha > 0.0 && opts.alpha < 1.0, "config.alpha", "must lie in (0, 1)");
  if (!c.cfg["anchor"].is_null()) {
    opts.anchor = c.cfg["anchor"].get<std::int64_t>();
    require(*opts.anchor >= 0 && *opts.anchor <= T, "config.anchor", "must lie in [0, T]");
  }
  opts.gamma = seq->gamma().value_or(0.5);
  const auto run = run_size_biased(tl, x0, T, n, c.seed, opts, c.budget, c.workers);
  auto out = c.csv("walk_estimate.csv", {{"t", "steps"},
                                         {"y_id", "vertex"},
                                         {"est_prob", "probability"},
                                         {"std_err", "probability"},
                                         {"exact_prob", "probability"}});
  for (std::int64_t t = 0; t <= T; ++t) {
    const auto& g = tl.at(t);
    for (Index i = 0; i < g.size(); ++i) {
      const double p = run.walk_estimate[t][i];
      const auto ex = exact_at(t, g.id(i));
      if (p == 0.0 && (!ex || *ex == 0.0)) continue;
      out.row({fmt(t), fmt(g.id(i)), fmt(p), fmt(run.walk_se[t][i]), fmt(ex)});
    }
  }
  auto w = c.csv("likelihood_ratio.csv", {{"t", "steps"}, {"mean_lr", "1"}, {"std_err", "1"}});
  for (std::int64_t t = 0; t <= T; ++t) w.row({fmt(t), fmt(run.mean_lr[t]), fmt(run.lr_se[t])});
  auto L = c.csv("L.csv", {{"u", "steps"}, {"L_u_est", "edge weight^(alpha-1)"}, {"std_err", "edge weight^(alpha-1)"}});
  for (std::size_t k = 0; k < run.L.size(); ++k)
    L.row({fmt(run.anchor + static_cast<std::int64_t>(k)), fmt(run.L[k]), fmt(run.L_se[k])});
  c.results["anchor"] = run.anchor;
  c.results["alpha"] = run.alpha;
  c.results["x0_bound"] = run.x0_bound;
}

/// Profiles for t = 0..T, one per distinct snapshot.
std::vector<std::shared_ptr<const IsoperimetricProfile>> profiles_over(const SnapshotTimeline& tl, ProfileCache& cache) {
  std::vector<std::shared_ptr<const IsoperimetricProfile>> out;
  for (std::int64_t t = 0; t <= tl.last(); ++t) {
    if (t > 0 && !tl.changes_after(t - 1))
      out.push_back(out.back());
    else
      out.push_back(cache.at(tl.ptr(t)));
  }
  return out;
}

void run_isoperimetry(Context& c, const SeqPtr& seq) {
  const std::int64_t T = horizon_of(c, *seq);
  SnapshotTimeline tl(*seq, T, c.budget);
  ProfileCache cache(*seq, c.budget.enumeration_cap, c.workers);
  const auto profiles = profiles_over(tl, cache);
  auto prof = c.csv("profile.csv", {{"t", "steps"}, {"r", "edge weight"}, {"phi", "1"}, {"source", "label"}});
  auto ch = c.csv("cheeger.csv", {{"t", "steps"}, {"cheeger", "1"}, {"source", "label"}});
  std::int64_t exact_count = 0;
  for (std::int64_t t = 0; t <= T; ++t) {
    const auto& p = *profiles[t];
    const std::string src = to_string(p.source());
    if (t == 0 || profiles[t] != profiles[t - 1]) {
      for (const auto& [r, phi] : p.breakpoints()) prof.row({fmt(t), fmt(r), fmt_phi(phi), src});
      exact_count += p.source() == ProfileSource::exact;
    }
    ch.row({fmt(t), fmt_phi(p.cheeger()), src});
  }
  c.results["T"] = T;
  c.results["exact_profiles"] = exact_count;
  const double final_cheeger = profiles.back()->cheeger();
  c.results["final_cheeger"] = std::isinf(final_cheeger) ? json("none") : json(final_cheeger);
  c.results["final_profile"] = profiles.back()->to_json();
}

void run_bounds(Context& c, const SeqPtr& seq) {
  const std::int64_t T = clamp_steps(c, horizon_of(c, *seq), "bounds");
  require(T >= 2, "config.T", "bounds need T >= 2");
  BoundParams params;
  params.alpha = c.cfg["alpha"].get<double>();
  if (!c.cfg["gamma"].is_null())
    params.gamma = c.cfg["gamma"].get<double>();
  else if (seq->gamma())
    params.gamma = *seq->gamma();
  else
    field_error("config.gamma", "the family declares no laziness floor; set gamma");
  if (!c.cfg["delta"].is_null())
    params.delta = c.cfg["delta"].get<std::int64_t>();
  else
    params.delta = seq->delta_cap();
  params.validate();

  const VertexId x0 = vertex_of(c.cfg["x0"], *seq, "config.x0");
  const VertexId y = c.cfg["y"].is_null() ? x0 : vertex_of(c.cfg["y"], *seq, "config.y");
  SnapshotTimeline tl(*seq, T, c.budget);
  ProfileCache cache(*seq, c.budget.enumeration_cap, c.workers);
  const auto profiles = profiles_over(tl, cache);
  std::vector<std::int64_t> volumes(T + 1);
  std::vector<double> cheeger(T + 1);
  for (std::int64_t u = 0; u <= T; ++u) {
    volumes[u] = tl.at(u).volume();
    cheeger[u] = profiles[u]->cheeger();
  }
  FirstBoundEvaluator first(volumes, profiles, params, tl.at(0).degree_of(x0));

  c.log << "bounds: T = " << T << ", alpha = " << params.alpha << ", gamma = " << params.gamma << "\n";
  struct Row {
    std::optional<double> first, second;
    std::int64_t argmin = -1;
  };
  std::vector<Row> rows(T + 1);
  parallel_chunks(static_cast<std::uint64_t>(T - 1), c.workers, [&](int, std::uint64_t b, std::uint64_t e) {
    for (std::uint64_t k = b; k < e; ++k) {
      const std::int64_t t = static_cast<std::int64_t>(k) + 2;
      const auto& g = tl.at(t);
      const auto yi = g.find(y);
      if (!yi) continue;
      const auto fb = first(t, g.degree(*yi));
      rows[t].first = fb.value;
      rows[t].argmin = fb.argmin_s;
      if (params.delta) rows[t].second = second_bound(volumes, cheeger, t, params);
    }
  });

  std::vector<double> exact(T + 1, NAN);
  if (c.cfg["exact"].get<bool>()) {
    ExactEvolver<double> ev(tl, 0, x0);
    exact[0] = ev.prob(y);
    for (std::int64_t t = 1; t <= T; ++t) {
      ev.step();
      exact[t] = ev.prob(y);
    }
  }

  auto out = c.csv("bounds.csv", {{"t", "steps"},
                                  {"exact", "probability"},
                                  {"first_bound", "probability"},
                                  {"argmin_s", "steps"},
                                  {"second_bound", "probability"},
                                  {"margin", "probability"}});
  std::int64_t violations = 0;
  double min_margin = INFINITY;
  for (std::int64_t t = 2; t <= T; ++t) {
    const Row& r = rows[t];
    std::optional<double> ex, margin;
    if (!std::isnan(exact[t])) ex = exact[t];
    if (ex && (r.first || r.second)) {
      const double best = std::min(r.first.value_or(INFINITY), r.second.value_or(INFINITY));
      margin = best - *ex;
      min_margin = std::min(min_margin, *margin);
      if ((r.first && *ex > *r.first * (1 + 1e-9)) || (r.second && *ex > *r.second * (1 + 1e-9))) ++violations;
    }
    out.row({fmt(t), fmt(ex), fmt(r.first), r.argmin >= 0 ? fmt(r.argmin) : std::string(), fmt(r.second),
             fmt(margin)});
  }

  std::vector<double> vol_d(volumes.begin(), volumes.end());
  const auto tr = transience_report(vol_d, std::span<const double>(cheeger).first(T), c.cfg["tol"].get<double>());
  auto tcsv = c.csv("transience.csv", {{"t", "steps"}, {"sum_inv_vol", "1/edge weight"}, {"sum_mixing_term", "1"}});
  for (const auto& r : tr.rows) tcsv.row({fmt(r.t), fmt(r.sum_inv_vol), fmt(r.sum_mixing_term)});

  c.results["x0"] = x0;
  c.results["y"] = y;
  c.results["T"] = T;
  c.results["alpha"] = params.alpha;
  c.results["gamma"] = params.gamma;
  c.results["delta"] = params.delta ? json(*params.delta) : json(nullptr);
  c.results["c_plus"] = params.c_plus();
  c.results["c_star"] = params.c_star();
  c.results["L_floored"] = first.floored();
  if (c.cfg["exact"].get<bool>()) {
    c.results["violations"] = violations;
    c.results["min_margin"] = min_margin;
  }
  c.results["transience"] = tr.to_json();
  c.usage["kernel_steps"] = T;
}

void run_merging(Context& c) {
  const int N = c.cfg["N"].get<int>();
  const Rational theta = parse_rational(c.cfg["theta"].get<std::string>());
  const Rational eta = parse_rational(c.cfg["eta"].get<std::string>());
  MergingChainSchedule chain(N, theta, eta);
  MergingOptions opts;
  opts.t_max = c.cfg["t_max"].get<std::int64_t>();
  require(opts.t_max >= 1, "config.t_max", "must be >= 1");
  opts.delta = c.cfg["delta"].get<double>();
  opts.stride = c.cfg["stride"].get<std::int64_t>();
  require(opts.stride >= 0, "config.stride", "must be >= 0");
  opts.exact = c.cfg["exact_arithmetic"].get<bool>();
  opts.checkpoints = c.cfg["checkpoints"].get<std::vector<std::int64_t>>();
  opts.t_max = clamp_steps(c, opts.t_max, "merging");
  if (opts.exact && opts.t_max > kExactMergingSteps) {
    c.exhausted = "merging: exact arithmetic is limited to " + std::to_string(kExactMergingSteps) +
                  " steps, stopped at t = " + std::to_string(kExactMergingSteps);
    opts.t_max = kExactMergingSteps;
  }
  c.log << "merging: N = " << N << ", theta = " << to_string(theta) << ", eta = " << to_string(eta)
        << ", t_max = " << opts.t_max << "\n";
  const auto report = merging_distances(chain, opts, c.budget);
  auto out = c.csv("merging.csv", {{"t", "steps"}, {"tv", "probability"}, {"relsup", "1"}});
  for (const auto& r : report.rows) out.row({fmt(r.t), fmt(r.tv), fmt(r.relsup)});

  c.results = report.to_json();
  c.results["certificate"] = certify_constraints(chain).to_json();
  c.results["two_state"] = two_state_analysis(theta, eta).to_json();
  c.usage["kernel_steps"] = opts.t_max;

  const auto grid = c.cfg["excursion_n"].get<std::vector<int>>();
  if (!grid.empty()) {
    const auto reps = c.cfg["excursion_replicates"].get<std::int64_t>();
    require(reps > 0, "config.excursion_replicates", "must be > 0");
    const auto ex = excursion_tail(grid, theta, eta, static_cast<std::uint64_t>(reps), c.seed, c.budget, c.workers);
    auto e = c.csv("excursion.csv", {{"N", "states"},
                                     {"hits", "walkers"},
                                     {"prob", "probability"},
                                     {"std_err", "probability"},
                                     {"log_prob", "log probability"}});
    for (const auto& r : ex.rows) e.row({fmt(r.N), fmt(r.hits), fmt(r.prob), fmt(r.std_err), fmt(r.log_prob)});
    c.results["excursion"] = ex.to_json();
  }
}

void run_lower_bound(Context& c, const SeqPtr& seq) {
  const auto* fam = dynamic_cast<const LatticeBallFamily*>(seq.get());
  if (!fam) field_error("config.family.family", "lower-bound needs a lattice_ball family");
  LowerBoundConfig cfg;
  cfg.psi_exponent = c.cfg["psi_exponent"].get<double>();
  cfg.delta0 = c.cfg["delta0"].get<double>();
  cfg.t_grid = c.cfg["t_grid"].get<std::vector<std::int64_t>>();
  if (cfg.t_grid.empty()) {
    const std::int64_t H = fam->horizon();
    const std::int64_t step = std::max<std::int64_t>(1, H / 100);
    for (std::int64_t t = std::max<std::int64_t>(1, H / 2); t <= H; t += step) cfg.t_grid.push_back(t);
  }
  std::function<double(std::int64_t)> cheeger;
  if (fam->certificate()) cheeger = [fam](std::int64_t u) { return analytic_profile(*fam, u).cheeger(); };
  c.log << "lower-bound: " << cfg.t_grid.size() << " grid times up to t = " << cfg.t_grid.back() << "\n";
  const auto report = lower_bound_check(*fam, cfg, c.budget, cheeger);
  auto out = c.csv("lower_bound.csv", {{"t", "steps"},
                                       {"min_v_times_P", "edge weight x probability"},
                                       {"c_hat", "edge weight x probability"},
                                       {"window", "lattice distance"},
                                       {"radius_limit", "lattice distance"},
                                       {"admissible", "vertices"},
                                       {"argmin_y", "vertex"},
                                       {"ball_like_ratio", "1"},
                                       {"zeta", "1"}});
  for (const auto& r : report.rows)
    out.row({fmt(r.t), fmt(r.min_v_times_p), fmt(r.running_min), fmt(r.window), fmt(r.radius_limit),
             fmt(static_cast<std::uint64_t>(r.admissible)), fmt(r.argmin_y), fmt(r.ball_like_ratio), fmt(r.zeta)});
  c.results = report.to_json();
  c.usage["kernel_steps"] = cfg.t_grid.back();
}

void run_frozen(Context& c, const SeqPtr& seq) {
  const auto* fam = dynamic_cast<const FrozenNestedFamily*>(seq.get());
  if (!fam) field_error("config.family.family", "frozen-recurrence needs a frozen_nested family");
  FrozenRecurrenceOptions opts;
  opts.replicates = replicates_of(c);
  opts.seed = c.seed;
  opts.workers = c.workers;
  opts.exit_ratio_max_stage = c.cfg["exit_ratio_max_stage"].get<int>();
  const std::int64_t T = horizon_of(c, *seq);
  c.log << "frozen-recurrence: " << opts.replicates << " walkers, T = " << T << "\n";
  const auto report = frozen_recurrence_experiment(*fam, T, opts, c.budget);
  auto out = c.csv("stages.csv", {{"l", "stage"},
                                  {"begin", "steps"},
                                  {"end", "steps"},
                                  {"volume", "edge weight"},
                                  {"floor_shape", "steps/edge weight"},
                                  {"local_time", "visits"},
                                  {"local_time_se", "visits"},
                                  {"partial_sum", "steps/edge weight"},
                                  {"exit_ratio", "1"}});
  for (const auto& s : report.stages)
    out.row({fmt(s.l), fmt(s.begin), fmt(s.end), fmt(s.volume), fmt(s.floor_shape), fmt(s.local_time),
             fmt(s.local_time_se), fmt(s.partial_sum), fmt(s.exit_ratio)});
  c.results = report.to_json();
  c.usage["walker_steps"] = static_cast<double>(opts.replicates) * static_cast<double>(T);
}

void run_acceptance_experiment(Context& c) {
  AcceptanceOptions opts;
  opts.seed = c.seed;
  opts.workers = c.workers;
  for (int id : c.cfg["only"].get<std::vector<int>>()) {
    require(id >= 1 && id <= 11, "config.only", "criterion ids run from 1 to 11");
    opts.only.insert(id);
  }
  auto out = c.csv("acceptance.csv",
                   {{"id", "criterion"}, {"name", "label"}, {"pass", "bool"}, {"seconds", "s"}, {"detail", "text"}});
  const auto results = run_acceptance(opts, [&](const CriterionResult& r) {
    c.log << format_result(r) << "\n";
    out.row({fmt(r.id), r.name, fmt(r.pass), fmt(r.seconds), r.detail});
  });
  c.results = acceptance_json(results);
  std::ofstream(c.dir / "acceptance.json") << c.results.dump(2) << '\n';
  c.files.push_back("acceptance.json");
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << j.dump(2) << '\n';
}

}  // namespace

// ---------------------------------------------------------------------------

const std::vector<std::string>& experiment_names() { return kExperiments; }

json parse_config_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw DomainError("config: malformed JSON at line " + std::to_string(line) + ", column " +
                      std::to_string(column) + " (" + e.what() + ")");
  }
}

json resolve_config(const json& user) {
  if (!user.is_object()) field_error("config", "expected a JSON object");
  if (user.contains("grid")) field_error("config.grid", "expand the grid before resolving");
  if (!user.contains("experiment")) field_error("config.experiment", "missing, expected " + one_of(kExperiments));
  if (!user["experiment"].is_string()) field_error("config.experiment", "expected a string");
  const std::string exp = user["experiment"];
  if (std::find(kExperiments.begin(), kExperiments.end(), exp) == kExperiments.end())
    field_error("config.experiment", "unknown experiment \"" + exp + "\", expected " + one_of(kExperiments));

  Schema schema = common_schema(exp);
  for (auto& f : experiment_schema(exp)) schema.push_back(f);
  json rest = user;
  json family;
  if (uses_family(exp)) {
    family = resolve_family(user.value("family", json()), exp);
    rest.erase("family");
  }
  json out = apply_schema(rest, schema, "config");
  if (uses_family(exp)) out["family"] = family;
  require(out["workers"].get<std::int64_t>() >= 0, "config.workers", "must be >= 0 (0 uses every core)");
  require(out["seed"].get<std::int64_t>() >= 0 || out["seed"].is_number_unsigned(), "config.seed", "must be >= 0");
  require(!out["name"].get<std::string>().empty(), "config.name", "must not be empty");
  budget_from(out["budget"]);
  if (exp == "merging") {
    require(out["N"].get<std::int64_t>() >= 2, "config.N", "must be >= 2");
    require(out["delta"].get<double>() > 0.0 && out["delta"].get<double>() < 1.0, "config.delta", "must lie in (0, 1)");
  }
  return out;
}

std::string config_hash(const json& resolved) {
  json keyed = resolved;
  keyed.erase("out");
  const std::string text = keyed.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<json> expand_grid(const json& user) {
  if (!user.is_object() || !user.contains("grid")) return {user};
  const json& grid = user["grid"];
  if (!grid.is_object()) field_error("config.grid", "expected an object of {path: [values]}");
  std::vector<json> points = {user};
  points.front().erase("grid");
  for (const auto& [path, values] : grid.items()) {
    if (!values.is_array() || values.empty()) field_error("config.grid." + path, "expected a non-empty array");
    json::json_pointer ptr;
    std::stringstream ss(path);
    for (std::string part; std::getline(ss, part, '.');) {
      if (part.empty()) field_error("config.grid." + path, "empty path segment");
      ptr /= part;
    }
    std::vector<json> next;
    for (const auto& base : points)
      for (const auto& v : values) {
        json p = base;
        p[ptr] = v;
        next.push_back(std::move(p));
      }
    points = std::move(next);
  }
  return points;
}

std::shared_ptr<GrowingGraphSequence> make_family(const json& f, const Budget& budget, int workers) {
  const std::string type = f["family"];
  const auto horizon = f["horizon"].get<std::int64_t>();
  if (type == "lattice_ball") {
    LatticeBallParams p;
    p.d = f["d"].get<int>();
    p.beta = f["beta"].get<double>();
    p.a = f["a"].get<double>();
    p.gamma = f["gamma"].get<double>();
    p.horizon = horizon;
    if (f["c_d"].is_number()) p.c_d = f["c_d"].get<double>();
    auto fam = std::make_shared<LatticeBallFamily>(p, budget);
    if (f["c_d"] == "calibrate")
      fam->set_cd(calibrate_lattice_cd(p.d, fam->loops(), f["calibration_states"].get<int>(), workers).c_d);
    return fam;
  }
  if (type == "frozen_nested") {
    FrozenNestedParams p;
    p.d = f["d"].get<int>();
    p.inner = f["inner"].get<std::vector<double>>();
    p.outer = f["outer"].get<std::vector<double>>();
    p.stage_starts = f["stage_starts"].get<std::vector<std::int64_t>>();
    p.graph_radius = f["graph_radius"].get<std::vector<double>>();
    p.delta = f["delta"].get<double>();
    p.gamma = f["gamma"].get<double>();
    p.horizon = horizon;
    return std::make_shared<FrozenNestedFamily>(p, budget);
  }
  if (type == "expander") {
    ExpanderParams p;
    p.a = f["a"].get<double>();
    p.beta = f["beta"].get<double>();
    p.gamma = f["gamma"].get<double>();
    p.horizon = horizon;
    return std::make_shared<ExpanderFamily>(p, budget);
  }
  if (type == "two_vertex") {
    auto seq = ExplicitSequence::frozen(two_vertex_graph(), horizon, "two_vertex");
    seq->declare_gamma(0.5);
    seq->declare_delta(2);
    return seq;
  }
  if (type == "growing_path") return growing_path_family(horizon);
  if (type == "path") {
    const auto n = f["n"].get<std::int64_t>();
    const auto loops = f["loops"].get<std::int64_t>();
    require(n >= 2 && n <= static_cast<std::int64_t>(budget.state_cap), "config.family.n",
            "must lie in [2, state_cap]");
    require(loops >= 0, "config.family.loops", "must be >= 0");
    auto seq = ExplicitSequence::frozen(path_graph(static_cast<int>(n), loops), horizon, "path");
    seq->declare_gamma(static_cast<double>(loops) / static_cast<double>(2 + loops));
    seq->declare_delta(2 + loops);
    return seq;
  }
  if (type == "explicit") {
    const json& stages = f["stages"];
    if (stages.empty()) field_error("config.family.stages", "need at least one stage");
    std::vector<std::int64_t> starts;
    std::vector<SnapshotPtr> snaps;
    for (const auto& st : stages) {
      std::vector<EdgeEntry> edges;
      for (const auto& e : st["edges"])
        edges.push_back({e[0].get<VertexId>(), e[1].get<VertexId>(), e[2].get<std::int64_t>()});
      starts.push_back(st["start"].get<std::int64_t>());
      snaps.push_back(std::make_shared<const GraphSnapshot>(GraphSnapshot::from_edges(edges)));
    }
    auto seq = std::make_shared<ExplicitSequence>(starts, snaps, horizon, "explicit");
    if (!f["gamma"].is_null()) seq->declare_gamma(f["gamma"].get<double>());
    if (!f["delta"].is_null()) seq->declare_delta(f["delta"].get<std::int64_t>());
    return seq;
  }
  field_error("config.family.family", "unknown family " + type);
}

VertexId default_root(const GrowingGraphSequence& seq) {
  if (auto* f = dynamic_cast<const LatticeBallFamily*>(&seq)) return f->origin();
  if (auto* f = dynamic_cast<const FrozenNestedFamily*>(&seq)) return f->origin();
  const auto g = seq.snapshot_at(0);
  if (g->empty()) throw DomainError("family: G_0 has no vertices");
  return g->id(0);
}

RunOutcome run_experiment(const json& resolved, std::ostream& log) {
  RunOutcome outcome;
  const std::string exp = resolved["experiment"];
  const std::string hash = config_hash(resolved);
  outcome.directory = fs::path(resolved["out"].get<std::string>()) / resolved["name"].get<std::string>() / hash;
  fs::create_directories(outcome.directory);
  write_json(outcome.directory / "config.json", resolved);

  Context c(resolved, outcome.directory, budget_from(resolved["budget"]), log);
  c.workers = resolve_workers(resolved["workers"].get<int>());
  c.seed = resolved["seed"].get<std::uint64_t>();

  const auto start = std::chrono::steady_clock::now();
  std::string status = "ok";
  try {
    if (exp == "merging") {
      run_merging(c);
    } else if (exp == "acceptance") {
      run_acceptance_experiment(c);
    } else {
      const auto seq = make_family(resolved["family"], c.budget, c.workers);
      if (exp == "validate") run_validate(c, seq);
      else if (exp == "evolve") run_evolve(c, seq);
      else if (exp == "simulate") run_simulate(c, seq);
      else if (exp == "evoset") run_evoset(c, seq);
      else if (exp == "isoperimetry") run_isoperimetry(c, seq);
      else if (exp == "bounds") run_bounds(c, seq);
      else if (exp == "lower-bound") run_lower_bound(c, seq);
      else if (exp == "frozen-recurrence") run_frozen(c, seq);
    }
    if (c.exhausted) {
      status = "budget_exhausted";
      outcome.exit_code = 2;
      outcome.message = *c.exhausted;
    }
  } catch (const BudgetError& e) {
    status = "budget_exhausted";
    outcome.exit_code = 2;
    outcome.message = e.what();
    if (e.at() >= 0) outcome.message += " (at t = " + std::to_string(e.at()) + ")";
  } catch (const std::exception& e) {
    status = "error";
    outcome.exit_code = 1;
    outcome.message = e.what();
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json summary = {{"experiment", exp},
                  {"name", resolved["name"]},
                  {"config_hash", hash},
                  {"seed", c.seed},
                  {"workers", c.workers},
                  {"status", status},
                  {"wall_seconds", seconds},
                  {"budget", resolved["budget"]},
                  {"budget_usage", c.usage},
                  {"files", c.files},
                  {"results", c.results}};
  if (!outcome.message.empty()) summary["message"] = outcome.message;
  write_json(outcome.directory / "summary.json", summary);
  return outcome;
}

std::vector<RunOutcome> run_config(const json& user, std::ostream& log) {
  std::vector<json> resolved;
  try {
    for (const auto& point : expand_grid(user)) resolved.push_back(resolve_config(point));
  } catch (const std::exception& e) {
    return {RunOutcome{1, {}, e.what()}};
  }
  std::vector<RunOutcome> out;
  for (const auto& r : resolved) out.push_back(run_experiment(r, log));
  return out;
}

}  // namespace growlab
