#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "growlab/common.hpp"
#include "growlab/experiments.hpp"

using json = nlohmann::json;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> workers;
  bool exact = false;
  std::optional<int> N;
  std::optional<std::string> theta;
  std::optional<std::string> eta;
  std::optional<std::int64_t> t_max;
  std::optional<double> delta;
  std::optional<std::int64_t> T;
  std::optional<std::int64_t> replicates;
  std::optional<std::string> family;
  std::vector<std::string> sets;
  bool dry_run = false;
};

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw growlab::DomainError("config: cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return growlab::parse_config_text(ss.str());
}

/// Parses "a.b.c=value"; the value is read as JSON when it parses, else as a string.
void apply_set(json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw growlab::DomainError("--set expects path=value, got " + assignment);
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json::json_pointer ptr;
  std::stringstream ss(path);
  for (std::string part; std::getline(ss, part, '.');) ptr /= part;
  cfg[ptr] = value;
}

json build_config(const std::string& experiment, const Flags& f) {
  json cfg = f.config.empty() ? json::object() : load_config(f.config);
  if (!cfg.is_object()) throw growlab::DomainError("config: expected a JSON object");
  if (!experiment.empty()) {
    if (cfg.contains("experiment") && cfg["experiment"] != experiment)
      throw growlab::DomainError("config.experiment: file says " + cfg["experiment"].dump() + " but the subcommand is " +
                                 experiment);
    cfg["experiment"] = experiment;
  }
  if (f.seed) cfg["seed"] = *f.seed;
  if (f.out) cfg["out"] = *f.out;
  if (f.workers) cfg["workers"] = *f.workers;
  if (f.exact) cfg["exact_arithmetic"] = true;
  if (f.N) cfg["N"] = *f.N;
  if (f.theta) cfg["theta"] = *f.theta;
  if (f.eta) cfg["eta"] = *f.eta;
  if (f.t_max) cfg["t_max"] = *f.t_max;
  if (f.delta) cfg["delta"] = *f.delta;
  if (f.T) cfg["T"] = *f.T;
  if (f.replicates) cfg["replicates"] = *f.replicates;
  if (f.family) cfg["family"]["family"] = *f.family;
  for (const auto& s : f.sets) apply_set(cfg, s);
  return cfg;
}

void add_flags(CLI::App* cmd, Flags& f, bool config_positional) {
  if (config_positional)
    cmd->add_option("config", f.config, "JSON config file")->required();
  else
    cmd->add_option("--config,-c", f.config, "JSON config file");
  cmd->add_option("--seed", f.seed, "RNG seed");
  cmd->add_option("--out", f.out, "output root (default results)");
  cmd->add_option("--workers", f.workers, "worker threads, 0 for every core");
  cmd->add_flag("--exact-arithmetic", f.exact, "rational arithmetic (evolve, merging)");
  cmd->add_option("--N", f.N, "merging chain size");
  cmd->add_option("--theta", f.theta, "merging theta, decimal or p/q");
  cmd->add_option("--eta", f.eta, "merging eta, decimal or p/q");
  cmd->add_option("--t-max", f.t_max, "merging horizon");
  cmd->add_option("--delta", f.delta, "merging threshold");
  cmd->add_option("--T", f.T, "experiment horizon");
  cmd->add_option("--replicates", f.replicates, "Monte Carlo replicates");
  cmd->add_option("--family", f.family, "family type");
  cmd->add_option("--set", f.sets, "override a config key: path.to.key=value")->take_all();
  cmd->add_flag("--dry-run", f.dry_run, "print the resolved config and its hash, run nothing");
}

int execute(const std::string& experiment, const Flags& f) {
  const json cfg = build_config(experiment, f);
  if (f.dry_run) {
    for (const auto& point : growlab::expand_grid(cfg)) {
      const json r = growlab::resolve_config(point);
      std::cout << growlab::config_hash(r) << "\n" << r.dump(2) << "\n";
    }
    return 0;
  }
  int code = 0;
  for (const auto& o : growlab::run_config(cfg, std::cerr)) {
    if (!o.directory.empty()) std::cout << o.directory.string() << "\n";
    if (!o.message.empty()) std::cerr << (o.exit_code == 2 ? "budget: " : "error: ") << o.message << "\n";
    code = std::max(code, o.exit_code);
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"growlab: random walks on growing graphs"};
  app.require_subcommand(1);

  Flags flags;
  std::string chosen;
  auto* run = app.add_subcommand("run", "run the experiment named in a config file");
  add_flags(run, flags, true);
  run->callback([&] { chosen = "run"; });
  for (const auto& name : growlab::experiment_names()) {
    auto* cmd = app.add_subcommand(name, "run the " + name + " experiment");
    add_flags(cmd, flags, false);
    cmd->callback([&chosen, name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    return execute(chosen == "run" ? std::string() : chosen, flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
