#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "growlab/experiments.hpp"

using namespace growlab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Header line of a CSV, after the units comment.
std::string csv_header(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  REQUIRE(line.rfind("# units:", 0) == 0);
  std::getline(in, line);
  return line;
}

fs::path scratch(const std::string& tag) {
  const auto dir = fs::temp_directory_path() / ("growlab_unit_" + tag);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("config resolution") {
  SUBCASE("a minimal merging config gets defaults") {
    const auto r = resolve_config(json{{"experiment", "merging"}});
    CHECK(r["N"] == 32);
    CHECK(r["theta"] == "1/20");
    CHECK(r["name"] == "merging");
    CHECK(r["seed"] == 1);
  }
  SUBCASE("unknown keys are reported with their path") {
    try {
      resolve_config(json{{"experiment", "bounds"}, {"family", {{"family", "two_vertex"}, {"foo", 1}}}});
      FAIL("expected a DomainError");
    } catch (const DomainError& e) {
      CHECK(std::string(e.what()).find("config.family.foo") != std::string::npos);
    }
  }
  SUBCASE("unknown experiments are rejected") {
    CHECK_THROWS_AS(resolve_config(json{{"experiment", "nope"}}), DomainError);
  }
  SUBCASE("mistyped values are rejected") {
    CHECK_THROWS_AS(resolve_config(json{{"experiment", "merging"}, {"N", "big"}}), DomainError);
  }
}

TEST_CASE("malformed JSON reports line and column") {
  try {
    parse_config_text("{\n  \"experiment\": \"merging\",\n  \"N\": ,\n}");
    FAIL("expected a DomainError");
  } catch (const DomainError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("column") != std::string::npos);
  }
}

TEST_CASE("config hash") {
  const auto a = resolve_config(json{{"experiment", "merging"}, {"theta", 0.05}});
  const auto b = resolve_config(json{{"experiment", "merging"}, {"theta", "1/20"}});
  const auto c = resolve_config(json{{"experiment", "merging"}, {"theta", "1/10"}});
  const auto d = resolve_config(json{{"experiment", "merging"}, {"theta", "1/20"}, {"out", "elsewhere"}});
  CHECK(config_hash(a).size() == 16);
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a) != config_hash(c));
  CHECK(config_hash(b) == config_hash(d));
}

TEST_CASE("grid expansion") {
  const json user = {{"experiment", "merging"}, {"grid", {{"N", {8, 16, 32}}, {"theta", {"0", "1/20"}}}}};
  const auto points = expand_grid(user);
  CHECK(points.size() == 6);
  for (const auto& p : points) CHECK_FALSE(p.contains("grid"));
  CHECK(expand_grid(json{{"experiment", "merging"}}).size() == 1);
}

TEST_CASE("merging run writes a stable CSV") {
  const auto out = scratch("merging");
  const json user = {{"experiment", "merging"}, {"N", 8}, {"t_max", 200}, {"out", out.string()}};
  std::ostringstream log;
  const auto first = run_config(user, log);
  REQUIRE(first.size() == 1);
  CHECK(first[0].exit_code == 0);
  const auto csv = first[0].directory / "merging.csv";
  CHECK(csv_header(csv) == "t,tv,relsup");
  CHECK(fs::exists(first[0].directory / "summary.json"));
  CHECK(fs::exists(first[0].directory / "config.json"));
  const auto bytes = slurp(csv);
  const auto summary = json::parse(slurp(first[0].directory / "summary.json"));
  CHECK(summary["status"] == "ok");
  CHECK(summary["config_hash"] == config_hash(resolve_config(user)));

  const auto second = run_config(user, log);
  CHECK(second[0].directory == first[0].directory);
  CHECK(slurp(csv) == bytes);
  fs::remove_all(out);
}

TEST_CASE("bounds and return statistics headers") {
  const auto out = scratch("headers");
  std::ostringstream log;
  const json bounds = {{"experiment", "bounds"}, {"family", {{"family", "two_vertex"}}}, {"T", 10}, {"out", out.string()}};
  const auto b = run_config(bounds, log);
  REQUIRE(b[0].exit_code == 0);
  CHECK(csv_header(b[0].directory / "bounds.csv") == "t,exact,first_bound,argmin_s,second_bound,margin");
  CHECK(csv_header(b[0].directory / "transience.csv") == "t,sum_inv_vol,sum_mixing_term");

  const json evolve = {{"experiment", "evolve"},
                       {"family", {{"family", "growing_path"}}},
                       {"T", 10},
                       {"return_k_max", 3},
                       {"out", out.string()}};
  const auto e = run_config(evolve, log);
  REQUIRE(e[0].exit_code == 0);
  CHECK(csv_header(e[0].directory / "return_stats.csv") == "k,E_N0,E_N0_sq,pz_ratio,E_N0_se,exact");
  CHECK(csv_header(e[0].directory / "distribution.csv").rfind("t,y_id,prob", 0) == 0);
  fs::remove_all(out);
}

TEST_CASE("step cap exhaustion keeps partial results") {
  const auto out = scratch("budget");
  std::ostringstream log;
  const json user = {{"experiment", "merging"},
                     {"N", 8},
                     {"t_max", 500},
                     {"budget", {{"step_cap", 50}}},
                     {"out", out.string()}};
  const auto r = run_config(user, log);
  REQUIRE(r.size() == 1);
  CHECK(r[0].exit_code == 2);
  const auto csv = r[0].directory / "merging.csv";
  REQUIRE(fs::exists(csv));
  CHECK(csv_header(csv) == "t,tv,relsup");
  const auto summary = json::parse(slurp(r[0].directory / "summary.json"));
  CHECK(summary["status"] == "budget_exhausted");
  fs::remove_all(out);
}

TEST_CASE("resolution errors become exit code 1") {
  std::ostringstream log;
  const auto r = run_config(json{{"experiment", "merging"}, {"N", -3}}, log);
  REQUIRE(r.size() == 1);
  CHECK(r[0].exit_code == 1);
}
