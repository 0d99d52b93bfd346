#include <doctest.h>

#include <algorithm>
#include <sstream>
#include <string>

#include "odfl/commands.hpp"
#include "odfl/domain.hpp"
#include "odfl/objectives.hpp"
#include "odfl/simulator.hpp"
#include "support/files.hpp"
#include "support/fixtures.hpp"

using namespace odfl;
using namespace odfl::cli;
using odfl::testing::fixture_path;
using odfl::testing::scratch_dir;
using odfl::testing::slurp;
using odfl::testing::tree;
using odfl::testing::write_file;

namespace {

int line_count(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

/// A 20-user world shared by the simulate and compare cases.
const fs::path& small_world() {
  static const fs::path dir = [] {
    const auto root = scratch_dir("cli_world");
    write_file(root / "world.cfg.json",
               R"({"user_count": 20, "records_min": 200, "records_max": 300, "seed": 11})");
    std::ostringstream err;
    GenerateArgs a;
    a.config = root / "world.cfg.json";
    a.out = root / "world";
    REQUIRE(cmd_generate(a, err) == kExitOk);
    return root / "world";
  }();
  return dir;
}

fs::path sim_config(const fs::path& dir, const std::string& name, const std::string& strategy,
                    const std::string& extra = "") {
  const auto path = dir / (name + ".json");
  write_file(path, R"({"name": ")" + name + R"(", "strategy": ")" + strategy +
                       R"(", "rounds_max": 4, "hidden_layers": [8], "local_epochs": 1,
                          "centralized_epochs": 2, "ga": {"generations": 10},
                          "client_schedule": [[2, 3], [3, 5]])" +
                       extra + "}");
  return path;
}

}  // namespace

TEST_CASE("generate writes one dataset per user and repeats exactly") {
  const auto root = scratch_dir("cli_generate");
  std::ostringstream err;
  GenerateArgs a;
  a.out = root / "a";
  REQUIRE(cmd_generate(a, err) == kExitOk);
  int clients = 0;
  for (const auto& e : fs::directory_iterator(root / "a" / "clients")) clients += e.is_regular_file();
  CHECK(clients == 100);
  CHECK(fs::exists(root / "a" / "traces.csv"));
  CHECK(fs::exists(root / "a" / "world.json"));
  const auto manifest = read_json_file(root / "a" / "manifest.json");
  CHECK(manifest.at("command") == "generate");
  for (const auto& out : manifest.at("outputs")) {
    CHECK(fs::exists(root / "a" / out.get<std::string>()));
  }
  GenerateArgs b = a;
  b.out = root / "b";
  REQUIRE(cmd_generate(b, err) == kExitOk);
  CHECK(tree(root / "a") == tree(root / "b"));
  REQUIRE(cmd_generate(a, err) == kExitOk);
  CHECK(tree(root / "a") == tree(root / "b"));
  fs::remove_all(root);
}

TEST_CASE("generate rejects a bad config naming the field") {
  const auto root = scratch_dir("cli_generate_bad");
  write_file(root / "w.json", R"({"records_min": 900, "records_max": 300})");
  std::ostringstream err;
  GenerateArgs a;
  a.config = root / "w.json";
  a.out = root / "out";
  CHECK(cmd_generate(a, err) == kExitUsage);
  CHECK(err.str().find("records_min") != std::string::npos);
  write_file(root / "w.json", "{not json");
  CHECK(cmd_generate(a, err) == kExitUsage);
  fs::remove_all(root);
}

TEST_CASE("optimize on the fixture stays inside the true front") {
  const auto root = scratch_dir("cli_optimize");
  std::ostringstream err;
  OptimizeArgs a;
  a.instance = fixture_path("small10.json");
  a.out = root / "opt";
  REQUIRE(cmd_optimize(a, err) == kExitOk);
  const auto p = load_instance(a.instance);
  const auto frozen = odfl::testing::load_front(fixture_path("small10.front.json"));
  const auto archive = read_json_file(root / "opt" / "archive.json");
  REQUIRE(archive.is_array());
  REQUIRE_FALSE(archive.empty());
  for (const auto& e : archive) {
    const auto genes = e.at("genes").get<std::string>();
    CHECK(is_feasible(p, SelectionVector::from_string(genes)));
    CHECK(std::any_of(frozen.begin(), frozen.end(),
                      [&](const auto& f) { return f.genes == genes; }));
  }
  CHECK(fs::exists(root / "opt" / "recommendation.json"));

  write_file(root / "ga0.json", R"({"generations": 0})");
  a.config = root / "ga0.json";
  a.out = root / "opt0";
  CHECK(cmd_optimize(a, err) == kExitOk);

  a.instance = root / "missing.json";
  CHECK(cmd_optimize(a, err) == kExitUsage);
  fs::remove_all(root);
}

TEST_CASE("infeasible instances exit 3 and name the family") {
  const auto root = scratch_dir("cli_infeasible");
  auto p = load_instance(fixture_path("small10.json"));
  for (auto& c : p.clients) c.availability_secs = 10.0;
  p.thresholds.min_selected = 2;
  save_instance(p, root / "p.json");
  std::ostringstream err;
  OptimizeArgs a;
  a.instance = root / "p.json";
  a.out = root / "opt";
  CHECK(cmd_optimize(a, err) == kExitInfeasible);
  CHECK(err.str().find("availability") != std::string::npos);
  OracleArgs o;
  o.instance = root / "p.json";
  o.out = root / "orc";
  CHECK(cmd_oracle(o, err) == kExitInfeasible);
  fs::remove_all(root);
}

TEST_CASE("oracle command writes the committed front for any worker count") {
  const auto root = scratch_dir("cli_oracle");
  std::ostringstream err;
  OracleArgs a;
  a.instance = fixture_path("small10_08.json");
  a.out = root / "w1";
  REQUIRE(cmd_oracle(a, err) == kExitOk);
  a.workers = 4;
  a.out = root / "w4";
  REQUIRE(cmd_oracle(a, err) == kExitOk);
  CHECK(tree(root / "w1") == tree(root / "w4"));
  const auto front = read_json_file(root / "w1" / "front.json");
  CHECK(front.at("count") ==
        odfl::testing::load_front(fixture_path("small10_08.front.json")).size());
  CHECK(front.at("hypervolume").get<double>() > 0.0);

  auto big = load_instance(fixture_path("small10.json"));
  while (big.clients.size() <= 20) {
    auto c = big.clients[0];
    c.id = static_cast<int>(big.clients.size());
    big.clients.push_back(c);
    big.utilizations.push_back(big.utilizations[0]);
  }
  save_instance(big, root / "big.json");
  a.instance = root / "big.json";
  CHECK(cmd_oracle(a, err) == kExitUsage);
  fs::remove_all(root);
}

TEST_CASE("simulate single run and batch") {
  const auto root = scratch_dir("cli_simulate");
  std::ostringstream err;
  SimulateArgs a;
  a.world = small_world();
  a.config = sim_config(root, "ga", "OnDemandGA");
  a.out = root / "one";
  REQUIRE(cmd_simulate(a, err) == kExitOk);
  const auto csv = slurp(root / "one" / "rounds.csv");
  CHECK(line_count(csv) >= 2);
  CHECK(line_count(csv) <= 1 + 4);
  CHECK(read_json_file(root / "one" / "rounds.json").at("rounds").size() ==
        static_cast<std::size_t>(line_count(csv) - 1));

  a.seeds = 5;
  a.out = root / "batch";
  REQUIRE(cmd_simulate(a, err) == kExitOk);
  int reports = 0;
  for (const auto& e : fs::directory_iterator(root / "batch")) {
    if (e.is_directory() && fs::exists(e.path() / "rounds.csv")) ++reports;
  }
  CHECK(reports == 5);
  const auto summary = slurp(root / "batch" / "summary.csv");
  CHECK(line_count(summary) == 1 + 5 + 1);
  CHECK(summary.find("\nmean,") != std::string::npos);

  a.jobs = 3;
  a.workers = 2;
  a.out = root / "batch_parallel";
  REQUIRE(cmd_simulate(a, err) == kExitOk);
  CHECK(tree(root / "batch", true) == tree(root / "batch_parallel", true));
  fs::remove_all(root);
}

TEST_CASE("simulate rejects bad configs") {
  const auto root = scratch_dir("cli_simulate_bad");
  std::ostringstream err;
  SimulateArgs a;
  a.world = small_world();
  a.out = root / "out";
  a.config = sim_config(root, "bad", "Greedy");
  CHECK(cmd_simulate(a, err) == kExitUsage);
  CHECK(err.str().find("strategy") != std::string::npos);
  a.config = sim_config(root, "other", "OnDemandGA", R"(, "world_seed": 12)");
  CHECK(cmd_simulate(a, err) == kExitUsage);
  a.config = sim_config(root, "same", "OnDemandGA", R"(, "world_seed": 11)");
  CHECK(cmd_simulate(a, err) == kExitOk);
  a.world = root / "nowhere";
  CHECK(cmd_simulate(a, err) == kExitUsage);
  fs::remove_all(root);
}

TEST_CASE("compare lines strategies up by name") {
  const auto root = scratch_dir("cli_compare");
  std::ostringstream err;
  CompareArgs a;
  a.world = small_world();
  a.configs = {sim_config(root, "on-demand GA", "OnDemandGA"),
               sim_config(root, "plain vanilla", "VanillaRandom")};
  a.seeds = 2;
  a.out = root / "cmp";
  REQUIRE(cmd_compare(a, err) == kExitOk);
  const auto summary = slurp(root / "cmp" / "summary.csv");
  CHECK(summary.find("on-demand GA,OnDemandGA,") != std::string::npos);
  CHECK(summary.find("plain vanilla,VanillaRandom,") != std::string::npos);
  CHECK(fs::exists(root / "cmp" / "rounds.csv"));

  a.jobs = 2;
  a.out = root / "cmp_parallel";
  REQUIRE(cmd_compare(a, err) == kExitOk);
  CHECK(tree(root / "cmp") == tree(root / "cmp_parallel"));

  // A config against itself: identical metric columns.
  a.configs = {a.configs[0], a.configs[0]};
  a.out = root / "self";
  REQUIRE(cmd_compare(a, err) == kExitOk);
  std::istringstream rows(slurp(root / "self" / "summary.csv"));
  std::string header, first, second;
  std::getline(rows, header);
  std::getline(rows, first);
  std::getline(rows, second);
  CHECK_FALSE(first.empty());
  CHECK(first == second);

  a.configs = {a.configs[0]};
  CHECK(cmd_compare(a, err) == kExitUsage);
  a.configs = {sim_config(root, "x", "OnDemandGA", R"(, "world_seed": 5)"),
               sim_config(root, "y", "VanillaRandom")};
  CHECK(cmd_compare(a, err) == kExitUsage);
  fs::remove_all(root);
}

TEST_CASE("binary exit codes") {
  const auto root = scratch_dir("cli_binary");
  const auto log = root / "log.txt";
  using odfl::testing::run_cli;
  CHECK(run_cli("--version", log) == 0);
  CHECK(run_cli("--help", log) == 0);
  CHECK(run_cli("", log) == 2);
  CHECK(run_cli("frobnicate", log) == 2);
  CHECK(run_cli("optimize", log) == 2);
  CHECK(run_cli("optimize " + (root / "missing.json").string(), log) == 2);
  CHECK(run_cli("--out " + (root / "orc").string() + " oracle --workers 2 " +
                    fixture_path("small10.json").string(),
                log) == 0);
  CHECK(fs::exists(root / "orc" / "front.json"));
  CHECK(run_cli("--seed 4 --out " + (root / "opt").string() + " optimize " +
                    fixture_path("small10.json").string(),
                log) == 0);
  CHECK(read_json_file(root / "opt" / "manifest.json").at("seeds")[0] == 4);
  fs::remove_all(root);
}
