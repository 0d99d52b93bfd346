#include "odfl/commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "odfl/domain.hpp"
#include "odfl/ga.hpp"
#include "odfl/mobility.hpp"
#include "odfl/oracle.hpp"
#include "odfl/simulator.hpp"

namespace odfl::cli {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

// UTC timestamp; SOURCE_DATE_EPOCH pins it for reproducible manifests.
std::string timestamp_now() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  if (const char* pinned = std::getenv("SOURCE_DATE_EPOCH")) {
    t = static_cast<std::time_t>(std::strtoll(pinned, nullptr, 10));
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const std::string& text, const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
}

json load_config_json(const std::optional<fs::path>& path) {
  if (!path) return json::object();
  try {
    return read_json_file(*path);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

template <class T>
T parse_config(const json& j, const std::string& what) {
  try {
    T cfg = j.get<T>();
    validate(cfg);
    return cfg;
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(what + ": " + e.what());
  }
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads.  Each task writes its
// own slot, so results never depend on scheduling.
template <class Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex mu;
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < jobs; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < n; i += jobs) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(mu);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

template <class Fn>
int guarded(std::ostream& err, Fn body) {
  try {
    return body();
  } catch (const InfeasibleInstance& e) {
    err << "error: infeasible instance (" << e.family() << "): " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

json manifest(const std::string& command, json configs,
              const std::vector<std::uint64_t>& seeds,
              const std::string& started, const std::vector<std::string>& outputs) {
  return json{{"tool", "odfl"},
              {"version", kToolVersion},
              {"command", command},
              {"config", std::move(configs)},
              {"seeds", seeds},
              {"started_at", started},
              {"finished_at", timestamp_now()},
              {"outputs", outputs}};
}

struct RunSummary {
  std::optional<int> rounds_to_target;
  double discard_fraction = 0.0;
  double mean_available = 0.0;
  double final_accuracy = 0.0;
  double best_accuracy = 0.0;
  double mean_data_volume = 0.0;
  double mean_distinct_labels = 0.0;
  double target_accuracy = 0.0;
  int rounds = 0;
};

RunSummary summarize(const ExperimentResult& r) {
  RunSummary s;
  s.rounds = static_cast<int>(r.reports.size());
  s.rounds_to_target = rounds_to_target(r.reports, r.target_accuracy);
  s.discard_fraction = discard_fraction(r.reports);
  s.target_accuracy = r.target_accuracy;
  for (const auto& rep : r.reports) {
    s.mean_available += rep.available_clients;
    s.mean_data_volume += static_cast<double>(rep.data_volume);
    s.mean_distinct_labels += rep.distinct_labels;
    s.best_accuracy = std::max(s.best_accuracy, rep.test_accuracy);
  }
  if (s.rounds > 0) {
    s.mean_available /= s.rounds;
    s.mean_data_volume /= s.rounds;
    s.mean_distinct_labels /= s.rounds;
    s.final_accuracy = r.reports.back().test_accuracy;
  }
  return s;
}

constexpr const char* kSummaryColumns =
    "rounds,rounds_to_target,discard_fraction,mean_available,final_accuracy,"
    "best_accuracy,mean_data_volume,mean_distinct_labels,target_accuracy";

std::string summary_fields(const RunSummary& s) {
  std::ostringstream os;
  os << s.rounds << ','
     << (s.rounds_to_target ? std::to_string(*s.rounds_to_target) : std::string())
     << ',' << fmt(s.discard_fraction) << ',' << fmt(s.mean_available) << ','
     << fmt(s.final_accuracy) << ',' << fmt(s.best_accuracy) << ','
     << fmt(s.mean_data_volume) << ',' << fmt(s.mean_distinct_labels) << ','
     << fmt(s.target_accuracy);
  return os.str();
}

// Average over runs; rounds_to_target averages the runs that reached it.
RunSummary mean_summary(const std::vector<RunSummary>& runs) {
  RunSummary m;
  int reached = 0;
  double rtt = 0.0;
  for (const auto& s : runs) {
    m.rounds += s.rounds;
    m.discard_fraction += s.discard_fraction;
    m.mean_available += s.mean_available;
    m.final_accuracy += s.final_accuracy;
    m.best_accuracy += s.best_accuracy;
    m.mean_data_volume += s.mean_data_volume;
    m.mean_distinct_labels += s.mean_distinct_labels;
    m.target_accuracy += s.target_accuracy;
    if (s.rounds_to_target) {
      ++reached;
      rtt += *s.rounds_to_target;
    }
  }
  const auto n = static_cast<double>(runs.size());
  m.rounds = static_cast<int>(std::lround(m.rounds / n));
  m.discard_fraction /= n;
  m.mean_available /= n;
  m.final_accuracy /= n;
  m.best_accuracy /= n;
  m.mean_data_volume /= n;
  m.mean_distinct_labels /= n;
  m.target_accuracy /= n;
  if (reached > 0) m.rounds_to_target = static_cast<int>(std::lround(rtt / reached));
  return m;
}

std::shared_ptr<const Environment> load_world(const fs::path& dir, WorldConfig& cfg) {
  try {
    cfg = load_world_config(dir);
  } catch (const std::exception& e) {
    throw UsageError("world " + dir.string() + ": " + e.what());
  }
  return make_environment(cfg);
}

// Key of the fields that determine the centralized reference accuracy.
std::string central_key(const SimConfig& c) {
  json j{{"seed", c.seed},
         {"hidden", c.hidden_layers},
         {"epochs", c.centralized_epochs},
         {"lr", c.learning_rate},
         {"batch", c.batch_size}};
  return j.dump();
}

}  // namespace

int cmd_generate(const GenerateArgs& args, std::ostream& err) {
  return guarded(err, [&] {
    const auto started = timestamp_now();
    auto j = load_config_json(args.config);
    if (args.seed) j["seed"] = *args.seed;
    const auto cfg = parse_config<WorldConfig>(j, "world config");

    const auto world = generate_world(cfg);
    const auto traces = generate_traces(world);
    const auto data = build_datasets(world, traces);

    ensure_dir(args.out / "clients");
    std::vector<std::string> outputs{"traces.csv", "world.json"};
    write_traces_csv(traces, args.out / "traces.csv");
    for (const auto& ds : data.clients) {
      char name[32];
      std::snprintf(name, sizeof name, "client_%03d.json", ds.user_id);
      write_text(dataset_to_json(ds).dump() + "\n", args.out / "clients" / name);
      outputs.push_back(std::string("clients/") + name);
    }
    write_json_file(world_summary_json(world, data), args.out / "world.json");
    write_json_file(manifest("generate", json{{"world", cfg}}, {cfg.seed}, started, outputs),
                    args.out / "manifest.json");
    return kExitOk;
  });
}

int cmd_optimize(const OptimizeArgs& args, std::ostream& err) {
  return guarded(err, [&] {
    const auto started = timestamp_now();
    ProblemInstance instance;
    try {
      instance = load_instance(args.instance);
    } catch (const std::exception& e) {
      throw UsageError("instance: " + std::string(e.what()));
    }
    if (const auto problems = validate_instance(instance); !problems.empty()) {
      std::string msg = "invalid instance:";
      for (const auto& p : problems) msg += "\n  " + p;
      throw UsageError(msg);
    }
    auto j = load_config_json(args.config);
    if (args.seed) j["seed"] = *args.seed;
    const auto cfg = parse_config<GaConfig>(j, "ga config");

    const auto result = solve(instance, cfg);
    ensure_dir(args.out);
    write_json_file(archive_to_json(result.archive), args.out / "archive.json");
    auto rec = entry_to_json(result.recommendation, result.recommendation_objectives);
    std::vector<int> ids;
    for (std::size_t i = 0; i < result.recommendation.size(); ++i) {
      if (result.recommendation[i]) ids.push_back(instance.clients[i].id);
    }
    rec["selected_ids"] = ids;
    rec["best_scalar_history"] = result.best_scalar_history;
    write_json_file(rec, args.out / "recommendation.json");
    write_json_file(manifest("optimize", json{{"ga", cfg}}, {cfg.seed}, started,
                             {"archive.json", "recommendation.json"}),
                    args.out / "manifest.json");
    return kExitOk;
  });
}

int cmd_oracle(const OracleArgs& args, std::ostream& err) {
  return guarded(err, [&] {
    const auto started = timestamp_now();
    ProblemInstance instance;
    try {
      instance = load_instance(args.instance);
    } catch (const std::exception& e) {
      throw UsageError("instance: " + std::string(e.what()));
    }
    if (const auto problems = validate_instance(instance); !problems.empty()) {
      throw UsageError("invalid instance: " + problems.front());
    }
    if (instance.size() > kMaxOracleClients) {
      throw UsageError("oracle supports at most " + std::to_string(kMaxOracleClients) +
                       " clients, instance has " + std::to_string(instance.size()));
    }
    const auto front = enumerate_pareto(instance, std::max(1u, args.workers));
    if (front.empty()) {
      const auto family = first_unsatisfiable_family(instance);
      throw InfeasibleInstance(family, "no selection satisfies the " + family + " constraints");
    }
    const auto hv = hypervolume(objective_points(front));
    json entries = json::array();
    for (const auto& e : front) entries.push_back(entry_to_json(e.selection, e.objectives));
    ensure_dir(args.out);
    write_json_file(json{{"count", front.size()},
                         {"hypervolume", hv.value},
                         {"hypervolume_exact", hv.exact},
                         {"entries", std::move(entries)}},
                    args.out / "front.json");
    write_json_file(manifest("oracle", json::object(), {}, started, {"front.json"}),
                    args.out / "manifest.json");
    return kExitOk;
  });
}

int cmd_simulate(const SimulateArgs& args, std::ostream& err) {
  return guarded(err, [&] {
    const auto started = timestamp_now();
    if (args.seeds < 1) throw UsageError("--seeds must be >= 1");
    auto j = load_config_json(args.config);
    if (args.seed) j["seed"] = *args.seed;
    if (args.workers) j["workers"] = *args.workers;
    const auto base = parse_config<SimConfig>(j, "sim config");
    WorldConfig wcfg;
    const auto env = load_world(args.world, wcfg);
    if (j.contains("world_seed") && j["world_seed"].get<std::uint64_t>() != wcfg.seed) {
      throw UsageError("sim config refers to world seed " + j["world_seed"].dump() +
                       " but the world was generated with seed " + std::to_string(wcfg.seed));
    }

    const auto n = static_cast<std::size_t>(args.seeds);
    std::vector<std::uint64_t> seeds(n);
    std::vector<ExperimentResult> results(n);
    for (std::size_t i = 0; i < n; ++i) seeds[i] = base.seed + i;
    parallel_for(n, args.jobs, [&](std::size_t i) {
      SimConfig cfg = base;
      cfg.seed = seeds[i];
      results[i] = run_experiment(env, cfg);
    });

    ensure_dir(args.out);
    std::vector<std::string> outputs;
    auto write_run = [&](const ExperimentResult& r, const fs::path& rel) {
      ensure_dir(args.out / rel);
      json reports = json::array();
      for (const auto& rep : r.reports) reports.push_back(report_to_json(rep));
      write_text(reports_to_csv(r.reports), args.out / rel / "rounds.csv");
      write_json_file(json{{"target_accuracy", r.target_accuracy},
                           {"initial_accuracy", r.initial_accuracy},
                           {"rounds", std::move(reports)}},
                      args.out / rel / "rounds.json");
      outputs.push_back((rel / "rounds.csv").generic_string());
      outputs.push_back((rel / "rounds.json").generic_string());
    };
    if (n == 1) {
      write_run(results[0], ".");
      outputs = {"rounds.csv", "rounds.json"};
    } else {
      std::ostringstream summary;
      summary << "seed," << kSummaryColumns << '\n';
      std::vector<RunSummary> sums;
      for (std::size_t i = 0; i < n; ++i) {
        write_run(results[i], "seed_" + std::to_string(seeds[i]));
        sums.push_back(summarize(results[i]));
        summary << seeds[i] << ',' << summary_fields(sums.back()) << '\n';
      }
      summary << "mean," << summary_fields(mean_summary(sums)) << '\n';
      write_text(summary.str(), args.out / "summary.csv");
      outputs.push_back("summary.csv");
    }
    write_json_file(manifest("simulate", json{{"world", wcfg}, {"sim", base}}, seeds,
                             started, outputs),
                    args.out / "manifest.json");
    return kExitOk;
  });
}

int cmd_compare(const CompareArgs& args, std::ostream& err) {
  return guarded(err, [&] {
    const auto started = timestamp_now();
    if (args.configs.size() < 2) throw UsageError("compare needs at least two configs");
    if (args.seeds < 1) throw UsageError("--seeds must be >= 1");
    WorldConfig wcfg;
    const auto env = load_world(args.world, wcfg);

    std::vector<SimConfig> configs;
    std::vector<std::string> names;
    for (const auto& path : args.configs) {
      auto j = load_config_json(path);
      if (args.seed) j["seed"] = *args.seed;
      if (j.contains("world_seed") && j["world_seed"].get<std::uint64_t>() != wcfg.seed) {
        throw UsageError(path.string() + " refers to world seed " + j["world_seed"].dump() +
                         ", compared world has seed " + std::to_string(wcfg.seed));
      }
      configs.push_back(parse_config<SimConfig>(j, path.string()));
      names.push_back(configs.back().name.empty() ? path.stem().string()
                                                  : configs.back().name);
    }
    const std::uint64_t base_seed = configs.front().seed;

    const auto seeds = static_cast<std::size_t>(args.seeds);
    const std::size_t runs = seeds * configs.size();
    auto cfg_for = [&](std::size_t run) {
      SimConfig c = configs[run % configs.size()];
      c.seed = base_seed + run / configs.size();
      return c;
    };

    // Every strategy on a seed shares the same centralized reference.
    std::map<std::string, double> targets;
    for (std::size_t run = 0; run < runs; ++run) targets[central_key(cfg_for(run))] = 0.0;
    std::vector<std::string> keys;
    for (const auto& [k, v] : targets) keys.push_back(k);
    std::vector<double> central(keys.size());
    parallel_for(keys.size(), args.jobs, [&](std::size_t i) {
      for (std::size_t run = 0; run < runs; ++run) {
        const auto c = cfg_for(run);
        if (central_key(c) == keys[i]) {
          central[i] = centralized_train(*env, c).test_accuracy;
          return;
        }
      }
    });
    for (std::size_t i = 0; i < keys.size(); ++i) targets[keys[i]] = central[i];

    std::vector<ExperimentResult> results(runs);
    parallel_for(runs, args.jobs, [&](std::size_t run) {
      auto c = cfg_for(run);
      if (c.target_accuracy <= 0.0) {
        c.target_accuracy = c.target_centralized_ratio * targets.at(central_key(c));
      }
      results[run] = run_experiment(env, c);
    });

    ensure_dir(args.out);
    std::ostringstream summary;
    summary << "name,strategy," << kSummaryColumns << '\n';
    for (std::size_t k = 0; k < configs.size(); ++k) {
      std::vector<RunSummary> sums;
      for (std::size_t s = 0; s < seeds; ++s) sums.push_back(summarize(results[s * configs.size() + k]));
      summary << names[k] << ',' << to_string(configs[k].strategy) << ','
              << summary_fields(mean_summary(sums)) << '\n';
    }
    write_text(summary.str(), args.out / "summary.csv");

    std::ostringstream merged;
    bool header = true;
    for (std::size_t run = 0; run < runs; ++run) {
      const auto csv = reports_to_csv(results[run].reports);
      std::istringstream lines(csv);
      std::string line;
      std::getline(lines, line);
      if (header) {
        merged << "name,seed," << line << '\n';
        header = false;
      }
      const auto prefix = names[run % configs.size()] + ',' +
                          std::to_string(base_seed + run / configs.size()) + ',';
      while (std::getline(lines, line)) merged << prefix << line << '\n';
    }
    write_text(merged.str(), args.out / "rounds.csv");

    json sims = json::array();
    for (const auto& c : configs) sims.push_back(c);
    std::vector<std::uint64_t> seed_list;
    for (std::size_t s = 0; s < seeds; ++s) seed_list.push_back(base_seed + s);
    write_json_file(manifest("compare", json{{"world", wcfg}, {"sims", std::move(sims)}},
                             seed_list, started, {"summary.csv", "rounds.csv"}),
                    args.out / "manifest.json");
    return kExitOk;
  });
}

}  // namespace odfl::cli
