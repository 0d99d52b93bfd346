#include "odfl/simulator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace odfl {

using nlohmann::json;

namespace {

enum StreamTag : std::uint64_t {
  kDeviceStream = 101,
  kModelStream,
  kStaticPoolStream,
  kVanillaStream,
  kDropoutStream,
  kTrainStream,
  kGaStream,
  kCentralStream,
};

constexpr double kSecondsPerDay = 86400.0;

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

TrainConfig train_config(const SimConfig& cfg) {
  return {cfg.local_epochs, cfg.learning_rate, cfg.batch_size};
}

std::vector<int> model_layers(const Environment& env, const SimConfig& cfg) {
  std::vector<int> sizes{feature_width(env.world.config)};
  sizes.insert(sizes.end(), cfg.hidden_layers.begin(), cfg.hidden_layers.end());
  sizes.push_back(env.world.config.place_count);
  return sizes;
}

UtilizationProfile utilization_for(std::size_t train_records) {
  // Service consumption grows with the local dataset.
  const double n = static_cast<double>(train_records);
  return {.cpu = 0.5 + n / 1200.0,
          .memory = 256.0 + 0.8 * n,
          .battery = 5.0 + 10.0 * n / 1200.0,
          .disk = 100.0 + 2.0 * n};
}

DeviceProfile make_device(std::uint64_t seed, int client) {
  Rng rng(derive_seed(seed, {kDeviceStream, static_cast<std::uint64_t>(client)}));
  DeviceProfile d;
  d.weak = rng.bernoulli(kWeakDeviceFraction);
  if (d.weak) {
    d.cpu_capacity = rng.uniform(0.5, 1.6);
    d.memory_capacity = rng.uniform(256.0, 1280.0);
    d.disk_capacity = rng.uniform(1000.0, 4000.0);
  } else {
    d.cpu_capacity = rng.uniform(2.0, 8.0);
    d.memory_capacity = rng.uniform(2048.0, 8192.0);
    d.disk_capacity = rng.uniform(16000.0, 64000.0);
  }
  d.battery_base = rng.uniform(20.0, 100.0);
  d.battery_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return d;
}

bool can_finish_round(const ClientProfile& c, const UtilizationProfile& u,
                      double round_time) {
  return u.cpu <= c.cpu_capacity && u.memory <= c.memory_capacity &&
         u.disk <= c.disk_capacity && u.battery <= c.battery_level &&
         c.availability_secs >= round_time;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::OnDemandGA: return "OnDemandGA";
    case Strategy::VanillaRandom: return "VanillaRandom";
    case Strategy::StaticPreconfigured: return "StaticPreconfigured";
  }
  return "Unknown";
}

std::optional<Strategy> parse_strategy(std::string_view name) {
  for (auto s : {Strategy::OnDemandGA, Strategy::VanillaRandom,
                 Strategy::StaticPreconfigured}) {
    if (name == to_string(s)) return s;
  }
  return std::nullopt;
}

void to_json(json& j, const CardinalityBounds& b) {
  j = json::array({b.min_selected, b.max_selected});
}

void from_json(const json& j, CardinalityBounds& b) {
  if (!j.is_array() || j.size() != 2) {
    throw std::invalid_argument("client_schedule entries must be [min, max]");
  }
  j.at(0).get_to(b.min_selected);
  j.at(1).get_to(b.max_selected);
}

void to_json(json& j, const SimConfig& c) {
  j = json{{"name", c.name},
           {"strategy", std::string(to_string(c.strategy))},
           {"rounds_max", c.rounds_max},
           {"stop_at_target", c.stop_at_target},
           {"min_report_fraction", c.min_report_fraction},
           {"round_time_T_secs", c.round_time_T_secs},
           {"target_accuracy", c.target_accuracy},
           {"target_centralized_ratio", c.target_centralized_ratio},
           {"client_schedule", c.client_schedule},
           {"p_higher_priority_invite", c.p_higher_priority_invite},
           {"vanilla_fraction_C", c.vanilla_fraction_C},
           {"static_preconfigured_fraction", c.static_preconfigured_fraction},
           {"local_epochs", c.local_epochs},
           {"learning_rate", c.learning_rate},
           {"batch_size", c.batch_size},
           {"hidden_layers", c.hidden_layers},
           {"centralized_epochs", c.centralized_epochs},
           {"onboarding_rounds", c.onboarding_rounds},
           {"movement_threshold_quantile", c.movement_threshold_quantile},
           {"high_movement_fraction", c.high_movement_fraction},
           {"weights", c.weights},
           {"ga", c.ga},
           {"round_interval_secs", c.round_interval_secs},
           {"start_offset_secs", c.start_offset_secs},
           {"workers", c.workers},
           {"seed", c.seed}};
}

void from_json(const json& j, SimConfig& c) {
  const SimConfig d;
  c.name = j.value("name", d.name);
  if (j.contains("strategy")) {
    const auto name = j.at("strategy").get<std::string>();
    const auto s = parse_strategy(name);
    if (!s) throw std::invalid_argument("strategy: unknown value '" + name + "'");
    c.strategy = *s;
  }
  c.rounds_max = j.value("rounds_max", d.rounds_max);
  c.stop_at_target = j.value("stop_at_target", d.stop_at_target);
  c.min_report_fraction = j.value("min_report_fraction", d.min_report_fraction);
  c.round_time_T_secs = j.value("round_time_T_secs", d.round_time_T_secs);
  c.target_accuracy = j.value("target_accuracy", d.target_accuracy);
  c.target_centralized_ratio =
      j.value("target_centralized_ratio", d.target_centralized_ratio);
  c.client_schedule = j.value("client_schedule", d.client_schedule);
  c.p_higher_priority_invite =
      j.value("p_higher_priority_invite", d.p_higher_priority_invite);
  c.vanilla_fraction_C = j.value("vanilla_fraction_C", d.vanilla_fraction_C);
  c.static_preconfigured_fraction =
      j.value("static_preconfigured_fraction", d.static_preconfigured_fraction);
  c.local_epochs = j.value("local_epochs", d.local_epochs);
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.hidden_layers = j.value("hidden_layers", d.hidden_layers);
  c.centralized_epochs = j.value("centralized_epochs", d.centralized_epochs);
  c.onboarding_rounds = j.value("onboarding_rounds", d.onboarding_rounds);
  c.movement_threshold_quantile =
      j.value("movement_threshold_quantile", d.movement_threshold_quantile);
  c.high_movement_fraction =
      j.value("high_movement_fraction", d.high_movement_fraction);
  c.weights = j.value("weights", d.weights);
  c.ga = j.value("ga", d.ga);
  c.round_interval_secs = j.value("round_interval_secs", d.round_interval_secs);
  c.start_offset_secs = j.value("start_offset_secs", d.start_offset_secs);
  c.workers = j.value("workers", d.workers);
  c.seed = j.value("seed", d.seed);
}

void validate(const SimConfig& c) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  if (c.rounds_max < 1) fail("rounds_max must be >= 1");
  if (!(c.min_report_fraction > 0.0 && c.min_report_fraction <= 1.0)) {
    fail("min_report_fraction must be in (0, 1]");
  }
  if (!(c.round_time_T_secs >= 0.0)) fail("round_time_T_secs must be >= 0");
  if (!(c.p_higher_priority_invite >= 0.0 && c.p_higher_priority_invite <= 1.0)) {
    fail("p_higher_priority_invite must be in [0, 1]");
  }
  if (!(c.vanilla_fraction_C > 0.0 && c.vanilla_fraction_C <= 1.0)) {
    fail("vanilla_fraction_C must be in (0, 1]");
  }
  if (!(c.static_preconfigured_fraction > 0.0 &&
        c.static_preconfigured_fraction <= 1.0)) {
    fail("static_preconfigured_fraction must be in (0, 1]");
  }
  if (c.local_epochs < 0) fail("local_epochs must be >= 0");
  if (!(c.learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (c.batch_size < 1) fail("batch_size must be >= 1");
  for (int h : c.hidden_layers) {
    if (h < 1) fail("hidden_layers entries must be >= 1");
  }
  if (c.centralized_epochs < 0) fail("centralized_epochs must be >= 0");
  if (c.onboarding_rounds < 1) fail("onboarding_rounds must be >= 1");
  if (!(c.movement_threshold_quantile >= 0.0 && c.movement_threshold_quantile <= 1.0)) {
    fail("movement_threshold_quantile must be in [0, 1]");
  }
  if (!(c.high_movement_fraction >= 0.0 && c.high_movement_fraction <= 1.0)) {
    fail("high_movement_fraction must be in [0, 1]");
  }
  if (!(std::abs(c.weights.sum() - 1.0) <= kWeightSumTolerance)) {
    fail("weights must sum to 1");
  }
  if (c.workers < 1) fail("workers must be >= 1");
  CardinalityBounds prev{0, 0};
  for (const auto& b : c.client_schedule) {
    if (b.min_selected < 0 || b.min_selected > b.max_selected) {
      fail("client_schedule entries need 0 <= min <= max");
    }
    if (b.min_selected < prev.min_selected || b.max_selected < prev.max_selected) {
      fail("client_schedule must be non-decreasing");
    }
    prev = b;
  }
  validate(c.ga);
}

CardinalityBounds schedule_for_round(const SimConfig& cfg, int round) {
  if (!cfg.client_schedule.empty()) {
    const auto idx = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::max(round, 1) - 1), 0,
        cfg.client_schedule.size() - 1);
    return cfg.client_schedule[idx];
  }
  constexpr int kRampRounds = 15;
  const double t =
      std::clamp(static_cast<double>(round - 1) / (kRampRounds - 1), 0.0, 1.0);
  return {static_cast<int>(std::lround(5.0 + 10.0 * t)),
          static_cast<int>(std::lround(5.0 + 15.0 * t))};
}

int required_reports(double fraction, int deployed) {
  return static_cast<int>(std::ceil(fraction * deployed - 1e-9));
}

// ---------------------------------------------------------------------------
// Environment and state

std::shared_ptr<const Environment> make_environment(const WorldConfig& cfg) {
  auto env = std::make_shared<Environment>();
  env->world = generate_world(cfg);
  const auto traces = generate_traces(env->world);
  env->data = build_datasets(env->world, traces);
  env->timelines.resize(cfg.user_count);
  for (const auto& r : traces) env->timelines[r.user_id].push_back(r);

  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  for (const auto& ds : env->data.clients) {
    train_rows += ds.train.size();
    test_rows += ds.test.size();
  }
  const int width = feature_width(cfg);
  env->pooled_train_x.resize(static_cast<Eigen::Index>(train_rows), width);
  env->pooled_test_x.resize(static_cast<Eigen::Index>(test_rows), width);
  Eigen::Index tr = 0;
  Eigen::Index te = 0;
  for (const auto& ds : env->data.clients) {
    for (int i : ds.train) {
      env->pooled_train_x.row(tr++) = ds.features.row(i);
      env->pooled_train_y.push_back(ds.labels[i]);
    }
    for (int i : ds.test) {
      env->pooled_test_x.row(te++) = ds.features.row(i);
      env->pooled_test_y.push_back(ds.labels[i]);
    }
  }
  return env;
}

void refresh_clients(WorldState& state, double t) {
  const auto& env = *state.env;
  state.clock_secs = t;
  for (std::size_t u = 0; u < state.clients.size(); ++u) {
    const auto& line = env.timelines[u];
    auto& c = state.clients[u];
    const auto& dev = state.devices[u];
    auto it = std::upper_bound(
        line.begin(), line.end(), t,
        [](double v, const VisitRecord& r) { return v < r.start_secs; });
    const std::size_t cur = it == line.begin() ? 0 : static_cast<std::size_t>(it - line.begin()) - 1;
    c.area_id = line[cur].area_id;
    double leave = env.window_secs();
    for (std::size_t k = cur + 1; k < line.size(); ++k) {
      if (line[k].area_id != c.area_id && line[k].start_secs > t) {
        leave = line[k].start_secs;
        break;
      }
    }
    c.availability_secs = std::max(0.0, leave - t);
    const double cycle =
        0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * t / kSecondsPerDay +
                             dev.battery_phase);
    c.battery_level = std::clamp(dev.battery_base - kBatterySwing * cycle, 1.0, 100.0);
  }
}

WorldState init_state(std::shared_ptr<const Environment> env,
                      const SimConfig& cfg) {
  validate(cfg);
  WorldState s;
  s.env = env;
  const int k = env->user_count();
  for (int i = 0; i < k; ++i) {
    const auto dev = make_device(cfg.seed, i);
    ClientProfile c;
    c.id = i;
    c.cpu_capacity = dev.cpu_capacity;
    c.memory_capacity = dev.memory_capacity;
    c.disk_capacity = dev.disk_capacity;
    c.movements = env->data.summaries[i].movements;
    c.priority = 1;
    s.devices.push_back(dev);
    s.clients.push_back(c);
    s.utilizations.push_back(utilization_for(env->data.clients[i].train.size()));
  }

  std::vector<double> moves;
  for (const auto& c : s.clients) moves.push_back(c.movements);
  std::sort(moves.begin(), moves.end());
  s.movement_threshold = moves[static_cast<std::size_t>(
      std::floor(cfg.movement_threshold_quantile * (moves.size() - 1)))];

  Rng model_rng(derive_seed(cfg.seed, {kModelStream}));
  s.global_model = init_model(model_layers(*env, cfg), model_rng);
  s.accuracy = accuracy(s.global_model, env->pooled_test_x, env->pooled_test_y);

  s.containerized.assign(k, false);
  s.preconfigured.assign(k, false);
  std::vector<int> ids(k);
  std::iota(ids.begin(), ids.end(), 0);
  Rng pool_rng(derive_seed(cfg.seed, {kStaticPoolStream}));
  pool_rng.shuffle(ids);
  const int pool = std::max(
      1, static_cast<int>(std::lround(cfg.static_preconfigured_fraction * k)));
  for (int i = 0; i < pool; ++i) s.preconfigured[ids[i]] = true;

  refresh_clients(s, cfg.start_offset_secs);
  s.requests = orchestrator_monitor(s);
  return s;
}

// ---------------------------------------------------------------------------
// Orchestrators and selection

AreaRequestVector orchestrator_monitor(const WorldState& state) {
  const int areas = state.env->world.config.area_count;
  std::vector<double> sum(areas, 0.0);
  std::vector<int> count(areas, 0);
  double total = 0.0;
  for (const auto& c : state.clients) {
    sum[c.area_id] += c.movements;
    ++count[c.area_id];
    total += c.movements;
  }
  const double global_mean =
      state.clients.empty() ? 0.0 : total / static_cast<double>(state.clients.size());
  AreaRequestVector out;
  out.requested.assign(areas, 0);
  for (int a = 0; a < areas; ++a) {
    const double mean = count[a] ? sum[a] / count[a] : 0.0;
    out.requested[a] = mean > kRequestActivityRatio * global_mean ? 1 : 0;
  }
  return out;
}

ProblemInstance build_instance(const WorldState& state, const SimConfig& cfg,
                               int round) {
  ProblemInstance p;
  p.clients = state.clients;
  // Clients that already served give way to those that have not, so the
  // accuracy ranking cannot lock the same group in round after round.
  for (auto& c : p.clients) {
    c.priority = std::max(1, (c.priority + c.rounds_served) / (1 + c.rounds_served));
  }
  p.utilizations = state.utilizations;
  p.requests = state.requests;
  p.weights = cfg.weights;
  p.area_count = state.env->world.config.area_count;
  p.priority_levels = kMaxPriorityLevels;
  const auto bounds = schedule_for_round(cfg, round);
  const int n = static_cast<int>(p.clients.size());
  p.thresholds = {.min_round_time_secs = cfg.round_time_T_secs,
                  .movement_threshold = state.movement_threshold,
                  .high_movement_fraction = cfg.high_movement_fraction,
                  .min_selected = std::min(bounds.min_selected, n),
                  .max_selected = std::min(bounds.max_selected, n)};
  return p;
}

Selection select_clients(const WorldState& state, const SimConfig& cfg) {
  const int round = state.round_index + 1;
  const int k = static_cast<int>(state.clients.size());
  Selection out{SelectionVector(static_cast<std::size_t>(k)), std::nullopt, false};

  switch (cfg.strategy) {
    case Strategy::OnDemandGA: {
      const auto instance = build_instance(state, cfg, round);
      GaConfig ga = cfg.ga;
      ga.seed = derive_seed(cfg.seed ^ cfg.ga.seed,
                            {kGaStream, static_cast<std::uint64_t>(round)});
      try {
        auto result = solve(instance, ga);
        out.genes = result.recommendation;
        out.objectives = result.recommendation_objectives;
      } catch (const InfeasibleInstance&) {
        out.infeasible = true;
      }
      return out;
    }
    case Strategy::VanillaRandom:
    case Strategy::StaticPreconfigured: {
      std::vector<int> pool;
      for (int i = 0; i < k; ++i) {
        if (cfg.strategy == Strategy::VanillaRandom || state.preconfigured[i]) {
          pool.push_back(i);
        }
      }
      const int want = std::min<int>(
          static_cast<int>(std::ceil(cfg.vanilla_fraction_C * k - 1e-9)),
          static_cast<int>(pool.size()));
      Rng rng(derive_seed(cfg.seed, {kVanillaStream, static_cast<std::uint64_t>(round)}));
      rng.shuffle(pool);
      for (int i = 0; i < want; ++i) out.genes.set(pool[i], true);
      return out;
    }
  }
  return out;
}

std::vector<int> simulate_dropouts(const WorldState& state,
                                   const SelectionVector& selected,
                                   const SimConfig& cfg) {
  const int round = state.round_index + 1;
  std::vector<int> reporters;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    if (!selected[i]) continue;
    Rng rng(derive_seed(cfg.seed, {kDropoutStream, static_cast<std::uint64_t>(round), i}));
    // (a) invited to a higher-priority service.
    if (rng.bernoulli(cfg.p_higher_priority_invite)) continue;
    // (b) leaves the area before the round ends, (c) resources overwhelmed.
    if (!can_finish_round(state.clients[i], state.utilizations[i],
                          cfg.round_time_T_secs)) {
      continue;
    }
    reporters.push_back(static_cast<int>(i));
  }
  return reporters;
}

void update_priorities(WorldState& state, const ModelParams& model,
                       const SelectionVector& deployed) {
  const auto& env = *state.env;
  struct Scored {
    int id;
    double acc;
  };
  std::vector<Scored> idle;
  for (std::size_t i = 0; i < state.clients.size(); ++i) {
    if (deployed[i]) {
      ++state.clients[i].rounds_served;
      continue;
    }
    const auto& ds = env.data.clients[i];
    const auto x = gather_rows(ds.features, ds.test);
    const auto y = gather_labels(ds.labels, ds.test);
    idle.push_back({static_cast<int>(i), accuracy(model, x, y)});
  }
  std::sort(idle.begin(), idle.end(), [](const Scored& a, const Scored& b) {
    return a.acc < b.acc || (a.acc == b.acc && a.id < b.id);
  });
  const auto u = static_cast<double>(idle.size());
  const double t = kMaxPriorityLevels;
  for (std::size_t r = 0; r < idle.size();) {
    // Ties share the rank of the last member of their group.
    std::size_t end = r;
    while (end + 1 < idle.size() && idle[end + 1].acc == idle[r].acc) ++end;
    const int priority = std::clamp(
        static_cast<int>(std::ceil(static_cast<double>(end + 1) * t / u - 1e-9)), 1,
        kMaxPriorityLevels);
    for (std::size_t k = r; k <= end; ++k) state.clients[idle[k].id].priority = priority;
    r = end + 1;
  }
}

int capable_count(const WorldState& state, const SimConfig& cfg) {
  int n = 0;
  for (std::size_t i = 0; i < state.clients.size(); ++i) {
    n += can_finish_round(state.clients[i], state.utilizations[i],
                          cfg.round_time_T_secs);
  }
  return n;
}

// ---------------------------------------------------------------------------
// Rounds

namespace {

int available_at_round_start(const WorldState& s, const SimConfig& cfg) {
  switch (cfg.strategy) {
    case Strategy::OnDemandGA:
      return static_cast<int>(std::count(s.containerized.begin(), s.containerized.end(), true));
    case Strategy::StaticPreconfigured:
      return static_cast<int>(std::count(s.preconfigured.begin(), s.preconfigured.end(), true));
    case Strategy::VanillaRandom:
      return capable_count(s, cfg);
  }
  return 0;
}

// The server containerizes the clients it just deployed plus a quota of
// further volunteers, requested areas first, then by activity.
void onboard_volunteers(WorldState& s, const SimConfig& cfg,
                        const SelectionVector& deployed) {
  const int k = static_cast<int>(s.clients.size());
  for (int i = 0; i < k; ++i) {
    if (deployed[i]) s.containerized[i] = true;
  }
  std::vector<int> waiting;
  for (int i = 0; i < k; ++i) {
    if (!s.containerized[i]) waiting.push_back(i);
  }
  std::stable_sort(waiting.begin(), waiting.end(), [&](int a, int b) {
    const bool ra = s.requests.requested[s.clients[a].area_id];
    const bool rb = s.requests.requested[s.clients[b].area_id];
    if (ra != rb) return ra;
    return s.clients[a].movements > s.clients[b].movements;
  });
  const int quota = (k + cfg.onboarding_rounds - 1) / cfg.onboarding_rounds;
  for (int i = 0; i < std::min<int>(quota, static_cast<int>(waiting.size())); ++i) {
    s.containerized[waiting[i]] = true;
  }
}

std::vector<LocalUpdate> train_reporters(const WorldState& s, const SimConfig& cfg,
                                         const std::vector<int>& reporters,
                                         int round) {
  std::vector<LocalUpdate> updates(reporters.size());
  const auto tc = train_config(cfg);
  auto work = [&](std::size_t k) {
    const int id = reporters[k];
    Rng rng(derive_seed(cfg.seed, {kTrainStream, static_cast<std::uint64_t>(round),
                                   static_cast<std::uint64_t>(id)}));
    updates[k] = local_train(s.global_model, s.env->data.clients[id], tc, rng);
  };
  const unsigned workers =
      std::min<unsigned>(cfg.workers, static_cast<unsigned>(reporters.size()));
  if (workers <= 1) {
    for (std::size_t k = 0; k < reporters.size(); ++k) work(k);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t k = w; k < reporters.size(); k += workers) work(k);
      });
    }
  }
  return updates;
}

}  // namespace

RoundReport run_round(WorldState& s, const SimConfig& cfg) {
  const auto& env = *s.env;
  const int round = s.round_index + 1;
  RoundReport rep;
  rep.round_index = round;
  rep.strategy = cfg.strategy;
  rep.available_clients = available_at_round_start(s, cfg);

  s.requests = orchestrator_monitor(s);
  auto sel = select_clients(s, cfg);
  rep.objectives = sel.objectives;

  if (sel.infeasible) {
    rep.skipped = true;
    rep.discarded = true;
  } else {
    std::set<int> labels;
    for (std::size_t i = 0; i < sel.genes.size(); ++i) {
      if (!sel.genes[i]) continue;
      rep.selected_ids.push_back(static_cast<int>(i));
      const auto& ds = env.data.clients[i];
      rep.data_volume += ds.train.size();
      for (int r : ds.train) labels.insert(ds.labels[r]);
    }
    rep.deployed_count = static_cast<int>(rep.selected_ids.size());
    rep.distinct_labels = static_cast<int>(labels.size());

    const auto reporters = simulate_dropouts(s, sel.genes, cfg);
    rep.reported_count = static_cast<int>(reporters.size());
    rep.discarded = rep.reported_count <
                    required_reports(cfg.min_report_fraction, rep.deployed_count);
    if (!rep.discarded && !reporters.empty()) {
      const auto updates = train_reporters(s, cfg, reporters, round);
      s.global_model = fedavg_aggregate(updates);
      s.accuracy = accuracy(s.global_model, env.pooled_test_x, env.pooled_test_y);
    }
  }
  rep.test_accuracy = s.accuracy;

  update_priorities(s, s.global_model, sel.genes);
  if (cfg.strategy == Strategy::OnDemandGA) onboard_volunteers(s, cfg, sel.genes);
  s.round_index = round;
  refresh_clients(s, s.clock_secs + cfg.round_interval_secs);
  return rep;
}

CentralizedResult centralized_train(const Environment& env, const SimConfig& cfg) {
  Rng init_rng(derive_seed(cfg.seed, {kModelStream}));
  auto model = init_model(model_layers(env, cfg), init_rng);
  std::vector<int> rows(env.pooled_train_y.size());
  std::iota(rows.begin(), rows.end(), 0);
  CentralizedResult out;
  if (!rows.empty() && cfg.centralized_epochs > 0) {
    TrainConfig tc = train_config(cfg);
    tc.epochs = cfg.centralized_epochs;
    Rng rng(derive_seed(cfg.seed, {kCentralStream}));
    model = train_rows(model, env.pooled_train_x, env.pooled_train_y, rows, tc, rng).params;
  }
  out.test_accuracy = accuracy(model, env.pooled_test_x, env.pooled_test_y);
  const int classes = env.world.config.place_count;
  const int mode = modal_label(env.pooled_test_y, classes);
  out.majority_baseline =
      env.pooled_test_y.empty()
          ? 0.0
          : static_cast<double>(std::count(env.pooled_test_y.begin(),
                                           env.pooled_test_y.end(), mode)) /
                static_cast<double>(env.pooled_test_y.size());
  out.model = std::move(model);
  return out;
}

ExperimentResult run_experiment(std::shared_ptr<const Environment> env,
                                const SimConfig& cfg) {
  validate(cfg);
  ExperimentResult out;
  out.target_accuracy =
      cfg.target_accuracy > 0.0
          ? cfg.target_accuracy
          : cfg.target_centralized_ratio * centralized_train(*env, cfg).test_accuracy;
  auto state = init_state(env, cfg);
  out.initial_accuracy = state.accuracy;
  for (int r = 0; r < cfg.rounds_max; ++r) {
    out.reports.push_back(run_round(state, cfg));
    if (cfg.stop_at_target && out.reports.back().test_accuracy >= out.target_accuracy) {
      break;
    }
  }
  return out;
}

std::optional<int> rounds_to_target(const std::vector<RoundReport>& reports,
                                    double target) {
  for (const auto& r : reports) {
    if (r.test_accuracy >= target) return r.round_index;
  }
  return std::nullopt;
}

double discard_fraction(const std::vector<RoundReport>& reports) {
  if (reports.empty()) return 0.0;
  const auto n = std::count_if(reports.begin(), reports.end(),
                               [](const RoundReport& r) { return r.discarded; });
  return static_cast<double>(n) / static_cast<double>(reports.size());
}

json report_to_json(const RoundReport& r) {
  json j{{"round", r.round_index},
         {"strategy", std::string(to_string(r.strategy))},
         {"selected_ids", r.selected_ids},
         {"deployed", r.deployed_count},
         {"reported", r.reported_count},
         {"discarded", r.discarded},
         {"skipped", r.skipped},
         {"accuracy", r.test_accuracy},
         {"available", r.available_clients},
         {"data_volume", r.data_volume},
         {"distinct_labels", r.distinct_labels}};
  if (r.objectives) {
    for (int k = 0; k < kObjectiveCount; ++k) {
      j["f" + std::to_string(k + 1)] = r.objectives->f[k];
    }
    j["scalar"] = r.objectives->scalar;
  }
  return j;
}

std::string reports_to_csv(const std::vector<RoundReport>& reports) {
  std::ostringstream os;
  os << "round,strategy,deployed,reported,discarded,accuracy,available,"
        "data_volume,distinct_labels,f1,f2,f3,f4,f5,scalar\n";
  for (const auto& r : reports) {
    os << r.round_index << ',' << to_string(r.strategy) << ',' << r.deployed_count
       << ',' << r.reported_count << ',' << (r.discarded ? 1 : 0) << ','
       << fmt(r.test_accuracy) << ',' << r.available_clients << ','
       << r.data_volume << ',' << r.distinct_labels;
    for (int k = 0; k < kObjectiveCount; ++k) {
      os << ',';
      if (r.objectives) os << fmt(r.objectives->f[k]);
    }
    os << ',';
    if (r.objectives) os << fmt(r.objectives->scalar);
    os << '\n';
  }
  return os.str();
}

}  // namespace odfl
