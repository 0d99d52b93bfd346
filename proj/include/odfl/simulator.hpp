#pragma once

// Round-based federated learning simulation: orchestrators monitor area
// activity, the server selects and deploys clients (on demand via the GA,
// uniformly at random, or from a static preconfigured pool), clients train
// locally and report, and the server aggregates with FedAvg or discards the
// round when too few updates arrive.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "odfl/domain.hpp"
#include "odfl/ga.hpp"
#include "odfl/mlp.hpp"
#include "odfl/mobility.hpp"
#include "odfl/objectives.hpp"

namespace odfl {

enum class Strategy { OnDemandGA, VanillaRandom, StaticPreconfigured };

std::string_view to_string(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view name);

struct CardinalityBounds {
  int min_selected = 0;
  int max_selected = 0;
  bool operator==(const CardinalityBounds&) const = default;
};

struct SimConfig {
  std::string name;
  Strategy strategy = Strategy::OnDemandGA;
  int rounds_max = 50;
  /// Stop as soon as target accuracy is reached.
  bool stop_at_target = true;
  double min_report_fraction = 0.8;
  double round_time_T_secs = 600.0;
  /// Absolute target; <= 0 means target_centralized_ratio x centralized.
  double target_accuracy = 0.0;
  double target_centralized_ratio = 0.9;
  /// Per-round bounds, round 1 first; the last entry repeats.  Empty selects
  /// the default ramp from (5, 5) at round 1 to (15, 20) at round 15.
  std::vector<CardinalityBounds> client_schedule;
  double p_higher_priority_invite = 0.05;
  double vanilla_fraction_C = 0.1;
  double static_preconfigured_fraction = 0.2;
  int local_epochs = 3;
  double learning_rate = 0.05;
  int batch_size = 32;
  std::vector<int> hidden_layers{128, 256, 128};
  int centralized_epochs = 20;
  /// Volunteers containerized ahead of demand: all within this many rounds.
  int onboarding_rounds = 10;
  /// Clients at or above this movement quantile count as high movement.
  double movement_threshold_quantile = 0.75;
  double high_movement_fraction = 0.5;
  ObjectiveWeights weights;
  GaConfig ga;
  /// Simulated wall-clock spacing of rounds and the trace offset of round 1.
  double round_interval_secs = 3600.0;
  double start_offset_secs = 30 * 86400.0 + 8 * 3600.0;
  /// Threads used for local training; results do not depend on it.
  unsigned workers = 1;
  std::uint64_t seed = 1;
};

void to_json(nlohmann::json& j, const SimConfig& c);
void from_json(const nlohmann::json& j, SimConfig& c);
void to_json(nlohmann::json& j, const CardinalityBounds& b);
void from_json(const nlohmann::json& j, CardinalityBounds& b);

/// Throws std::invalid_argument naming the offending field.
void validate(const SimConfig& cfg);

CardinalityBounds schedule_for_round(const SimConfig& cfg, int round);

/// Smallest report count that keeps a round: ceil(fraction x deployed).
int required_reports(double fraction, int deployed);

/// Immutable inputs shared by every run on one world.
struct Environment {
  World world;
  std::vector<std::vector<VisitRecord>> timelines;  // per user, chronological
  Datasets data;
  RowMatrix pooled_train_x;
  std::vector<int> pooled_train_y;
  RowMatrix pooled_test_x;
  std::vector<int> pooled_test_y;

  int user_count() const { return world.config.user_count; }
  double window_secs() const { return world.config.trace_days * 86400.0; }
};

std::shared_ptr<const Environment> make_environment(const WorldConfig& cfg);

/// Fixed device characteristics of one client.
struct DeviceProfile {
  bool weak = false;
  double cpu_capacity = 0.0;
  double memory_capacity = 0.0;
  double disk_capacity = 0.0;
  double battery_base = 100.0;
  double battery_phase = 0.0;
};

inline constexpr double kWeakDeviceFraction = 0.35;
inline constexpr double kBatterySwing = 30.0;
inline constexpr double kRequestActivityRatio = 1.25;

struct WorldState {
  std::shared_ptr<const Environment> env;
  std::vector<ClientProfile> clients;
  std::vector<UtilizationProfile> utilizations;
  std::vector<DeviceProfile> devices;
  AreaRequestVector requests;
  ModelParams global_model;
  double accuracy = 0.0;
  int round_index = 0;  // rounds completed
  double clock_secs = 0.0;
  double movement_threshold = 0.0;
  std::vector<bool> containerized;
  std::vector<bool> preconfigured;
};

struct RoundReport {
  int round_index = 0;
  Strategy strategy = Strategy::OnDemandGA;
  std::vector<int> selected_ids;
  int deployed_count = 0;
  int reported_count = 0;
  bool discarded = false;
  /// Deployment was impossible (no feasible selection); counted as discarded.
  bool skipped = false;
  double test_accuracy = 0.0;
  int available_clients = 0;
  std::size_t data_volume = 0;
  int distinct_labels = 0;
  std::optional<ObjectiveVector> objectives;
};

/// Fresh state at the start of a run: round 0, initial model, all clients at
/// priority 1, nothing containerized.
WorldState init_state(std::shared_ptr<const Environment> env,
                      const SimConfig& cfg);

/// Moves every client to its trace position at `clock_secs` and refreshes
/// area, remaining availability and battery.
void refresh_clients(WorldState& state, double clock_secs);

AreaRequestVector orchestrator_monitor(const WorldState& state);

/// Deployment problem for the upcoming round as seen by the GA.
ProblemInstance build_instance(const WorldState& state, const SimConfig& cfg,
                               int round);

struct Selection {
  SelectionVector genes;
  std::optional<ObjectiveVector> objectives;
  bool infeasible = false;
};

Selection select_clients(const WorldState& state, const SimConfig& cfg);

/// Ids of deployed clients that report back.
std::vector<int> simulate_dropouts(const WorldState& state,
                                   const SelectionVector& selected,
                                   const SimConfig& cfg);

/// Re-ranks undeployed clients by local test accuracy of `model` into
/// priorities 1..t and increments rounds_served of deployed ones.
void update_priorities(WorldState& state, const ModelParams& model,
                       const SelectionVector& deployed);

/// Clients ready to finish a round right now (resources and staying time).
int capable_count(const WorldState& state, const SimConfig& cfg);

RoundReport run_round(WorldState& state, const SimConfig& cfg);

struct ExperimentResult {
  std::vector<RoundReport> reports;
  double target_accuracy = 0.0;
  double initial_accuracy = 0.0;
};

/// Runs rounds until the target is reached (when stop_at_target) or
/// rounds_max.  A non-positive cfg.target_accuracy triggers a centralized
/// training run to derive it.
ExperimentResult run_experiment(std::shared_ptr<const Environment> env,
                                const SimConfig& cfg);

struct CentralizedResult {
  ModelParams model;
  double test_accuracy = 0.0;
  /// Share of the most frequent label in the pooled test set.
  double majority_baseline = 0.0;
};

CentralizedResult centralized_train(const Environment& env,
                                    const SimConfig& cfg);

/// First round whose accuracy reaches the target.
std::optional<int> rounds_to_target(const std::vector<RoundReport>& reports,
                                    double target);
double discard_fraction(const std::vector<RoundReport>& reports);

nlohmann::json report_to_json(const RoundReport& r);
/// Header and rows with columns: round, strategy, deployed, reported,
/// discarded, accuracy, available, data_volume, distinct_labels, f1..f5,
/// scalar.
std::string reports_to_csv(const std::vector<RoundReport>& reports);

}  // namespace odfl
