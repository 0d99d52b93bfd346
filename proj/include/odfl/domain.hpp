#pragma once

// Problem-instance data model shared by the optimizer, the exhaustive oracle
// and the simulator.  Units: CPU in abstract units, memory and disk in MB,
// battery in percent, time in seconds.

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace odfl {

inline constexpr int kMaxPriorityLevels = 10;
inline constexpr int kObjectiveCount = 5;
inline constexpr double kWeightSumTolerance = 1e-9;

struct ClientProfile {
  int id = 0;
  double cpu_capacity = 0.0;
  double memory_capacity = 0.0;
  double disk_capacity = 0.0;
  double battery_level = 0.0;
  double availability_secs = 0.0;
  int area_id = 0;
  double movements = 0.0;
  int priority = 1;
  int rounds_served = 0;

  bool operator==(const ClientProfile&) const = default;
};

/// Resource consumption of the learning service on one client.
struct UtilizationProfile {
  double cpu = 0.0;
  double memory = 0.0;
  double battery = 0.0;
  double disk = 0.0;

  bool operator==(const UtilizationProfile&) const = default;
};

/// One flag per area; 1 when that area's orchestrator asked for deployments.
struct AreaRequestVector {
  std::vector<std::uint8_t> requested;

  bool operator==(const AreaRequestVector&) const = default;
};

struct ObjectiveWeights {
  std::array<double, kObjectiveCount> w{0.2, 0.2, 0.2, 0.2, 0.2};

  double sum() const;
  bool operator==(const ObjectiveWeights&) const = default;
};

struct DeploymentThresholds {
  double min_round_time_secs = 0.0;
  double movement_threshold = 0.0;
  double high_movement_fraction = 1.0;
  int min_selected = 0;
  int max_selected = 0;

  bool operator==(const DeploymentThresholds&) const = default;
};

struct ProblemInstance {
  std::vector<ClientProfile> clients;
  std::vector<UtilizationProfile> utilizations;
  AreaRequestVector requests;
  ObjectiveWeights weights;
  DeploymentThresholds thresholds;
  int area_count = 0;
  /// Number of priority levels t (1 <= t <= 10).
  int priority_levels = kMaxPriorityLevels;

  std::size_t size() const { return clients.size(); }
  bool operator==(const ProblemInstance&) const = default;
};

/// Binary deployment decision, one gene per candidate client.
class SelectionVector {
 public:
  SelectionVector() = default;
  explicit SelectionVector(std::size_t n) : genes_(n, 0) {}
  explicit SelectionVector(std::vector<std::uint8_t> genes)
      : genes_(std::move(genes)) {}

  /// Parses a string of '0'/'1' characters.
  static SelectionVector from_string(const std::string& bits);

  std::size_t size() const { return genes_.size(); }
  bool operator[](std::size_t i) const { return genes_[i] != 0; }
  void set(std::size_t i, bool v) { genes_[i] = v ? 1 : 0; }
  void flip(std::size_t i) { genes_[i] ^= 1; }
  int count() const;

  const std::vector<std::uint8_t>& genes() const { return genes_; }
  std::string to_string() const;

  auto operator<=>(const SelectionVector&) const = default;

 private:
  std::vector<std::uint8_t> genes_;
};

/// List of violated type invariants; empty iff the instance is well formed.
using ValidationReport = std::vector<std::string>;

ValidationReport validate_instance(const ProblemInstance& instance);

// JSON document form, field names as in the structs above.
void to_json(nlohmann::json& j, const ClientProfile& c);
void from_json(const nlohmann::json& j, ClientProfile& c);
void to_json(nlohmann::json& j, const UtilizationProfile& u);
void from_json(const nlohmann::json& j, UtilizationProfile& u);
void to_json(nlohmann::json& j, const AreaRequestVector& a);
void from_json(const nlohmann::json& j, AreaRequestVector& a);
void to_json(nlohmann::json& j, const ObjectiveWeights& w);
void from_json(const nlohmann::json& j, ObjectiveWeights& w);
void to_json(nlohmann::json& j, const DeploymentThresholds& t);
void from_json(const nlohmann::json& j, DeploymentThresholds& t);
void to_json(nlohmann::json& j, const ProblemInstance& p);
void from_json(const nlohmann::json& j, ProblemInstance& p);

ProblemInstance load_instance(const std::filesystem::path& path);
void save_instance(const ProblemInstance& instance,
                   const std::filesystem::path& path);

/// Reads a whole JSON file; throws std::runtime_error on I/O or parse errors.
nlohmann::json read_json_file(const std::filesystem::path& path);
/// Writes `j` pretty-printed with a trailing newline.
void write_json_file(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace odfl
