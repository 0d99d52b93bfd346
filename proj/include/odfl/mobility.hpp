#pragma once

// Synthetic mobility traces shaped like a next-place-prediction corpus:
// users move between places grouped into areas following user-specific
// Markov routines, which yields Non-IID per-user label distributions.

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace odfl {

struct WorldConfig {
  int user_count = 100;
  int place_count = 20;
  int area_count = 6;
  int records_min = 200;
  int records_max = 1500;
  int trace_days = 90;
  std::uint64_t seed = 7;
};

void to_json(nlohmann::json& j, const WorldConfig& c);
void from_json(const nlohmann::json& j, WorldConfig& c);

/// Throws std::invalid_argument naming the offending field.
void validate(const WorldConfig& cfg);

struct UserModel {
  int user_id = 0;
  int home_area = 0;
  /// Routine order: from favorites[i] the user usually heads to
  /// favorites[i + 1].
  std::vector<int> favorites;
  /// Row-stochastic next-place matrix, place_count x place_count.
  Eigen::MatrixXd transitions;
  int record_count = 0;
};

struct World {
  WorldConfig config;
  std::vector<int> place_area;
  std::vector<UserModel> users;

  std::vector<int> places_in_area(int area) const;
};

inline constexpr double kMedianDurationSecs = 1800.0;
inline constexpr double kDurationLogSigma = 0.75;
inline constexpr double kWeekendAwayBias = 1.5;
inline constexpr int kTraceStartYear = 2009;
inline constexpr int kTraceStartMonth = 9;
inline constexpr int kTraceStartDay = 1;

struct VisitRecord {
  int user_id = 0;
  int place_id = 0;
  int area_id = 0;
  int day = 1;
  int month = 1;
  int year = kTraceStartYear;
  bool weekend = false;
  double duration_secs = 0.0;
  /// Visits by this user to this place within the same calendar month.
  double visit_rate = 0.0;
  int next_place_id = 0;
  /// Seconds since the start of the trace window.
  double start_secs = 0.0;
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ClientDataset {
  int user_id = 0;
  /// One row per record: one-hot place, one-hot area, weekend flag,
  /// min-max normalized duration, min-max normalized visit rate.
  RowMatrix features;
  std::vector<int> labels;
  std::vector<int> train;
  std::vector<int> test;

  std::size_t size() const { return labels.size(); }
};

struct UserSummary {
  int user_id = 0;
  /// Visits per day over the trace window.
  double movements = 0.0;
  /// Mean stay duration per area (0 where the user never went).
  std::vector<double> area_mean_stay;
};

struct Datasets {
  /// Indexed by user id.
  std::vector<ClientDataset> clients;
  std::vector<UserSummary> summaries;
};

int feature_width(const WorldConfig& cfg);

World generate_world(const WorldConfig& cfg);

/// Records of all users, grouped by user and chronological within a user.
std::vector<VisitRecord> generate_traces(const World& world);

Datasets build_datasets(const World& world,
                        const std::vector<VisitRecord>& traces);

/// Shannon entropy (bits) of a label histogram.
double label_entropy(const std::vector<int>& labels, int classes);
/// Most frequent label; ties to the smaller label.
int modal_label(const std::vector<int>& labels, int classes);

// Files written by the `generate` command.
void write_traces_csv(const std::vector<VisitRecord>& traces,
                      const std::filesystem::path& path);
nlohmann::json dataset_to_json(const ClientDataset& ds);
nlohmann::json world_summary_json(const World& world, const Datasets& data);

/// Reads the world config recorded in `<dir>/world.json`.
WorldConfig load_world_config(const std::filesystem::path& dir);

}  // namespace odfl
