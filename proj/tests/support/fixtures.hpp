#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "odfl/domain.hpp"
#include "odfl/ga.hpp"
#include "odfl/oracle.hpp"

namespace odfl::testing {

inline constexpr const char* kSmallFixtures[] = {
    "small10",    "small10_02", "small10_03", "small10_04", "small10_05",
    "small10_06", "small10_07", "small10_08", "small10_09", "small10_10",
};

#ifdef ODFL_FIXTURE_DIR
inline std::filesystem::path fixture_path(const std::string& file) {
  return std::filesystem::path(ODFL_FIXTURE_DIR) / file;
}
#endif

/// Committed front format: gene strings and objective vectors, gene-sorted.
inline nlohmann::json front_to_json(const std::vector<ArchiveEntry>& front) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : front) {
    entries.push_back({{"genes", e.selection.to_string()},
                       {"objectives", e.objectives.f},
                       {"scalar", e.objectives.scalar}});
  }
  return {{"count", front.size()}, {"entries", entries}};
}

struct FrozenPoint {
  std::string genes;
  std::array<double, kObjectiveCount> f{};
};

inline std::vector<FrozenPoint> load_front(const std::filesystem::path& path) {
  const auto j = read_json_file(path);
  std::vector<FrozenPoint> out;
  for (const auto& e : j.at("entries")) {
    out.push_back({e.at("genes").get<std::string>(),
                   e.at("objectives").get<std::array<double, kObjectiveCount>>()});
  }
  return out;
}

}  // namespace odfl::testing
