#include "odfl/domain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace odfl {

using nlohmann::json;

double ObjectiveWeights::sum() const {
  return std::accumulate(w.begin(), w.end(), 0.0);
}

SelectionVector SelectionVector::from_string(const std::string& bits) {
  std::vector<std::uint8_t> genes;
  genes.reserve(bits.size());
  for (char c : bits) {
    if (c != '0' && c != '1') {
      throw std::invalid_argument("gene string must contain only 0/1: " + bits);
    }
    genes.push_back(c == '1' ? 1 : 0);
  }
  return SelectionVector(std::move(genes));
}

int SelectionVector::count() const {
  return static_cast<int>(std::count(genes_.begin(), genes_.end(), 1));
}

std::string SelectionVector::to_string() const {
  std::string s(genes_.size(), '0');
  for (std::size_t i = 0; i < genes_.size(); ++i) {
    if (genes_[i]) s[i] = '1';
  }
  return s;
}

ValidationReport validate_instance(const ProblemInstance& p) {
  ValidationReport report;
  auto add = [&](std::string msg) { report.push_back(std::move(msg)); };
  const auto n = p.clients.size();

  if (p.utilizations.size() != n) {
    add("utilizations length " + std::to_string(p.utilizations.size()) +
        " != clients length " + std::to_string(n));
  }
  if (p.area_count < 1) add("area_count must be >= 1");
  if (p.requests.requested.size() != static_cast<std::size_t>(
                                         std::max(p.area_count, 0))) {
    add("requests length != area_count");
  }
  for (auto flag : p.requests.requested) {
    if (flag > 1) {
      add("request flag not binary");
      break;
    }
  }
  if (p.priority_levels < 1 || p.priority_levels > kMaxPriorityLevels) {
    add("priority_levels out of range [1, 10]");
  }

  for (const auto& c : p.clients) {
    const std::string who = "client " + std::to_string(c.id) + ": ";
    if (c.cpu_capacity < 0 || c.memory_capacity < 0 || c.disk_capacity < 0 ||
        c.availability_secs < 0 || c.movements < 0) {
      add(who + "negative capacity");
    }
    if (!(c.battery_level >= 0.0 && c.battery_level <= 100.0)) {
      add(who + "battery out of range");
    }
    if (c.area_id < 0 || c.area_id >= p.area_count) {
      add(who + "area out of range");
    }
    if (c.priority < 1 || c.priority > p.priority_levels) {
      add(who + "priority out of range");
    }
    if (c.rounds_served < 0) add(who + "negative rounds_served");
  }
  for (std::size_t i = 0; i < p.utilizations.size(); ++i) {
    const auto& u = p.utilizations[i];
    if (u.cpu < 0 || u.memory < 0 || u.battery < 0 || u.disk < 0) {
      add("utilization " + std::to_string(i) + ": negative consumption");
    }
  }

  for (double w : p.weights.w) {
    if (!(w >= 0.0 && w <= 1.0)) {
      add("weight out of [0, 1]");
      break;
    }
  }
  if (!(std::abs(p.weights.sum() - 1.0) <= kWeightSumTolerance)) {
    std::ostringstream os;
    os.precision(17);
    os << "weights sum ≠ 1 (got " << p.weights.sum() << ")";
    add(os.str());
  }

  const auto& t = p.thresholds;
  if (!(t.min_round_time_secs >= 0)) add("min_round_time_secs negative");
  if (!(t.high_movement_fraction >= 0 && t.high_movement_fraction <= 1)) {
    add("high_movement_fraction out of [0, 1]");
  }
  if (t.min_selected < 0 || t.min_selected > t.max_selected ||
      t.max_selected > static_cast<int>(n)) {
    add("cardinality bounds violate 0 <= min_selected <= max_selected <= n");
  }
  return report;
}

void to_json(json& j, const ClientProfile& c) {
  j = json{{"id", c.id},
           {"cpu_capacity", c.cpu_capacity},
           {"memory_capacity", c.memory_capacity},
           {"disk_capacity", c.disk_capacity},
           {"battery_level", c.battery_level},
           {"availability_secs", c.availability_secs},
           {"area_id", c.area_id},
           {"movements", c.movements},
           {"priority", c.priority},
           {"rounds_served", c.rounds_served}};
}

void from_json(const json& j, ClientProfile& c) {
  j.at("id").get_to(c.id);
  j.at("cpu_capacity").get_to(c.cpu_capacity);
  j.at("memory_capacity").get_to(c.memory_capacity);
  j.at("disk_capacity").get_to(c.disk_capacity);
  j.at("battery_level").get_to(c.battery_level);
  j.at("availability_secs").get_to(c.availability_secs);
  j.at("area_id").get_to(c.area_id);
  j.at("movements").get_to(c.movements);
  j.at("priority").get_to(c.priority);
  c.rounds_served = j.value("rounds_served", 0);
}

void to_json(json& j, const UtilizationProfile& u) {
  j = json{{"cpu", u.cpu},
           {"memory", u.memory},
           {"battery", u.battery},
           {"disk", u.disk}};
}

void from_json(const json& j, UtilizationProfile& u) {
  j.at("cpu").get_to(u.cpu);
  j.at("memory").get_to(u.memory);
  j.at("battery").get_to(u.battery);
  j.at("disk").get_to(u.disk);
}

void to_json(json& j, const AreaRequestVector& a) {
  j = json{{"requested", a.requested}};
}

void from_json(const json& j, AreaRequestVector& a) {
  j.at("requested").get_to(a.requested);
}

void to_json(json& j, const ObjectiveWeights& w) {
  j = json{{"w1", w.w[0]}, {"w2", w.w[1]}, {"w3", w.w[2]},
           {"w4", w.w[3]}, {"w5", w.w[4]}};
}

void from_json(const json& j, ObjectiveWeights& w) {
  for (int k = 0; k < kObjectiveCount; ++k) {
    j.at("w" + std::to_string(k + 1)).get_to(w.w[k]);
  }
}

void to_json(json& j, const DeploymentThresholds& t) {
  j = json{{"min_round_time_secs", t.min_round_time_secs},
           {"movement_threshold", t.movement_threshold},
           {"high_movement_fraction", t.high_movement_fraction},
           {"min_selected", t.min_selected},
           {"max_selected", t.max_selected}};
}

void from_json(const json& j, DeploymentThresholds& t) {
  j.at("min_round_time_secs").get_to(t.min_round_time_secs);
  j.at("movement_threshold").get_to(t.movement_threshold);
  j.at("high_movement_fraction").get_to(t.high_movement_fraction);
  j.at("min_selected").get_to(t.min_selected);
  j.at("max_selected").get_to(t.max_selected);
}

void to_json(json& j, const ProblemInstance& p) {
  j = json{{"clients", p.clients},
           {"utilizations", p.utilizations},
           {"requests", p.requests},
           {"weights", p.weights},
           {"thresholds", p.thresholds},
           {"area_count", p.area_count},
           {"priority_levels", p.priority_levels}};
}

void from_json(const json& j, ProblemInstance& p) {
  j.at("clients").get_to(p.clients);
  j.at("utilizations").get_to(p.utilizations);
  j.at("requests").get_to(p.requests);
  j.at("weights").get_to(p.weights);
  j.at("thresholds").get_to(p.thresholds);
  j.at("area_count").get_to(p.area_count);
  p.priority_levels = j.value("priority_levels", kMaxPriorityLevels);
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void write_json_file(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

ProblemInstance load_instance(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  try {
    return j.get<ProblemInstance>();
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void save_instance(const ProblemInstance& instance,
                   const std::filesystem::path& path) {
  write_json_file(json(instance), path);
}

}  // namespace odfl
