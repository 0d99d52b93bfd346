#include "odfl/objectives.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace odfl {
namespace {

void require_length(const ProblemInstance& instance,
                    const SelectionVector& sel) {
  if (sel.size() != instance.size()) {
    throw std::invalid_argument(
        "selection length " + std::to_string(sel.size()) +
        " does not match instance size " + std::to_string(instance.size()));
  }
}

std::string over(double used, double cap) {
  return std::to_string(used) + " > " + std::to_string(cap);
}

}  // namespace

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::Cpu: return "Cpu";
    case ViolationKind::Memory: return "Memory";
    case ViolationKind::Disk: return "Disk";
    case ViolationKind::Battery: return "Battery";
    case ViolationKind::Availability: return "Availability";
    case ViolationKind::MovementCap: return "MovementCap";
    case ViolationKind::CardinalityLow: return "CardinalityLow";
    case ViolationKind::CardinalityHigh: return "CardinalityHigh";
  }
  return "Unknown";
}

bool fits_resources(const ProblemInstance& p, std::size_t i) {
  const auto& c = p.clients[i];
  const auto& u = p.utilizations[i];
  return u.cpu <= c.cpu_capacity && u.memory <= c.memory_capacity &&
         u.disk <= c.disk_capacity && u.battery <= c.battery_level;
}

bool stays_long_enough(const ProblemInstance& p, std::size_t i) {
  return p.clients[i].availability_secs >= p.thresholds.min_round_time_secs;
}

bool is_high_movement(const ProblemInstance& p, std::size_t i) {
  return p.clients[i].movements >= p.thresholds.movement_threshold;
}

int high_movement_cap(double fraction, int selected) {
  // The small slack keeps products such as 0.7 * 10 from rounding up to 8.
  return static_cast<int>(std::ceil(fraction * selected - 1e-9));
}

Violations check_resources(const ProblemInstance& p,
                           const SelectionVector& sel) {
  require_length(p, sel);
  Violations out;
  for (std::size_t i = 0; i < sel.size(); ++i) {
    if (!sel[i]) continue;
    const auto& c = p.clients[i];
    const auto& u = p.utilizations[i];
    if (u.cpu > c.cpu_capacity) {
      out.push_back({ViolationKind::Cpu, c.id, over(u.cpu, c.cpu_capacity)});
    }
    if (u.memory > c.memory_capacity) {
      out.push_back(
          {ViolationKind::Memory, c.id, over(u.memory, c.memory_capacity)});
    }
    if (u.disk > c.disk_capacity) {
      out.push_back({ViolationKind::Disk, c.id, over(u.disk, c.disk_capacity)});
    }
    if (u.battery > c.battery_level) {
      out.push_back(
          {ViolationKind::Battery, c.id, over(u.battery, c.battery_level)});
    }
  }
  return out;
}

Violations check_availability(const ProblemInstance& p,
                              const SelectionVector& sel) {
  require_length(p, sel);
  Violations out;
  for (std::size_t i = 0; i < sel.size(); ++i) {
    if (sel[i] && !stays_long_enough(p, i)) {
      out.push_back({ViolationKind::Availability, p.clients[i].id,
                     std::to_string(p.clients[i].availability_secs) + " < " +
                         std::to_string(p.thresholds.min_round_time_secs)});
    }
  }
  return out;
}

Violations check_movement_cap(const ProblemInstance& p,
                              const SelectionVector& sel) {
  require_length(p, sel);
  int high = 0;
  for (std::size_t i = 0; i < sel.size(); ++i) {
    if (sel[i] && is_high_movement(p, i)) ++high;
  }
  const int cap = high_movement_cap(p.thresholds.high_movement_fraction,
                                    sel.count());
  if (high > cap) {
    return {{ViolationKind::MovementCap, std::nullopt,
             std::to_string(high) + " high-movement clients > cap " +
                 std::to_string(cap)}};
  }
  return {};
}

Violations check_cardinality(const ProblemInstance& p,
                             const SelectionVector& sel) {
  require_length(p, sel);
  const int s = sel.count();
  if (s < p.thresholds.min_selected) {
    return {{ViolationKind::CardinalityLow, std::nullopt,
             std::to_string(s) + " < " +
                 std::to_string(p.thresholds.min_selected)}};
  }
  if (s > p.thresholds.max_selected) {
    return {{ViolationKind::CardinalityHigh, std::nullopt,
             std::to_string(s) + " > " +
                 std::to_string(p.thresholds.max_selected)}};
  }
  return {};
}

bool is_feasible(const ProblemInstance& p, const SelectionVector& sel) {
  return check_resources(p, sel).empty() &&
         check_availability(p, sel).empty() &&
         check_movement_cap(p, sel).empty() &&
         check_cardinality(p, sel).empty();
}

double scalarize(const ObjectiveVector& v, const ObjectiveWeights& weights) {
  double s = 0.0;
  for (int k = 0; k < kObjectiveCount; ++k) s += weights.w[k] * v.f[k];
  return s;
}

ObjectiveVector eval_objectives(const ProblemInstance& p,
                                const SelectionVector& sel) {
  require_length(p, sel);
  const auto n = p.size();
  ObjectiveVector v;
  int selected = 0;
  double movement_sel = 0.0;
  double movement_all = 0.0;
  double priority_sel = 0.0;
  int in_requested = 0;
  std::set<int> areas;
  bool any_request = false;
  for (auto flag : p.requests.requested) any_request = any_request || flag;

  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = p.clients[i];
    movement_all += c.movements;
    if (!sel[i]) continue;
    ++selected;
    movement_sel += c.movements;
    priority_sel += c.priority;
    areas.insert(c.area_id);
    if (c.area_id >= 0 &&
        static_cast<std::size_t>(c.area_id) < p.requests.requested.size() &&
        p.requests.requested[c.area_id]) {
      ++in_requested;
    }
  }

  v.f[0] = n == 0 ? 1.0 : 1.0 - static_cast<double>(selected) / n;
  if (selected > 0) {
    v.f[1] = movement_all > 0 ? movement_sel / movement_all : 0.0;
    v.f[2] = priority_sel / (static_cast<double>(p.priority_levels) * selected);
    v.f[3] = static_cast<double>(areas.size()) /
             std::min(p.area_count, selected);
    v.f[4] = any_request ? static_cast<double>(in_requested) / selected : 1.0;
  }
  v.scalar = scalarize(v, p.weights);
  return v;
}

bool dominates(const ObjectiveVector& a, const ObjectiveVector& b) {
  bool strict = false;
  for (int k = 0; k < kObjectiveCount; ++k) {
    if (a.f[k] < b.f[k]) return false;
    if (a.f[k] > b.f[k]) strict = true;
  }
  return strict;
}

}  // namespace odfl
