#pragma once

// Constraint checkers, the five deployment objectives, weighted
// scalarization and Pareto dominance.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "odfl/domain.hpp"

namespace odfl {

/// Normalized, maximization-form objective values.
///   f1: fewer deployed clients     f2: data volume (movements share)
///   f3: learning quality (priority) f4: area diversity
///   f5: served orchestrator requests
struct ObjectiveVector {
  std::array<double, kObjectiveCount> f{};
  double scalar = 0.0;

  bool operator==(const ObjectiveVector&) const = default;
};

enum class ViolationKind {
  Cpu,
  Memory,
  Disk,
  Battery,
  Availability,
  MovementCap,
  CardinalityLow,
  CardinalityHigh,
};

std::string_view to_string(ViolationKind kind);

struct ConstraintViolation {
  ViolationKind kind;
  std::optional<int> client_id;
  std::string detail;
};

using Violations = std::vector<ConstraintViolation>;

// All checkers throw std::invalid_argument when sel.size() != instance.size().
Violations check_resources(const ProblemInstance& instance,
                           const SelectionVector& sel);
Violations check_availability(const ProblemInstance& instance,
                              const SelectionVector& sel);
Violations check_movement_cap(const ProblemInstance& instance,
                              const SelectionVector& sel);
Violations check_cardinality(const ProblemInstance& instance,
                             const SelectionVector& sel);

bool is_feasible(const ProblemInstance& instance, const SelectionVector& sel);

/// Per-client predicates used by repair and the existence check.
bool fits_resources(const ProblemInstance& instance, std::size_t i);
bool stays_long_enough(const ProblemInstance& instance, std::size_t i);
bool is_high_movement(const ProblemInstance& instance, std::size_t i);

/// Largest number of high-movement clients allowed among `selected` clients:
/// ceil(Mt * selected).
int high_movement_cap(double fraction, int selected);

ObjectiveVector eval_objectives(const ProblemInstance& instance,
                                const SelectionVector& sel);

double scalarize(const ObjectiveVector& v, const ObjectiveWeights& weights);

/// Pareto dominance in maximization form: a >= b everywhere and > somewhere.
bool dominates(const ObjectiveVector& a, const ObjectiveVector& b);

}  // namespace odfl
