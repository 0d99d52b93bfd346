#pragma once

// Multi-objective genetic algorithm over deployment selections: seeded
// initialization, binary tournament, one-point crossover, 1/L bit-flip
// mutation, rule-based repair and a bounded Pareto archive.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "odfl/domain.hpp"
#include "odfl/objectives.hpp"
#include "odfl/rng.hpp"

namespace odfl {

struct GaConfig {
  int population_size = 50;
  int generations = 100;
  double crossover_prob = 0.9;
  int tournament_size = 2;
  std::uint64_t seed = 1;
  int archive_cap = 64;
};

void to_json(nlohmann::json& j, const GaConfig& c);
void from_json(const nlohmann::json& j, GaConfig& c);

/// Throws std::invalid_argument naming the offending field.
void validate(const GaConfig& cfg);

/// Raised when no selection can satisfy the constraints.  `family` names the
/// first constraint family that cannot be met: "cardinality", "resources",
/// "availability" or "movement_cap".
class InfeasibleInstance : public std::runtime_error {
 public:
  InfeasibleInstance(std::string family, const std::string& what)
      : std::runtime_error(what), family_(std::move(family)) {}
  const std::string& family() const { return family_; }

 private:
  std::string family_;
};

/// Exact existence check for a feasible selection.  Returns an empty string
/// when one exists, otherwise the failing constraint family.
std::string first_unsatisfiable_family(const ProblemInstance& instance);

std::vector<SelectionVector> init_population(const ProblemInstance& instance,
                                             const GaConfig& cfg, Rng& rng);

/// Winner among explicit tournament entrants: highest score, ties to the
/// lower index.
std::size_t tournament_winner(std::span<const std::size_t> entrants,
                              std::span<const double> scores);

/// Draws min(k, population) distinct entrants uniformly and returns the index
/// of the winner.
std::size_t tournament_select(std::span<const double> scores, int k, Rng& rng);

/// Swaps the suffixes of a and b starting at position `cut` (1 <= cut < n).
std::pair<SelectionVector, SelectionVector> crossover_at(
    const SelectionVector& a, const SelectionVector& b, std::size_t cut);

std::pair<SelectionVector, SelectionVector> one_point_crossover(
    const SelectionVector& a, const SelectionVector& b, Rng& rng,
    double crossover_prob);

/// Flips each gene independently with probability 1/n.
SelectionVector bitflip_mutate(const SelectionVector& sel, Rng& rng);

struct RepairResult {
  SelectionVector selection;
  bool unrepairable = false;
};

/// Deterministic repair: overload rule, staying-time rule, high-movement
/// rule, then cardinality.  Feasible input is returned unchanged.
RepairResult repair(const ProblemInstance& instance, SelectionVector sel);

struct ArchiveEntry {
  SelectionVector selection;
  ObjectiveVector objectives;
};

/// Mutually non-dominated set of feasible selections, bounded by a cap.
class ParetoArchive {
 public:
  explicit ParetoArchive(int cap = 64) : cap_(cap) {}

  /// Inserts the candidate unless an entry dominates it or holds the same
  /// genes; drops entries it dominates; prunes by crowding when over the cap.
  /// Returns true if inserted.  Throws std::invalid_argument on an infeasible
  /// candidate.
  bool update(const ProblemInstance& instance, const SelectionVector& sel,
              const ObjectiveVector& obj);

  const std::vector<ArchiveEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  int cap() const { return cap_; }

  /// Entry with maximal scalar fitness; ties to the lexicographically
  /// smallest gene string.  Archive must be non-empty.
  const ArchiveEntry& best() const;

 private:
  void prune();

  int cap_;
  std::vector<ArchiveEntry> entries_;
};

struct SolveResult {
  ParetoArchive archive;
  SelectionVector recommendation;
  ObjectiveVector recommendation_objectives;
  /// Best archive scalar after initialization and after each generation.
  std::vector<double> best_scalar_history;
};

/// Runs the genetic algorithm for cfg.generations generations.  Throws
/// InfeasibleInstance when no feasible selection exists.
SolveResult solve(const ProblemInstance& instance, const GaConfig& cfg);

nlohmann::json archive_to_json(const ParetoArchive& archive);
nlohmann::json entry_to_json(const SelectionVector& sel,
                             const ObjectiveVector& obj);

}  // namespace odfl
