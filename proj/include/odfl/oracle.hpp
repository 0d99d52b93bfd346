#pragma once

// Brute-force ground truth for small instances and front-quality metrics.

#include <array>
#include <cstdint>
#include <vector>

#include "odfl/domain.hpp"
#include "odfl/ga.hpp"
#include "odfl/objectives.hpp"

namespace odfl {

inline constexpr std::size_t kMaxOracleClients = 20;

/// Exact non-dominated set over all 2^n feasible selections (no cap), sorted
/// by gene string.  Enumeration is split across `workers` threads by gene
/// prefix; the result does not depend on the worker count.  Throws
/// std::invalid_argument when n > 20.
std::vector<ArchiveEntry> enumerate_pareto(const ProblemInstance& instance,
                                           unsigned workers = 1);

using Point5 = std::array<double, kObjectiveCount>;

struct HypervolumeResult {
  double value = 0.0;
  /// Zero for exact results; Monte-Carlo standard error otherwise.
  double std_error = 0.0;
  bool exact = true;
};

/// Fronts up to this size use exact inclusion-exclusion.
inline constexpr std::size_t kExactHypervolumeLimit = 25;
inline constexpr std::size_t kMonteCarloSamples = 1'000'000;

/// Volume dominated by `front` (maximization) above `reference`.  Points
/// that do not strictly dominate the reference contribute nothing.
HypervolumeResult hypervolume(const std::vector<Point5>& front,
                              const Point5& reference = {});

/// Exact inclusion-exclusion; exponential in front size.
double hypervolume_exact(const std::vector<Point5>& front,
                         const Point5& reference = {});

/// Seeded Monte-Carlo estimate over the box [reference, max of front].
HypervolumeResult hypervolume_monte_carlo(const std::vector<Point5>& front,
                                          const Point5& reference = {},
                                          std::size_t samples = kMonteCarloSamples,
                                          std::uint64_t seed = 0x5eed);

std::vector<Point5> objective_points(const std::vector<ArchiveEntry>& entries);

}  // namespace odfl
