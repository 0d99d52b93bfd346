#include <algorithm>
#include <cmath>
#include <limits>

#include "odfl/oracle.hpp"
#include "odfl/rng.hpp"

namespace odfl {
namespace {

bool weakly_dominates(const Point5& a, const Point5& b) {
  for (int k = 0; k < kObjectiveCount; ++k) {
    if (a[k] < b[k]) return false;
  }
  return true;
}

// Drops points that cannot add volume: those not strictly above the
// reference, duplicates, and weakly dominated ones.
std::vector<Point5> reduce(const std::vector<Point5>& front,
                           const Point5& ref) {
  std::vector<Point5> pts;
  for (const auto& p : front) {
    bool inside = true;
    for (int k = 0; k < kObjectiveCount; ++k) inside = inside && p[k] > ref[k];
    if (inside) pts.push_back(p);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  std::vector<Point5> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool covered = false;
    for (std::size_t j = 0; j < pts.size() && !covered; ++j) {
      covered = j != i && weakly_dominates(pts[j], pts[i]);
    }
    if (!covered) out.push_back(pts[i]);
  }
  return out;
}

double box_volume(const Point5& corner, const Point5& ref) {
  double v = 1.0;
  for (int k = 0; k < kObjectiveCount; ++k) {
    v *= std::max(0.0, corner[k] - ref[k]);
  }
  return v;
}

// Sum over subsets containing points [start..) of the signed intersection
// volumes, extending the running intersection `corner`.
double inclusion_exclusion(const std::vector<Point5>& pts, std::size_t start,
                           const Point5& corner, int sign, const Point5& ref) {
  double total = 0.0;
  for (std::size_t i = start; i < pts.size(); ++i) {
    Point5 next;
    for (int k = 0; k < kObjectiveCount; ++k) {
      next[k] = std::min(corner[k], pts[i][k]);
    }
    const double v = box_volume(next, ref);
    if (v == 0.0) continue;
    total += sign * v;
    total += inclusion_exclusion(pts, i + 1, next, -sign, ref);
  }
  return total;
}

}  // namespace

double hypervolume_exact(const std::vector<Point5>& front, const Point5& ref) {
  const auto pts = reduce(front, ref);
  if (pts.empty()) return 0.0;
  Point5 top;
  top.fill(std::numeric_limits<double>::infinity());
  return inclusion_exclusion(pts, 0, top, +1, ref);
}

HypervolumeResult hypervolume_monte_carlo(const std::vector<Point5>& front,
                                          const Point5& ref,
                                          std::size_t samples,
                                          std::uint64_t seed) {
  const auto pts = reduce(front, ref);
  if (pts.empty() || samples == 0) return {0.0, 0.0, false};
  Point5 upper = ref;
  for (const auto& p : pts) {
    for (int k = 0; k < kObjectiveCount; ++k) upper[k] = std::max(upper[k], p[k]);
  }
  const double box = box_volume(upper, ref);
  Rng rng(seed);
  std::size_t hits = 0;
  Point5 x;
  for (std::size_t s = 0; s < samples; ++s) {
    for (int k = 0; k < kObjectiveCount; ++k) x[k] = rng.uniform(ref[k], upper[k]);
    for (const auto& p : pts) {
      if (weakly_dominates(p, x)) {
        ++hits;
        break;
      }
    }
  }
  const double frac = static_cast<double>(hits) / static_cast<double>(samples);
  return {box * frac,
          box * std::sqrt(frac * (1.0 - frac) / static_cast<double>(samples)),
          false};
}

HypervolumeResult hypervolume(const std::vector<Point5>& front,
                              const Point5& ref) {
  const auto pts = reduce(front, ref);
  if (pts.size() <= kExactHypervolumeLimit) {
    return {hypervolume_exact(pts, ref), 0.0, true};
  }
  return hypervolume_monte_carlo(pts, ref);
}

}  // namespace odfl
