#include "odfl/oracle.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace odfl {
namespace {

void insert_nondominated(std::vector<ArchiveEntry>& front, ArchiveEntry cand) {
  for (const auto& e : front) {
    if (dominates(e.objectives, cand.objectives)) return;
  }
  std::erase_if(front, [&](const ArchiveEntry& e) {
    return dominates(cand.objectives, e.objectives);
  });
  front.push_back(std::move(cand));
}

double component_sum(const ObjectiveVector& v) {
  return std::accumulate(v.f.begin(), v.f.end(), 0.0);
}

std::vector<ArchiveEntry> nondominated(std::vector<ArchiveEntry> entries) {
  // Dominators have larger component sums, so visiting in that order keeps
  // the working front small.
  std::stable_sort(entries.begin(), entries.end(),
                   [](const ArchiveEntry& a, const ArchiveEntry& b) {
                     return component_sum(a.objectives) >
                            component_sum(b.objectives);
                   });
  std::vector<ArchiveEntry> front;
  for (auto& e : entries) insert_nondominated(front, std::move(e));
  return front;
}

std::vector<ArchiveEntry> enumerate_range(const ProblemInstance& p,
                                          std::uint64_t begin,
                                          std::uint64_t end) {
  const auto n = p.size();
  std::vector<ArchiveEntry> feasible;
  SelectionVector sel(n);
  for (std::uint64_t mask = begin; mask < end; ++mask) {
    // Gene 0 is the most significant bit, so each range shares a gene prefix.
    for (std::size_t i = 0; i < n; ++i) sel.set(i, (mask >> (n - 1 - i)) & 1U);
    if (!is_feasible(p, sel)) continue;
    feasible.push_back({sel, eval_objectives(p, sel)});
  }
  return nondominated(std::move(feasible));
}

}  // namespace

std::vector<ArchiveEntry> enumerate_pareto(const ProblemInstance& p,
                                           unsigned workers) {
  if (p.size() > kMaxOracleClients) {
    throw std::invalid_argument("exhaustive oracle refuses n = " +
                                std::to_string(p.size()) + " > 20");
  }
  const std::uint64_t total = std::uint64_t{1} << p.size();
  workers = std::max(1U, std::min<unsigned>(workers, static_cast<unsigned>(total)));

  std::vector<std::vector<ArchiveEntry>> parts(workers);
  {
    std::vector<std::jthread> threads;
    for (unsigned w = 0; w < workers; ++w) {
      const auto begin = total * w / workers;
      const auto end = total * (w + 1) / workers;
      threads.emplace_back(
          [&, w, begin, end] { parts[w] = enumerate_range(p, begin, end); });
    }
  }
  std::vector<ArchiveEntry> merged;
  for (auto& part : parts) {
    for (auto& e : part) merged.push_back(std::move(e));
  }
  auto front = nondominated(std::move(merged));
  std::sort(front.begin(), front.end(),
            [](const ArchiveEntry& a, const ArchiveEntry& b) {
              return a.selection < b.selection;
            });
  return front;
}

std::vector<Point5> objective_points(const std::vector<ArchiveEntry>& entries) {
  std::vector<Point5> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.objectives.f);
  return out;
}

}  // namespace odfl
