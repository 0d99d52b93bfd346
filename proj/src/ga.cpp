#include "odfl/ga.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <set>

namespace odfl {

using nlohmann::json;

void to_json(json& j, const GaConfig& c) {
  j = json{{"population_size", c.population_size},
           {"generations", c.generations},
           {"crossover_prob", c.crossover_prob},
           {"tournament_size", c.tournament_size},
           {"seed", c.seed},
           {"archive_cap", c.archive_cap}};
}

void from_json(const json& j, GaConfig& c) {
  GaConfig d;
  c.population_size = j.value("population_size", d.population_size);
  c.generations = j.value("generations", d.generations);
  c.crossover_prob = j.value("crossover_prob", d.crossover_prob);
  c.tournament_size = j.value("tournament_size", d.tournament_size);
  c.seed = j.value("seed", d.seed);
  c.archive_cap = j.value("archive_cap", d.archive_cap);
}

void validate(const GaConfig& c) {
  if (c.population_size < 2) {
    throw std::invalid_argument("population_size must be >= 2");
  }
  if (c.generations < 0) throw std::invalid_argument("generations must be >= 0");
  if (!(c.crossover_prob >= 0.0 && c.crossover_prob <= 1.0)) {
    throw std::invalid_argument("crossover_prob must be in [0, 1]");
  }
  if (c.tournament_size < 2) {
    throw std::invalid_argument("tournament_size must be >= 2");
  }
  if (c.archive_cap < 1) throw std::invalid_argument("archive_cap must be >= 1");
}

// ---------------------------------------------------------------------------
// Existence check

std::string first_unsatisfiable_family(const ProblemInstance& p) {
  const int n = static_cast<int>(p.size());
  const auto& t = p.thresholds;
  if (t.min_selected > t.max_selected || t.min_selected > n ||
      t.max_selected < 0) {
    return "cardinality";
  }
  int fit = 0;
  int low = 0;
  int high = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!fits_resources(p, i)) continue;
    ++fit;
    if (!stays_long_enough(p, i)) continue;
    (is_high_movement(p, i) ? high : low)++;
  }
  if (fit < t.min_selected) return "resources";
  if (low + high < t.min_selected) return "availability";
  const int upper = std::min(t.max_selected, low + high);
  for (int s = std::max(t.min_selected, 0); s <= upper; ++s) {
    if (s <= low + std::min(high, high_movement_cap(t.high_movement_fraction, s))) {
      return "";
    }
  }
  return "movement_cap";
}

// ---------------------------------------------------------------------------
// Repair

namespace {

struct RepairContext {
  const ProblemInstance& p;
  std::vector<bool> capable;

  explicit RepairContext(const ProblemInstance& inst)
      : p(inst), capable(inst.size()) {
    for (std::size_t i = 0; i < inst.size(); ++i) {
      capable[i] = fits_resources(inst, i) && stays_long_enough(inst, i);
    }
  }

  int priority(std::size_t i) const { return p.clients[i].priority; }

  // Highest priority unselected capable client accepted by `ok`; ties go to
  // the lower index.
  template <typename Pred>
  std::optional<std::size_t> by_priority(const SelectionVector& sel,
                                         Pred ok) const {
    std::optional<std::size_t> best;
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (sel[j] || !capable[j] || !ok(j)) continue;
      if (!best || priority(j) > priority(*best)) best = j;
    }
    return best;
  }

  int high_count(const SelectionVector& sel) const {
    int h = 0;
    for (std::size_t i = 0; i < sel.size(); ++i) {
      if (sel[i] && is_high_movement(p, i)) ++h;
    }
    return h;
  }

  int cap(int selected) const {
    return high_movement_cap(p.thresholds.high_movement_fraction, selected);
  }
};

void overload_rule(const RepairContext& ctx, SelectionVector& sel) {
  const auto& p = ctx.p;
  for (std::size_t i = 0; i < sel.size(); ++i) {
    if (!sel[i] || fits_resources(p, i)) continue;
    sel.set(i, false);
    const int area = p.clients[i].area_id;
    if (auto j = ctx.by_priority(
            sel, [&](std::size_t k) { return p.clients[k].area_id == area; })) {
      sel.set(*j, true);
    }
  }
}

void staying_time_rule(const RepairContext& ctx, SelectionVector& sel) {
  const auto& p = ctx.p;
  for (std::size_t i = 0; i < sel.size(); ++i) {
    if (!sel[i] || stays_long_enough(p, i)) continue;
    sel.set(i, false);
    std::optional<std::size_t> best;
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (sel[j] || !ctx.capable[j]) continue;
      if (!best || p.clients[j].movements > p.clients[*best].movements) {
        best = j;
      }
    }
    if (best) sel.set(*best, true);
  }
}

void high_movement_rule(const RepairContext& ctx, SelectionVector& sel) {
  const auto& p = ctx.p;
  int high = ctx.high_count(sel);
  while (high > ctx.cap(sel.count())) {
    std::size_t victim = 0;
    while (!(sel[victim] && is_high_movement(p, victim))) ++victim;
    sel.set(victim, false);
    --high;
    if (auto j = ctx.by_priority(
            sel, [&](std::size_t k) { return !is_high_movement(p, k); })) {
      sel.set(*j, true);
    }
  }
}

void cardinality_rule(const RepairContext& ctx, SelectionVector& sel) {
  const auto& p = ctx.p;
  const auto n = p.size();
  const int lo = p.thresholds.min_selected;
  const int hi = p.thresholds.max_selected;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return ctx.priority(a) > ctx.priority(b);
  });

  int selected = sel.count();
  int high = ctx.high_count(sel);
  bool progress = true;
  while (selected < lo && progress) {
    progress = false;
    for (auto j : order) {
      if (selected >= lo) break;
      if (sel[j] || !ctx.capable[j]) continue;
      const bool is_high = is_high_movement(p, j);
      if (is_high && high + 1 > ctx.cap(selected + 1)) continue;
      sel.set(j, true);
      ++selected;
      high += is_high ? 1 : 0;
      progress = true;
    }
  }

  // Lowest priority first; a removal must keep the movement cap satisfied.
  std::reverse(order.begin(), order.end());
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return ctx.priority(a) < ctx.priority(b);
  });
  while (selected > hi) {
    bool removed = false;
    for (auto j : order) {
      if (!sel[j]) continue;
      const bool is_high = is_high_movement(p, j);
      if (high - (is_high ? 1 : 0) > ctx.cap(selected - 1)) continue;
      sel.set(j, false);
      --selected;
      high -= is_high ? 1 : 0;
      removed = true;
      break;
    }
    if (!removed) break;
  }
}

}  // namespace

RepairResult repair(const ProblemInstance& p, SelectionVector sel) {
  if (sel.size() != p.size()) {
    throw std::invalid_argument("selection length does not match instance");
  }
  if (is_feasible(p, sel)) return {std::move(sel), false};

  const RepairContext ctx(p);
  overload_rule(ctx, sel);
  staying_time_rule(ctx, sel);
  high_movement_rule(ctx, sel);
  cardinality_rule(ctx, sel);
  const bool ok = is_feasible(p, sel);
  return {std::move(sel), !ok};
}

// ---------------------------------------------------------------------------
// Operators

std::vector<SelectionVector> init_population(const ProblemInstance& p,
                                             const GaConfig& cfg, Rng& rng) {
  if (auto family = first_unsatisfiable_family(p); !family.empty()) {
    throw InfeasibleInstance(family, "no feasible selection exists: " + family +
                                         " constraints cannot be satisfied");
  }
  const auto n = p.size();
  const double q =
      n == 0 ? 0.0
             : std::clamp(2.0 * p.thresholds.min_selected / n, 0.05, 0.5);
  std::vector<SelectionVector> population;
  population.reserve(cfg.population_size);
  for (int m = 0; m < cfg.population_size; ++m) {
    SelectionVector sel(n);
    for (std::size_t i = 0; i < n; ++i) sel.set(i, rng.bernoulli(q));
    auto fixed = repair(p, std::move(sel));
    if (fixed.unrepairable) {
      throw std::logic_error("repair failed on a feasible instance");
    }
    population.push_back(std::move(fixed.selection));
  }
  return population;
}

std::size_t tournament_winner(std::span<const std::size_t> entrants,
                              std::span<const double> scores) {
  if (entrants.empty()) throw std::invalid_argument("empty tournament");
  std::size_t best = entrants[0];
  for (auto idx : entrants) {
    if (scores[idx] > scores[best] ||
        (scores[idx] == scores[best] && idx < best)) {
      best = idx;
    }
  }
  return best;
}

std::size_t tournament_select(std::span<const double> scores, int k,
                              Rng& rng) {
  if (scores.empty()) throw std::invalid_argument("empty population");
  const auto size = scores.size();
  const auto draws = std::min<std::size_t>(static_cast<std::size_t>(k), size);
  std::vector<std::size_t> entrants;
  entrants.reserve(draws);
  while (entrants.size() < draws) {
    const auto idx = static_cast<std::size_t>(rng.below(size));
    if (std::find(entrants.begin(), entrants.end(), idx) == entrants.end()) {
      entrants.push_back(idx);
    }
  }
  return tournament_winner(entrants, scores);
}

std::pair<SelectionVector, SelectionVector> crossover_at(
    const SelectionVector& a, const SelectionVector& b, std::size_t cut) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("crossover parents differ in length");
  }
  if (cut == 0 || cut >= a.size()) {
    throw std::invalid_argument("crossover cut out of range");
  }
  SelectionVector c1 = a;
  SelectionVector c2 = b;
  for (std::size_t i = cut; i < a.size(); ++i) {
    c1.set(i, b[i]);
    c2.set(i, a[i]);
  }
  return {std::move(c1), std::move(c2)};
}

std::pair<SelectionVector, SelectionVector> one_point_crossover(
    const SelectionVector& a, const SelectionVector& b, Rng& rng,
    double crossover_prob) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("crossover parents differ in length");
  }
  if (a.size() < 2 || !rng.bernoulli(crossover_prob)) return {a, b};
  const auto cut = 1 + static_cast<std::size_t>(rng.below(a.size() - 1));
  return crossover_at(a, b, cut);
}

SelectionVector bitflip_mutate(const SelectionVector& sel, Rng& rng) {
  SelectionVector out = sel;
  if (sel.size() == 0) return out;
  const double rate = 1.0 / static_cast<double>(sel.size());
  for (std::size_t i = 0; i < sel.size(); ++i) {
    if (rng.bernoulli(rate)) out.flip(i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Archive

const ArchiveEntry& ParetoArchive::best() const {
  if (entries_.empty()) throw std::logic_error("archive is empty");
  const ArchiveEntry* best = &entries_.front();
  for (const auto& e : entries_) {
    if (e.objectives.scalar > best->objectives.scalar ||
        (e.objectives.scalar == best->objectives.scalar &&
         e.selection < best->selection)) {
      best = &e;
    }
  }
  return *best;
}

bool ParetoArchive::update(const ProblemInstance& instance,
                           const SelectionVector& sel,
                           const ObjectiveVector& obj) {
  if (!is_feasible(instance, sel)) {
    throw std::invalid_argument("archive rejects infeasible selection " +
                                sel.to_string());
  }
  for (const auto& e : entries_) {
    if (e.selection == sel || dominates(e.objectives, obj)) return false;
  }
  std::erase_if(entries_, [&](const ArchiveEntry& e) {
    return dominates(obj, e.objectives);
  });
  entries_.push_back({sel, obj});
  if (entries_.size() > static_cast<std::size_t>(cap_)) prune();
  return true;
}

void ParetoArchive::prune() {
  while (entries_.size() > static_cast<std::size_t>(cap_)) {
    // The best-scalar entry is never pruned, so the best fitness found so far
    // survives every update.
    const SelectionVector keep = best().selection;
    std::size_t victim = entries_.size();
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].selection == keep) continue;
      double crowding = 0.0;
      for (int k = 0; k < kObjectiveCount; ++k) {
        double gap = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < entries_.size(); ++j) {
          if (j == i) continue;
          gap = std::min(gap, std::abs(entries_[i].objectives.f[k] -
                                       entries_[j].objectives.f[k]));
        }
        crowding += gap;
      }
      if (crowding <= lowest) {
        lowest = crowding;
        victim = i;
      }
    }
    entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(victim));
  }
}

// ---------------------------------------------------------------------------
// Main loop

namespace {

struct Scored {
  SelectionVector selection;
  ObjectiveVector objectives;
};

}  // namespace

SolveResult solve(const ProblemInstance& p, const GaConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);

  std::vector<Scored> population;
  for (auto& sel : init_population(p, cfg, rng)) {
    auto obj = eval_objectives(p, sel);
    population.push_back({std::move(sel), obj});
  }

  SolveResult result{ParetoArchive(cfg.archive_cap), {}, {}, {}};
  auto& archive = result.archive;
  for (const auto& s : population) archive.update(p, s.selection, s.objectives);
  result.best_scalar_history.push_back(archive.best().objectives.scalar);

  const auto pop_size = static_cast<std::size_t>(cfg.population_size);
  // Bounded so an adversarial instance cannot stall a generation.
  const std::size_t max_attempts = 20 * pop_size;

  for (int gen = 0; gen < cfg.generations; ++gen) {
    std::vector<const Scored*> pool;
    std::vector<Scored> archived;
    archived.reserve(archive.size());
    for (const auto& e : archive.entries()) {
      archived.push_back({e.selection, e.objectives});
    }
    for (const auto& s : population) pool.push_back(&s);
    for (const auto& s : archived) pool.push_back(&s);
    std::vector<double> scores;
    scores.reserve(pool.size());
    for (const auto* s : pool) scores.push_back(s->objectives.scalar);

    std::vector<Scored> offspring;
    offspring.reserve(pop_size);
    for (std::size_t attempt = 0;
         offspring.size() < pop_size && attempt < max_attempts; ++attempt) {
      const auto& a = pool[tournament_select(scores, cfg.tournament_size, rng)];
      const auto& b = pool[tournament_select(scores, cfg.tournament_size, rng)];
      auto [c1, c2] =
          one_point_crossover(a->selection, b->selection, rng, cfg.crossover_prob);
      for (auto* child : {&c1, &c2}) {
        if (offspring.size() >= pop_size) break;
        auto fixed = repair(p, bitflip_mutate(*child, rng));
        if (fixed.unrepairable) continue;
        auto obj = eval_objectives(p, fixed.selection);
        offspring.push_back({std::move(fixed.selection), obj});
      }
    }

    for (const auto& s : offspring) archive.update(p, s.selection, s.objectives);

    for (auto& s : offspring) population.push_back(std::move(s));
    // Survivors are drawn from the union as a set: one copy per genome, so
    // the population cannot collapse onto clones of the current best.
    std::stable_sort(population.begin(), population.end(),
                     [](const Scored& x, const Scored& y) {
                       return x.objectives.scalar > y.objectives.scalar;
                     });
    std::set<SelectionVector> seen;
    std::vector<Scored> survivors;
    survivors.reserve(pop_size);
    for (auto& s : population) {
      if (survivors.size() >= pop_size) break;
      if (seen.insert(s.selection).second) survivors.push_back(std::move(s));
    }
    population = std::move(survivors);
    result.best_scalar_history.push_back(archive.best().objectives.scalar);
  }

  result.recommendation = archive.best().selection;
  result.recommendation_objectives = archive.best().objectives;
  return result;
}

json entry_to_json(const SelectionVector& sel, const ObjectiveVector& obj) {
  json j{{"genes", sel.to_string()}};
  for (int k = 0; k < kObjectiveCount; ++k) {
    j["f" + std::to_string(k + 1)] = obj.f[k];
  }
  j["scalar"] = obj.scalar;
  return j;
}

json archive_to_json(const ParetoArchive& archive) {
  std::vector<const ArchiveEntry*> sorted;
  for (const auto& e : archive.entries()) sorted.push_back(&e);
  std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
    return a->selection < b->selection;
  });
  json out = json::array();
  for (const auto* e : sorted) out.push_back(entry_to_json(e->selection, e->objectives));
  return out;
}

}  // namespace odfl
