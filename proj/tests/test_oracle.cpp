#include <doctest.h>

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "odfl/oracle.hpp"
#include "support/fixtures.hpp"
#include "support/instances.hpp"
#include "support/toy.hpp"

using namespace odfl;
using odfl::testing::light_load;
using odfl::testing::roomy_client;

namespace {

ProblemInstance identical_clients(int n) {
  ProblemInstance p;
  p.area_count = 1;
  p.requests.requested = {0};
  for (int i = 0; i < n; ++i) {
    auto c = roomy_client(i, 0);
    c.movements = 4.0;
    c.priority = 3;
    p.clients.push_back(c);
    p.utilizations.push_back(light_load());
  }
  p.thresholds = {.min_round_time_secs = 600.0,
                  .movement_threshold = 100.0,
                  .high_movement_fraction = 1.0,
                  .min_selected = 0,
                  .max_selected = n};
  return p;
}

std::vector<std::string> gene_strings(const std::vector<ArchiveEntry>& front) {
  std::vector<std::string> out;
  for (const auto& e : front) out.push_back(e.selection.to_string());
  return out;
}

}  // namespace

TEST_CASE("single client gives a front of two") {
  const auto front = enumerate_pareto(identical_clients(1));
  REQUIRE(front.size() == 2);
  CHECK(front[0].selection.to_string() == "0");
  CHECK(front[1].selection.to_string() == "1");
}

TEST_CASE("symmetric selections are both kept") {
  const auto front = enumerate_pareto(identical_clients(2));
  const auto genes = gene_strings(front);
  CHECK(std::count(genes.begin(), genes.end(), "01") == 1);
  CHECK(std::count(genes.begin(), genes.end(), "10") == 1);
  const auto& a = front[std::find(genes.begin(), genes.end(), "01") - genes.begin()];
  const auto& b = front[std::find(genes.begin(), genes.end(), "10") - genes.begin()];
  CHECK(a.objectives == b.objectives);
}

TEST_CASE("more than twenty clients are refused") {
  CHECK_THROWS_AS(enumerate_pareto(identical_clients(21)), std::invalid_argument);
}

TEST_CASE("oracle matches an independent quadratic filter") {
  for (std::uint64_t k = 0; k < 40; ++k) {
    const auto p = odfl::testing::random_instance(
        800 + k, {.n = 2 + static_cast<int>(k % 11), .areas = 1 + static_cast<int>(k % 4)});
    const auto got = enumerate_pareto(p, 1 + k % 4);
    const auto want = odfl::testing::naive_front(p);
    std::vector<std::string> a = gene_strings(got);
    std::vector<std::string> b;
    for (const auto& q : want) b.push_back(SelectionVector(q.genes).to_string());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
    CHECK(std::is_sorted(a.begin(), a.end()));
    for (const auto& x : got) {
      for (const auto& y : got) CHECK_FALSE(dominates(x.objectives, y.objectives));
    }
  }
}

TEST_CASE("result does not depend on the worker count") {
  const auto p = odfl::testing::random_instance(5, {.n = 14, .areas = 4});
  const auto one = enumerate_pareto(p, 1);
  for (unsigned w : {2u, 3u, 8u, 64u}) {
    const auto many = enumerate_pareto(p, w);
    REQUIRE(many.size() == one.size());
    for (std::size_t i = 0; i < one.size(); ++i) {
      CHECK(many[i].selection == one[i].selection);
      CHECK(many[i].objectives == one[i].objectives);
    }
  }
}

TEST_CASE("permuting clients permutes the front") {
  for (std::uint64_t k = 0; k < 10; ++k) {
    const auto p = odfl::testing::random_instance(900 + k, {.n = 9, .areas = 3});
    auto q = p;
    Rng rng(k);
    std::vector<int> perm(p.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
    rng.shuffle(perm);
    for (std::size_t i = 0; i < perm.size(); ++i) {
      q.clients[i] = p.clients[perm[i]];
      q.utilizations[i] = p.utilizations[perm[i]];
    }
    auto points = [](const std::vector<ArchiveEntry>& f) {
      std::vector<std::array<double, 5>> v;
      for (const auto& e : f) v.push_back(e.objectives.f);
      std::sort(v.begin(), v.end());
      return v;
    };
    const auto fp = points(enumerate_pareto(p));
    const auto fq = points(enumerate_pareto(q));
    REQUIRE(fp.size() == fq.size());
    for (std::size_t i = 0; i < fp.size(); ++i) {
      for (int j = 0; j < 5; ++j) CHECK(fp[i][j] == doctest::Approx(fq[i][j]).epsilon(1e-12));
    }
  }
}

TEST_CASE("committed fixture fronts are reproduced") {
  for (const char* name : odfl::testing::kSmallFixtures) {
    CAPTURE(name);
    const auto p = load_instance(odfl::testing::fixture_path(std::string(name) + ".json"));
    CHECK(validate_instance(p).empty());
    const auto frozen = odfl::testing::load_front(
        odfl::testing::fixture_path(std::string(name) + ".front.json"));
    const auto front = enumerate_pareto(p);
    REQUIRE(front.size() == frozen.size());
    for (std::size_t i = 0; i < front.size(); ++i) {
      CHECK(front[i].selection.to_string() == frozen[i].genes);
      for (int j = 0; j < kObjectiveCount; ++j) {
        CHECK(front[i].objectives.f[j] == doctest::Approx(frozen[i].f[j]).epsilon(1e-12));
      }
    }
    const auto naive = odfl::testing::naive_front(p);
    CHECK(naive.size() == frozen.size());
  }
}

TEST_CASE("hypervolume of simple fronts") {
  CHECK(hypervolume({{1, 1, 1, 1, 1}}).value == doctest::Approx(1.0));
  const auto hv = hypervolume({{0.5, 1, 1, 1, 1}, {1, 0.5, 1, 1, 1}});
  CHECK(hv.exact);
  CHECK(hv.value == doctest::Approx(0.75));
  CHECK(hypervolume({}).value == 0.0);
  CHECK(hypervolume_exact({{0.5, 0.5, 0.5, 0.5, 0.5}}) == doctest::Approx(1.0 / 32));
  // A point not strictly above the reference adds nothing.
  CHECK(hypervolume({{1, 1, 1, 1, 0}}).value == 0.0);
}

TEST_CASE("adding a non-dominated point never shrinks the volume") {
  Rng rng(12);
  std::vector<Point5> front;
  double last = 0.0;
  for (int i = 0; i < 20; ++i) {
    Point5 p;
    for (auto& x : p) x = rng.uniform(0.1, 1.0);
    bool dominated = false;
    for (const auto& q : front) {
      ObjectiveVector a, b;
      a.f = q;
      b.f = p;
      dominated = dominated || dominates(a, b);
    }
    if (dominated) continue;
    front.push_back(p);
    const double v = hypervolume_exact(front);
    CHECK(v >= last - 1e-12);
    last = v;
  }
}

TEST_CASE("monte carlo estimate agrees with the exact volume") {
  Rng rng(3);
  std::vector<Point5> front;
  for (int i = 0; i < 12; ++i) {
    Point5 p;
    for (auto& x : p) x = rng.uniform(0.2, 1.0);
    front.push_back(p);
  }
  const double exact = hypervolume_exact(front);
  const auto mc = hypervolume_monte_carlo(front, {}, 200000, 7);
  CHECK_FALSE(mc.exact);
  CHECK(mc.std_error > 0.0);
  CHECK(std::abs(mc.value - exact) < 5 * mc.std_error + 1e-9);
  const auto again = hypervolume_monte_carlo(front, {}, 200000, 7);
  CHECK(again.value == mc.value);
}

TEST_CASE("large fronts switch to sampling") {
  std::vector<Point5> front;
  for (int i = 0; i < 30; ++i) {
    const double t = (i + 1) / 31.0;
    front.push_back({t, 1 - t, 0.5, 0.5, 0.5});
  }
  const auto hv = hypervolume(front);
  CHECK_FALSE(hv.exact);
  CHECK(hv.value > 0.0);
}
