#include <doctest.h>

#include "odfl/objectives.hpp"
#include "support/instances.hpp"
#include "support/toy.hpp"

using namespace odfl;
using odfl::testing::light_load;
using odfl::testing::roomy_client;
using odfl::testing::toy_instance;

namespace {

SelectionVector sel(const char* bits) { return SelectionVector::from_string(bits); }

ProblemInstance one_client(const UtilizationProfile& u) {
  ProblemInstance p;
  p.area_count = 1;
  p.requests.requested = {0};
  p.clients = {roomy_client(0, 0)};
  p.utilizations = {u};
  p.thresholds = {.min_round_time_secs = 600.0,
                  .movement_threshold = 100.0,
                  .high_movement_fraction = 1.0,
                  .min_selected = 0,
                  .max_selected = 1};
  return p;
}

ObjectiveVector vec(std::array<double, 5> f) {
  ObjectiveVector v;
  v.f = f;
  return v;
}

}  // namespace

TEST_CASE("resource checks") {
  SUBCASE("every utilization under capacity") {
    CHECK(check_resources(one_client(light_load()), sel("1")).empty());
  }
  SUBCASE("cpu overload on a selected client") {
    auto u = light_load();
    u.cpu = 5.0;
    const auto v = check_resources(one_client(u), sel("1"));
    REQUIRE(v.size() == 1);
    CHECK(v[0].kind == ViolationKind::Cpu);
    CHECK(v[0].client_id == 0);
  }
  SUBCASE("overload on an unselected client imposes nothing") {
    auto u = light_load();
    u.cpu = 5.0;
    CHECK(check_resources(one_client(u), sel("0")).empty());
  }
  SUBCASE("each resource reported separately") {
    UtilizationProfile u{.cpu = 9, .memory = 9000, .battery = 90, .disk = 90000};
    CHECK(check_resources(one_client(u), sel("1")).size() == 4);
  }
}

TEST_CASE("availability checks") {
  auto p = one_client(light_load());
  CHECK(check_availability(p, sel("1")).empty());
  p.clients[0].availability_secs = 300.0;
  const auto v = check_availability(p, sel("1"));
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == ViolationKind::Availability);
  p.thresholds.min_round_time_secs = 0.0;
  p.clients[0].availability_secs = 0.0;
  CHECK(check_availability(p, sel("1")).empty());
  CHECK(check_availability(p, sel("0")).empty());
}

TEST_CASE("movement cap") {
  auto p = toy_instance();
  p.clients[0].movements = 10;
  p.clients[1].movements = 2;
  p.clients[2].movements = 9;
  p.thresholds.movement_threshold = 8;
  p.thresholds.high_movement_fraction = 0.5;
  const auto v = check_movement_cap(p, sel("101"));
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == ViolationKind::MovementCap);
  CHECK(check_movement_cap(p, sel("100")).empty());
  CHECK(high_movement_cap(0.5, 2) == 1);
  CHECK(high_movement_cap(0.5, 1) == 1);
  p.thresholds.movement_threshold = 100;
  for (const char* bits : {"000", "001", "010", "011", "100", "101", "110", "111"}) {
    CHECK(check_movement_cap(p, sel(bits)).empty());
  }
}

TEST_CASE("cardinality") {
  auto p = toy_instance();
  p.thresholds.min_selected = 1;
  p.thresholds.max_selected = 3;
  CHECK(check_cardinality(p, sel("110")).empty());
  auto low = check_cardinality(p, sel("000"));
  REQUIRE(low.size() == 1);
  CHECK(low[0].kind == ViolationKind::CardinalityLow);
  p.thresholds.max_selected = 2;
  auto high = check_cardinality(p, sel("111"));
  REQUIRE(high.size() == 1);
  CHECK(high[0].kind == ViolationKind::CardinalityHigh);
}

TEST_CASE("is_feasible is the conjunction") {
  auto p = toy_instance();
  CHECK(is_feasible(p, sel("000")));
  CHECK(is_feasible(p, sel("111")));
  p.utilizations[1].memory = 4096;
  CHECK_FALSE(is_feasible(p, sel("010")));
  CHECK(is_feasible(p, sel("101")));
}

TEST_CASE("length mismatch throws") {
  const auto p = toy_instance();
  CHECK_THROWS_AS(check_resources(p, sel("11")), std::invalid_argument);
  CHECK_THROWS_AS(check_availability(p, sel("1111")), std::invalid_argument);
  CHECK_THROWS_AS(check_movement_cap(p, sel("1")), std::invalid_argument);
  CHECK_THROWS_AS(check_cardinality(p, sel("")), std::invalid_argument);
  CHECK_THROWS_AS(eval_objectives(p, sel("11")), std::invalid_argument);
}

TEST_CASE("objective values on the worked instance") {
  const auto p = toy_instance();
  SUBCASE("two of three") {
    const auto v = eval_objectives(p, sel("110"));
    CHECK(v.f[0] == doctest::Approx(1.0 / 3));
    CHECK(v.f[1] == doctest::Approx(8.0 / 15));
    CHECK(v.f[2] == doctest::Approx(0.3));
    CHECK(v.f[3] == doctest::Approx(1.0));
    CHECK(v.f[4] == doctest::Approx(0.5));
    CHECK(v.scalar == doctest::Approx(0.5333).epsilon(1e-3));
  }
  SUBCASE("empty selection") {
    const auto v = eval_objectives(p, sel("000"));
    CHECK(v.f == std::array<double, 5>{1, 0, 0, 0, 0});
    CHECK(v.scalar == doctest::Approx(0.2));
  }
  SUBCASE("everyone") {
    const auto v = eval_objectives(p, sel("111"));
    CHECK(v.f[0] == doctest::Approx(0.0));
    CHECK(v.f[1] == doctest::Approx(1.0));
    CHECK(v.f[2] == doctest::Approx(7.0 / 30));
    CHECK(v.f[3] == doctest::Approx(1.0));
    CHECK(v.f[4] == doctest::Approx(1.0 / 3));
    CHECK(v.scalar == doctest::Approx(0.5133).epsilon(1e-3));
  }
  SUBCASE("no area requested is neutral") {
    auto q = p;
    q.requests.requested = {0, 0};
    CHECK(eval_objectives(q, sel("010")).f[4] == 1.0);
  }
}

TEST_CASE("dominance") {
  const auto a = vec({.3, .5, .3, 1, .5});
  const auto b = vec({.3, .4, .3, 1, .5});
  CHECK(dominates(a, b));
  CHECK_FALSE(dominates(b, a));
  CHECK_FALSE(dominates(a, a));
  const auto c = vec({.4, .1, .3, 1, .5});
  const auto d = vec({.1, .4, .3, 1, .5});
  CHECK_FALSE(dominates(c, d));
  CHECK_FALSE(dominates(d, c));
}

TEST_CASE("checkers agree with independent inequalities on random pairs") {
  odfl::Rng rng(99);
  for (std::uint64_t k = 0; k < 500; ++k) {
    const int n = 3 + static_cast<int>(k % 14);
    const auto p = odfl::testing::random_instance(
        5000 + k, {.n = n, .areas = 1 + static_cast<int>(k % 5)});
    std::vector<std::uint8_t> g(n);
    for (auto& x : g) x = rng.bernoulli(0.5) ? 1 : 0;
    const SelectionVector s(g);
    CHECK(is_feasible(p, s) == odfl::testing::naive_feasible(p, g));
    const auto v = eval_objectives(p, s);
    const auto f = odfl::testing::naive_objectives(p, g);
    double scalar = 0;
    for (int i = 0; i < kObjectiveCount; ++i) {
      CHECK(v.f[i] == doctest::Approx(f[i]).epsilon(1e-12));
      CHECK(v.f[i] >= 0.0);
      CHECK(v.f[i] <= 1.0);
      scalar += p.weights.w[i] * f[i];
    }
    CHECK(v.scalar == doctest::Approx(scalar).epsilon(1e-12));
  }
}
