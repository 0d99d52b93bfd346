// Regenerates the n=10 oracle fixtures.  Run by hand; the outputs are
// committed and checked by the regression tests.
//
//   make_fixtures <fixture dir>

#include <cstdio>
#include <filesystem>
#include <string>

#include "odfl/oracle.hpp"
#include "support/fixtures.hpp"
#include "support/instances.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: make_fixtures <dir>\n");
    return 2;
  }
  const std::filesystem::path dir = argv[1];
  std::filesystem::create_directories(dir);
  std::uint64_t seed = 1000;
  for (const auto& name : odfl::testing::kSmallFixtures) {
    odfl::ProblemInstance p;
    // Skip draws that admit nothing; those belong in the infeasibility tests.
    do {
      p = odfl::testing::random_instance(
          seed++, {.n = 10, .areas = 3, .incapable_share = 0.2, .equal_weights = true});
    } while (!odfl::testing::naive_has_feasible(p));
    const auto front = odfl::enumerate_pareto(p);
    odfl::save_instance(p, dir / (std::string(name) + ".json"));
    odfl::write_json_file(odfl::testing::front_to_json(front),
                          dir / (std::string(name) + ".front.json"));
    std::printf("%s: front %zu\n", name, front.size());
  }
  return 0;
}
