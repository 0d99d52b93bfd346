#pragma once

// Subcommands of the `odfl` tool.  Each returns a process exit code and
// writes diagnostics to `err`; the CLI binary only parses arguments.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace odfl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInfeasible = 3;

inline constexpr const char* kToolVersion = "0.1.0";

namespace fs = std::filesystem;

/// Thrown for bad input; mapped to kExitUsage.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GenerateArgs {
  std::optional<fs::path> config;  // WorldConfig JSON; defaults if absent
  fs::path out = "world";
  std::optional<std::uint64_t> seed;
};

struct OptimizeArgs {
  fs::path instance;
  std::optional<fs::path> config;  // GaConfig JSON
  fs::path out = "optimize";
  std::optional<std::uint64_t> seed;
};

struct OracleArgs {
  fs::path instance;
  fs::path out = "oracle";
  unsigned workers = 1;
};

struct SimulateArgs {
  fs::path world;
  std::optional<fs::path> config;  // SimConfig JSON
  fs::path out = "simulate";
  std::optional<std::uint64_t> seed;
  /// More than one runs seeds seed, seed+1, ... and writes a summary.
  int seeds = 1;
  /// Concurrent runs in batch mode; outputs do not depend on it.
  unsigned jobs = 1;
  std::optional<unsigned> workers;
};

struct CompareArgs {
  fs::path world;
  std::vector<fs::path> configs;
  fs::path out = "compare";
  std::optional<std::uint64_t> seed;
  int seeds = 1;
  unsigned jobs = 1;
};

int cmd_generate(const GenerateArgs& args, std::ostream& err);
int cmd_optimize(const OptimizeArgs& args, std::ostream& err);
int cmd_oracle(const OracleArgs& args, std::ostream& err);
int cmd_simulate(const SimulateArgs& args, std::ostream& err);
int cmd_compare(const CompareArgs& args, std::ostream& err);

/// Files whose bytes depend on the wall clock: manifest timestamps.  Keys
/// listed here are the only difference between two identical invocations.
inline constexpr const char* kManifestTimeKeys[] = {"started_at", "finished_at"};

}  // namespace odfl::cli
