#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rescon/sim.hpp"

namespace rescon::scenario {

// Process exit codes shared by every command.
inline constexpr int kExitOk = 0;            // verdict true / run finished
inline constexpr int kExitVerdictFalse = 1;  // checked property is false
inline constexpr int kExitConfig = 2;        // bad input or configuration
inline constexpr int kExitRuntime = 3;       // solver/numeric failure
inline constexpr int kExitCapacity = 4;      // exhaustive check too large

// A run description: a seed-independent config template plus the seed lists
// used to derive per-run configurations.
struct Scenario {
  std::string name;
  std::string description;
  sim::RunConfig base;               // seed field is filled per run
  std::uint64_t adversary_seed = 0;  // mixed with the run seed
  std::uint64_t data_seed = 0;       // mixed with the run seed (learning)
  std::vector<std::uint64_t> seeds;
};

// Parses the strict JSON description (unknown keys anywhere are rejected).
// Throws ConfigError with a message naming the offending key or value.
Scenario parse_scenario(const std::string& json_text);

// Loads `source` as a file when one exists at that path, else as a built-in
// preset name. Throws ConfigError when neither resolves.
Scenario load_scenario(const std::string& source);

std::vector<std::string> preset_names();
bool is_preset(const std::string& name);
std::string preset_text(const std::string& name);  // throws ConfigError

// The concrete configuration for one run seed: initial states follow the
// seed; adversary and data streams mix their block seeds with it; learning
// data is synthesized here.
sim::RunConfig config_for_seed(const Scenario& sc, std::uint64_t seed);

// One state per line, comma-separated coordinates; '#' comments and an
// optional alphabetic header line are skipped. Labels are assigned 1..N in
// file order.
geometry::PointSet load_states_csv(const std::string& path);

struct RunOptions {
  std::string out_dir = "out";
  std::optional<std::vector<std::uint64_t>> seeds_override;
};

// `rescon run`: executes every seed, writes out_dir/seed-<s>/{metrics.csv,
// final_states.csv, *.svg} and out_dir/summary.txt.
int cmd_run(const std::string& source, const RunOptions& opt,
            std::ostream& out, std::ostream& err);

// `rescon verify --robust R`
int cmd_verify_robust(const std::string& graph_path, int r, std::ostream& out,
                      std::ostream& err);

// `rescon verify --corollary1 N KAPPA_BAR IDS` (ids 1-based)
int cmd_verify_corollary1(const std::string& graph_path, int n, int kappa_bar,
                          const std::vector<int>& f_set_one_based,
                          std::ostream& out, std::ostream& err);

struct CombineOptions {
  int self_id = 1;
  int kappa = 0;
  int sigma = 0;  // 0: dim * kappa + 2
  bool trace = false;
};

// `rescon combine`: one resilient combination over the states in a CSV.
int cmd_combine(const std::string& states_csv, const CombineOptions& opt,
                std::ostream& out, std::ostream& err);

}  // namespace rescon::scenario
