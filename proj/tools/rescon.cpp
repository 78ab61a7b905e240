#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rescon/scenario.hpp"

namespace {

// "7", "4..6", or "1,5,9" -> explicit seed list.
std::optional<std::vector<std::uint64_t>> parse_seed_spec(
    const std::string& spec, std::string* error) {
  std::vector<std::uint64_t> seeds;
  auto parse_one = [&](const std::string& tok) -> bool {
    try {
      std::size_t pos = 0;
      const unsigned long long v = std::stoull(tok, &pos);
      if (pos != tok.size()) return false;
      seeds.push_back(v);
      return true;
    } catch (const std::exception&) {
      return false;
    }
  };
  const auto dots = spec.find("..");
  if (dots != std::string::npos) {
    if (!parse_one(spec.substr(0, dots)) || !parse_one(spec.substr(dots + 2))) {
      *error = "cannot parse seed range \"" + spec + "\"";
      return std::nullopt;
    }
    const std::uint64_t lo = seeds[0], hi = seeds[1];
    if (lo > hi) {
      *error = "seed range \"" + spec + "\" has start > end";
      return std::nullopt;
    }
    seeds.clear();
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    return seeds;
  }
  std::size_t start = 0;
  while (start <= spec.size()) {
    const auto comma = spec.find(',', start);
    const std::string tok =
        spec.substr(start, comma == std::string::npos ? std::string::npos
                                                      : comma - start);
    if (!parse_one(tok)) {
      *error = "cannot parse seed list \"" + spec + "\"";
      return std::nullopt;
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return seeds;
}

// "1,2,3" -> ids.
std::optional<std::vector<int>> parse_id_list(const std::string& spec) {
  std::vector<int> ids;
  std::size_t start = 0;
  while (start <= spec.size()) {
    const auto comma = spec.find(',', start);
    const std::string tok =
        spec.substr(start, comma == std::string::npos ? std::string::npos
                                                      : comma - start);
    try {
      std::size_t pos = 0;
      ids.push_back(std::stoi(tok, &pos));
      if (pos != tok.size()) return std::nullopt;
    } catch (const std::exception&) {
      return std::nullopt;
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return ids;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "rescon: resilient constrained consensus - run simulations, verify "
      "network redundancy, and inspect single combination steps"};
  app.require_subcommand(1);

  // --- run ---------------------------------------------------------------
  auto* run = app.add_subcommand(
      "run", "Execute a scenario file or preset and write metrics");
  std::string run_source;
  std::string run_out = "out";
  std::string run_seeds;
  run->add_option("source", run_source,
                  "scenario JSON file or preset name (unconstrained-8, "
                  "unconstrained-8-naive, constrained-30, learning-8)")
      ->required();
  run->add_option("--out", run_out, "output directory (default: out)");
  run->add_option("--seeds", run_seeds,
                  "override the scenario seeds: N, A..B, or a,b,c");

  // --- verify ------------------------------------------------------------
  auto* verify = app.add_subcommand(
      "verify", "Check redundancy properties of a topology file");
  std::string verify_graph;
  int robust_r = 0;
  std::vector<std::string> corollary_args;
  verify->add_option("graph", verify_graph, "topology file")->required();
  auto* robust_opt = verify->add_option(
      "--robust", robust_r, "exhaustively decide r-robustness for this r");
  auto* corollary_opt =
      verify
          ->add_option("--corollary1", corollary_args,
                       "DIM KAPPA_BAR CORE_IDS: certify the complete-core "
                       "redundancy condition (ids 1-based, comma-separated)")
          ->expected(3);
  robust_opt->excludes(corollary_opt);
  corollary_opt->excludes(robust_opt);

  // --- combine -----------------------------------------------------------
  auto* combine = app.add_subcommand(
      "combine", "One resilient convex combination over states from a CSV");
  std::string combine_csv;
  rescon::scenario::CombineOptions copt;
  combine->add_option("states", combine_csv, "CSV of states, one per line")
      ->required();
  combine->add_option("--self", copt.self_id, "id of the combining agent (as in the id column)")
      ->required();
  combine->add_option("--kappa", copt.kappa,
                      "declared hostile in-edge count")
      ->required();
  combine->add_option("--sigma", copt.sigma,
                      "subset size (default: dim * kappa + 2)");
  combine->add_flag("--trace", copt.trace, "print every subset's fallback point");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return rescon::scenario::kExitConfig;
  }

  if (run->parsed()) {
    rescon::scenario::RunOptions opt;
    opt.out_dir = run_out;
    if (!run_seeds.empty()) {
      std::string error;
      opt.seeds_override = parse_seed_spec(run_seeds, &error);
      if (!opt.seeds_override) {
        std::cerr << "error: " << error << "\n";
        return rescon::scenario::kExitConfig;
      }
    }
    return rescon::scenario::cmd_run(run_source, opt, std::cout, std::cerr);
  }

  if (verify->parsed()) {
    if (robust_opt->count() > 0) {
      return rescon::scenario::cmd_verify_robust(verify_graph, robust_r,
                                                 std::cout, std::cerr);
    }
    if (corollary_opt->count() > 0) {
      int n = 0, kappa_bar = 0;
      try {
        n = std::stoi(corollary_args.at(0));
        kappa_bar = std::stoi(corollary_args.at(1));
      } catch (const std::exception&) {
        std::cerr << "error: --corollary1 needs DIM KAPPA_BAR CORE_IDS\n";
        return rescon::scenario::kExitConfig;
      }
      const auto ids = parse_id_list(corollary_args.at(2));
      if (!ids || ids->empty()) {
        std::cerr << "error: cannot parse core id list \""
                  << corollary_args.at(2) << "\"\n";
        return rescon::scenario::kExitConfig;
      }
      return rescon::scenario::cmd_verify_corollary1(
          verify_graph, n, kappa_bar, *ids, std::cout, std::cerr);
    }
    std::cerr << "error: verify needs --robust R or --corollary1 DIM "
                 "KAPPA_BAR CORE_IDS\n";
    return rescon::scenario::kExitConfig;
  }

  return rescon::scenario::cmd_combine(combine_csv, copt, std::cout,
                                       std::cerr);
}
