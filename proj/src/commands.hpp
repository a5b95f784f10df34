#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "config.hpp"
#include "psuper/report.hpp"

namespace psuper::cli {

struct GlobalOptions {
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool verbose = false;
};

/// Report of one configured experiment. seed is the per-experiment seed.
ExperimentReport run_experiment(const Experiment& e, int n, const PParams& P, std::uint64_t seed);

int run(const RunConfig& cfg, const GlobalOptions& g);
int tabulate(const TabulateConfig& cfg, const GlobalOptions& g);
int solve_elliptic(const SolveConfig& cfg, const GlobalOptions& g);
int solve_parabolic(const SolveConfig& cfg, const GlobalOptions& g);
int obstacle(const ObstacleConfig& cfg, const GlobalOptions& g);
int norms(const NormsConfig& cfg, const GlobalOptions& g);

}  // namespace psuper::cli
