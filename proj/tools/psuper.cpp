// psuper: batch front end for the experiments, exact-solution tables and single solves.
//
// Exit codes: 0 ok, 1 experiment failure, 2 config error, 3 I/O error, 4 numerical failure,
// 5 command-line usage error.
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace psuper::cli;

int main(int argc, char** argv) {
  CLI::App app{"p-superharmonic / p-superparabolic approximation experiments"};
  app.require_subcommand(1);

  std::string config;
  GlobalOptions g;
  std::string out_dir = ".";
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out-dir", out_dir, "output directory");
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--verbose", g.verbose, "progress on standard error");
  };
  CLI::App* run_cmd = app.add_subcommand("run", "run the configured experiments");
  CLI::App* tab_cmd = app.add_subcommand("tabulate", "sample an exact solution to a raw field");
  CLI::App* ell_cmd = app.add_subcommand("solve-elliptic", "solve -Delta_p u = f with Dirichlet data");
  CLI::App* par_cmd = app.add_subcommand("solve-parabolic", "implicit Euler for d_t u - Delta_p u = f");
  CLI::App* obs_cmd = app.add_subcommand("obstacle", "elliptic obstacle problem");
  CLI::App* nrm_cmd = app.add_subcommand("norms", "norms of raw fields");
  for (CLI::App* s : {run_cmd, tab_cmd, ell_cmd, par_cmd, obs_cmd, nrm_cmd}) add_common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }
  g.out_dir = out_dir;
  for (CLI::App* s : {run_cmd, tab_cmd, ell_cmd, par_cmd, obs_cmd, nrm_cmd}) {
    if (s->count("--seed")) g.seed = seed;
  }

  try {
    const nlohmann::json j = load_json(config);
    if (*run_cmd) {
      const RunConfig c = parse_run(j);
      return run(c, g);
    }
    if (*tab_cmd) {
      const TabulateConfig c = parse_tabulate(j);
      return tabulate(c, g);
    }
    if (*ell_cmd) {
      const SolveConfig c = parse_solve(j, false);
      return solve_elliptic(c, g);
    }
    if (*par_cmd) {
      const SolveConfig c = parse_solve(j, true);
      return solve_parabolic(c, g);
    }
    if (*obs_cmd) {
      const ObstacleConfig c = parse_obstacle(j);
      return obstacle(c, g);
    }
    const NormsConfig c = parse_norms(j);
    return norms(c, g);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const psuper::InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const psuper::NonConvergence& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const psuper::Infeasible& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const psuper::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoError;
  }
}
