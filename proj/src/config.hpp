#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "psuper/grid.hpp"
#include "psuper/operators.hpp"
#include "psuper/pipeline.hpp"

namespace psuper::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kExperimentFailed = 1,
  kConfigError = 2,
  kIoError = 3,
  kNumericalError = 4,
  kUsageError = 5,
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GridSpec {
  int dim = 1;
  double lo = -1.0;
  double hi = 1.0;
  int cells = 33;  ///< nodes per axis

  Grid build() const { return Grid::cube(dim, lo, hi, cells); }
};

struct TimeSpec {
  double t0 = 0.0;
  double t1 = 1.0;
  int steps = 8;
};

struct DataSpec {
  std::string kind = "zero";  ///< zero | constant | dirac | random
  double value = 0.0;         ///< constant density
  Point point{0.0, 0.0, 0.0};
  double mass = 1.0;
  double scale = 1.0;  ///< random: density uniform on [0, scale]
};

// ---- run experiments --------------------------------------------------------------------------

struct RateSpec {
  GridSpec grid;
  double sub_half_width = 0.5;
  std::vector<double> eps;
  Scheme scheme = Scheme::simplex;
};

struct IntegrabilitySpec {
  IntegrabilityKind kind = IntegrabilityKind::elliptic;
  std::vector<double> q;
  int levels = 4;
  IntegrabilityOptions options;
};

struct MollificationSpec {
  GridSpec grid;
  std::string measure = "dirac";  ///< dirac | random
  double support_half_width = 0.5;
  std::vector<double> eps;
  double final_fraction = 0.15;
  double noise = 0.05;
};

struct FuzzSpec {
  GridSpec grid;
  int instances = 10;
  std::optional<TimeSpec> time;  ///< parabolic when present
  Scheme scheme = Scheme::simplex;
};

struct ComparisonSpec : FuzzSpec {};
struct RoundTripSpec : FuzzSpec {};

using ExperimentSpec = std::variant<RateSpec, IntegrabilitySpec, MollificationSpec, ComparisonSpec, RoundTripSpec>;

struct Experiment {
  std::string name;
  ExperimentSpec spec;
};

struct RunConfig {
  int n = 2;
  double p = 3.0;
  std::uint64_t seed = 0;
  std::vector<Experiment> experiments;
};

// ---- single-task subcommands -----------------------------------------------------------------

struct TabulateConfig {
  std::string solution;  ///< fundamental | barenblatt
  double p = 3.0;
  GridSpec grid;
  double t = 1.0;
  std::optional<double> c;
  std::string out;
};

struct SolveConfig {
  double p = 3.0;
  GridSpec grid;
  Scheme scheme = Scheme::simplex;
  DataSpec data;
  double boundary = 0.0;
  std::optional<TimeSpec> time;
  double initial = 0.0;  ///< constant initial value (parabolic)
  std::uint64_t seed = 0;
  std::string out;
};

struct ObstacleConfig {
  double p = 3.0;
  GridSpec grid;
  Scheme scheme = Scheme::simplex;
  double height = 0.5;
  double curvature = 2.0;
  Point centre{0.0, 0.0, 0.0};
  double boundary = 0.0;
  std::string out;
};

struct NormsConfig {
  double p = 3.0;
  std::vector<std::filesystem::path> inputs;
  std::vector<double> r;
  std::vector<double> q;
  bool dual = false;
  std::string out;
};

nlohmann::json load_json(const std::filesystem::path& path);

RunConfig parse_run(const nlohmann::json& j);
TabulateConfig parse_tabulate(const nlohmann::json& j);
SolveConfig parse_solve(const nlohmann::json& j, bool parabolic);
ObstacleConfig parse_obstacle(const nlohmann::json& j);
NormsConfig parse_norms(const nlohmann::json& j);

}  // namespace psuper::cli
