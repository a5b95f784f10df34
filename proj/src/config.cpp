#include "config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace psuper::cli {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) { throw ConfigError(where + ": " + what); }

void only_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) fail(where, "expected an object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) fail(where, "unknown key '" + k + "'");
  }
}

const json& need(const json& j, const std::string& where, const std::string& key) {
  if (!j.contains(key)) fail(where, "missing key '" + key + "'");
  return j.at(key);
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(where, "expected a finite number");
  return x;
}

double number_or(const json& j, const std::string& where, const std::string& key, double def) {
  return j.contains(key) ? number(j.at(key), where + "." + key) : def;
}

int integer(const json& v, const std::string& where, int lo) {
  if (!v.is_number_integer()) fail(where, "expected an integer");
  const int x = v.get<int>();
  if (x < lo) fail(where, "must be >= " + std::to_string(lo));
  return x;
}

int integer_or(const json& j, const std::string& where, const std::string& key, int def, int lo) {
  return j.contains(key) ? integer(j.at(key), where + "." + key, lo) : def;
}

std::string string_of(const json& v, const std::string& where, const std::set<std::string>& allowed = {}) {
  if (!v.is_string()) fail(where, "expected a string");
  auto s = v.get<std::string>();
  if (!allowed.empty() && !allowed.count(s)) {
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    fail(where, "'" + s + "' is not one of {" + list + "}");
  }
  return s;
}

std::vector<double> numbers(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) fail(where, "expected a non-empty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<double> decreasing_positive(const json& v, const std::string& where) {
  auto e = numbers(v, where);
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (!(e[i] > 0.0)) fail(where, "entries must be > 0");
    if (i > 0 && !(e[i] < e[i - 1])) fail(where, "entries must be strictly decreasing");
  }
  return e;
}

double exponent(const json& j, const std::string& where) {
  const double p = number(need(j, where, "p"), where + ".p");
  if (!(p > 2.0)) fail(where + ".p", "the exponent must satisfy p > 2 (got " + std::to_string(p) + ")");
  return p;
}

int dimension(const json& v, const std::string& where) {
  const int n = integer(v, where, 1);
  if (n > kMaxDim) fail(where, "dimension must be 1, 2 or 3");
  return n;
}

GridSpec grid_spec(const json& j, const std::string& where, int dim) {
  only_keys(j, where, {"cells", "lo", "hi"});
  GridSpec g;
  g.dim = dim;
  g.cells = integer(need(j, where, "cells"), where + ".cells", 3);
  g.lo = number(need(j, where, "lo"), where + ".lo");
  g.hi = number(need(j, where, "hi"), where + ".hi");
  if (!(g.hi > g.lo)) fail(where, "need lo < hi");
  double total = 1.0;
  for (int a = 0; a < dim; ++a) total *= g.cells;
  if (total > 5e7) fail(where, "grid too large");
  return g;
}

TimeSpec time_spec(const json& j, const std::string& where) {
  only_keys(j, where, {"t0", "t1", "steps"});
  TimeSpec t;
  t.t0 = number(need(j, where, "t0"), where + ".t0");
  t.t1 = number(need(j, where, "t1"), where + ".t1");
  t.steps = integer(need(j, where, "steps"), where + ".steps", 1);
  if (!(t.t1 > t.t0)) fail(where, "need t0 < t1");
  return t;
}

Scheme scheme_of(const json& j, const std::string& where) {
  if (!j.contains("scheme")) return Scheme::simplex;
  return scheme_from_string(string_of(j.at("scheme"), where + ".scheme", {"simplex", "edge"}));
}

Point point_of(const json& v, const std::string& where, int dim) {
  const auto x = numbers(v, where);
  if (static_cast<int>(x.size()) != dim) fail(where, "expected " + std::to_string(dim) + " coordinates");
  Point p{0.0, 0.0, 0.0};
  for (int a = 0; a < dim; ++a) p[a] = x[a];
  return p;
}

DataSpec data_spec(const json& j, const std::string& where, int dim) {
  only_keys(j, where, {"kind", "value", "point", "mass", "scale"});
  DataSpec d;
  d.kind = string_of(need(j, where, "kind"), where + ".kind", {"zero", "constant", "dirac", "random"});
  d.value = number_or(j, where, "value", 0.0);
  d.mass = number_or(j, where, "mass", 1.0);
  d.scale = number_or(j, where, "scale", 1.0);
  if (d.value < 0.0 || d.mass < 0.0 || d.scale < 0.0) fail(where, "data must be nonnegative");
  if (j.contains("point")) d.point = point_of(j.at("point"), where + ".point", dim);
  return d;
}

std::string out_name(const json& j, const std::string& where) {
  const std::string s = string_of(need(j, where, "out"), where + ".out");
  if (s.empty()) fail(where + ".out", "must not be empty");
  return s;
}

FuzzSpec fuzz_spec(const json& j, const std::string& where, int n) {
  only_keys(j, where, {"type", "name", "grid", "instances", "time", "scheme"});
  FuzzSpec f;
  f.grid = grid_spec(need(j, where, "grid"), where + ".grid", n);
  f.instances = integer_or(j, where, "instances", 10, 1);
  if (j.contains("time")) f.time = time_spec(j.at("time"), where + ".time");
  f.scheme = scheme_of(j, where);
  return f;
}

Experiment experiment(const json& j, const std::string& where, int n) {
  const std::string type =
      string_of(need(j, where, "type"), where + ".type", {"rate", "integrability", "mollification", "comparison", "round_trip"});
  Experiment e;
  e.name = j.contains("name") ? string_of(j.at("name"), where + ".name") : type;
  if (type == "rate") {
    only_keys(j, where, {"type", "name", "grid", "sub_half_width", "eps", "scheme"});
    RateSpec s;
    s.grid = grid_spec(need(j, where, "grid"), where + ".grid", n);
    s.sub_half_width = number_or(j, where, "sub_half_width", 0.5);
    s.eps = decreasing_positive(need(j, where, "eps"), where + ".eps");
    if (s.eps.size() < 4) fail(where + ".eps", "the rate fit needs at least 4 levels");
    s.scheme = scheme_of(j, where);
    e.spec = s;
  } else if (type == "integrability") {
    only_keys(j, where, {"type", "name", "kind", "q", "levels", "h0", "half_width", "tau0", "t_final", "ratio_tolerance"});
    IntegrabilitySpec s;
    s.kind = string_of(need(j, where, "kind"), where + ".kind", {"elliptic", "parabolic"}) == "elliptic"
                 ? IntegrabilityKind::elliptic
                 : IntegrabilityKind::parabolic;
    s.q = numbers(need(j, where, "q"), where + ".q");
    for (double q : s.q) {
      if (!(q >= 1.0)) fail(where + ".q", "exponents must be >= 1");
    }
    s.levels = integer_or(j, where, "levels", 4, 3);
    s.options.h0 = number_or(j, where, "h0", s.options.h0);
    s.options.half_width = number_or(j, where, "half_width", s.options.half_width);
    s.options.tau0 = number_or(j, where, "tau0", s.options.tau0);
    s.options.t_final = number_or(j, where, "t_final", s.options.t_final);
    s.options.ratio_tolerance = number_or(j, where, "ratio_tolerance", s.options.ratio_tolerance);
    if (!(s.options.h0 > 0.0 && s.options.half_width > 0.0 && s.options.tau0 > 0.0 && s.options.t_final > 0.0)) {
      fail(where, "h0, half_width, tau0 and t_final must be > 0");
    }
    e.spec = s;
  } else if (type == "mollification") {
    only_keys(j, where, {"type", "name", "grid", "measure", "support_half_width", "eps", "final_fraction", "noise"});
    MollificationSpec s;
    s.grid = grid_spec(need(j, where, "grid"), where + ".grid", n);
    s.measure = string_of(need(j, where, "measure"), where + ".measure", {"dirac", "random"});
    s.support_half_width = number_or(j, where, "support_half_width", 0.5);
    s.eps = decreasing_positive(need(j, where, "eps"), where + ".eps");
    s.final_fraction = number_or(j, where, "final_fraction", 0.15);
    s.noise = number_or(j, where, "noise", 0.05);
    e.spec = s;
  } else if (type == "comparison") {
    e.spec = ComparisonSpec{fuzz_spec(j, where, n)};
  } else {
    e.spec = RoundTripSpec{fuzz_spec(j, where, n)};
  }
  return e;
}

}  // namespace

nlohmann::json load_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

RunConfig parse_run(const nlohmann::json& j) {
  only_keys(j, "config", {"n", "p", "seed", "experiments"});
  RunConfig c;
  c.n = dimension(need(j, "config", "n"), "config.n");
  c.p = exponent(j, "config");
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) fail("config.seed", "expected a nonnegative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  const json& list = need(j, "config", "experiments");
  if (!list.is_array()) fail("config.experiments", "expected an array");
  std::set<std::string> names;
  for (std::size_t i = 0; i < list.size(); ++i) {
    c.experiments.push_back(experiment(list[i], "config.experiments[" + std::to_string(i) + "]", c.n));
    if (!names.insert(c.experiments.back().name).second) {
      fail("config.experiments", "duplicate experiment name '" + c.experiments.back().name + "'");
    }
  }
  return c;
}

TabulateConfig parse_tabulate(const nlohmann::json& j) {
  only_keys(j, "config", {"solution", "n", "p", "grid", "t", "c", "out"});
  TabulateConfig c;
  c.solution = string_of(need(j, "config", "solution"), "config.solution", {"fundamental", "barenblatt"});
  const int n = dimension(need(j, "config", "n"), "config.n");
  c.p = exponent(j, "config");
  c.grid = grid_spec(need(j, "config", "grid"), "config.grid", n);
  c.t = number_or(j, "config", "t", 1.0);
  if (j.contains("c")) {
    c.c = number(j.at("c"), "config.c");
    if (!(*c.c > 0.0)) fail("config.c", "must be > 0");
  }
  c.out = out_name(j, "config");
  return c;
}

SolveConfig parse_solve(const nlohmann::json& j, bool parabolic) {
  std::set<std::string> keys{"n", "p", "grid", "scheme", "data", "boundary", "seed", "out"};
  if (parabolic) {
    keys.insert("time");
    keys.insert("initial");
  }
  only_keys(j, "config", keys);
  SolveConfig c;
  const int n = dimension(need(j, "config", "n"), "config.n");
  c.p = exponent(j, "config");
  c.grid = grid_spec(need(j, "config", "grid"), "config.grid", n);
  c.scheme = scheme_of(j, "config");
  if (j.contains("data")) c.data = data_spec(j.at("data"), "config.data", n);
  c.boundary = number_or(j, "config", "boundary", 0.0);
  if (parabolic) {
    c.time = time_spec(need(j, "config", "time"), "config.time");
    c.initial = number_or(j, "config", "initial", 0.0);
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) fail("config.seed", "expected a nonnegative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  c.out = out_name(j, "config");
  return c;
}

ObstacleConfig parse_obstacle(const nlohmann::json& j) {
  only_keys(j, "config", {"n", "p", "grid", "scheme", "height", "curvature", "centre", "boundary", "out"});
  ObstacleConfig c;
  const int n = dimension(need(j, "config", "n"), "config.n");
  c.p = exponent(j, "config");
  c.grid = grid_spec(need(j, "config", "grid"), "config.grid", n);
  c.scheme = scheme_of(j, "config");
  c.height = number_or(j, "config", "height", c.height);
  c.curvature = number_or(j, "config", "curvature", c.curvature);
  if (j.contains("centre")) c.centre = point_of(j.at("centre"), "config.centre", n);
  c.boundary = number_or(j, "config", "boundary", 0.0);
  c.out = out_name(j, "config");
  return c;
}

NormsConfig parse_norms(const nlohmann::json& j) {
  only_keys(j, "config", {"p", "inputs", "r", "q", "dual", "out"});
  NormsConfig c;
  c.p = exponent(j, "config");
  const json& in = need(j, "config", "inputs");
  if (!in.is_array() || in.empty()) fail("config.inputs", "expected a non-empty array of paths");
  for (std::size_t i = 0; i < in.size(); ++i) c.inputs.emplace_back(string_of(in[i], "config.inputs[" + std::to_string(i) + "]"));
  if (j.contains("r")) c.r = numbers(j.at("r"), "config.r");
  if (j.contains("q")) c.q = numbers(j.at("q"), "config.q");
  for (double r : c.r) {
    if (!(r >= 1.0)) fail("config.r", "exponents must be >= 1");
  }
  for (double q : c.q) {
    if (!(q >= 1.0)) fail("config.q", "exponents must be >= 1");
  }
  if (j.contains("dual")) {
    if (!j.at("dual").is_boolean()) fail("config.dual", "expected a boolean");
    c.dual = j.at("dual").get<bool>();
  }
  c.out = out_name(j, "config");
  return c;
}

}  // namespace psuper::cli
