#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <thread>
#include <vector>

#include "psuper/io.hpp"
#include "psuper/pipeline.hpp"

namespace psuper::cli {

namespace {

using nlohmann::json;

std::mt19937_64 engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq s{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                  static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(s);
}

GridFunction uniform(const Grid& g, std::mt19937_64& gen, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(g.size());
  for (double& x : v) x = d(gen);
  return GridFunction(g, std::move(v));
}

DiscreteMeasure interior_data(const Grid& g, std::mt19937_64& gen, double scale) {
  return DiscreteMeasure::from_density(uniform(g, gen, 0.0, scale)).interior();
}

DiscreteMeasure build_data(const Grid& g, const DataSpec& d, std::mt19937_64& gen) {
  if (d.kind == "constant") return DiscreteMeasure::from_density(GridFunction(g, d.value)).interior();
  if (d.kind == "dirac") return DiscreteMeasure::dirac(g, d.point, d.mass);
  if (d.kind == "random") return interior_data(g, gen, d.scale);
  return DiscreteMeasure(g);
}

Box centred_box(int dim, double half) {
  Box b{{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};
  for (int a = 0; a < dim; ++a) {
    b.lo[a] = -half;
    b.hi[a] = half;
  }
  return b;
}

// ---- experiments ------------------------------------------------------------------------------

ExperimentReport rate(const RateSpec& s, const PParams& P) {
  const Grid g = s.grid.build();
  SolverOptions so;
  so.scheme = s.scheme;
  const GridFunction u = solve_dirichlet(g, P, DiscreteMeasure::dirac(g, {0.0, 0.0, 0.0}), GridFunction(g, 0.0), so);
  ApproxOptions ao;
  ao.solver = so;
  const ApproxSequence seq = approximate_supersolution(u, centred_box(g.dim(), s.sub_half_width), P, s.eps, ao);
  ExperimentReport r = approx_report("rate", seq);
  const RateFit f = rate_experiment(seq, P);
  r.slopes["grad_vs_gap"] = f.slope;
  r.values["slope"] = f.slope;
  r.values["predicted_slope"] = f.predicted;
  r.values["fitted_constant"] = f.constant;
  r.values["worst_ratio"] = f.worst_ratio;
  r.checks["slope"] = f.slope_ok;
  r.checks["one_sided_bound"] = f.one_sided_ok;
  r.parameters["cells"] = s.grid.cells;
  r.parameters["sub_half_width"] = s.sub_half_width;
  r.parameters["eps"] = s.eps;
  r.parameters["scheme"] = to_string(s.scheme);
  return r;
}

ExperimentReport mollification(const MollificationSpec& s, const PParams& P, std::mt19937_64& gen) {
  const Grid g = s.grid.build();
  DiscreteMeasure mu(g);
  if (s.measure == "dirac") {
    mu = DiscreteMeasure::dirac(g, {0.0, 0.0, 0.0});
  } else {
    std::vector<double> dv(g.size(), 0.0);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    for (std::size_t k = 0; k < g.size(); ++k) {
      const Point x = g.point(k);
      double m = 0.0;
      for (int a = 0; a < g.dim(); ++a) m = std::max(m, std::abs(x[a]));
      const double v = d(gen);
      if (m <= s.support_half_width) dv[k] = v;
    }
    mu = DiscreteMeasure::from_density(GridFunction(g, std::move(dv)));
  }
  ExperimentReport r;
  r.name = "mollification";
  r.parameters = {{"measure", s.measure}, {"cells", s.grid.cells}, {"eps", s.eps}};
  r.columns = {"eps", "dual_gap", "lost_mass"};
  std::vector<double> gaps;
  for (double e : s.eps) {
    MollifyInfo info;
    const GridFunction rho = mollify(mu, e, &info);
    gaps.push_back(dual_norm(mu.masses() - g.cell_volume() * rho, P));
    r.add_row({e, gaps.back(), info.lost_mass});
  }
  bool mono = true;
  for (std::size_t i = 1; i < gaps.size(); ++i) mono = mono && gaps[i] <= (1.0 + s.noise) * gaps[i - 1];
  r.values["final_fraction"] = gaps.back() / gaps.front();
  r.checks["decreasing"] = mono;
  r.checks["final_fraction"] = gaps.back() <= s.final_fraction * gaps.front();
  return r;
}

ExperimentReport comparison(const ComparisonSpec& s, const PParams& P, std::mt19937_64& gen) {
  SolverOptions so;
  so.scheme = s.scheme;
  const double allowed = 10.0 * so.tol;
  ExperimentReport r;
  r.name = "comparison";
  r.parameters = {{"instances", s.instances}, {"cells", s.grid.cells}, {"parabolic", s.time.has_value()}};
  r.columns = {"instance", "largest_undershoot"};
  int violations = 0;
  const Grid g = s.grid.build();
  for (int i = 0; i < s.instances; ++i) {
    double worst = 0.0;
    auto track = [&](const GridFunction& d) {
      for (double x : d.values()) {
        worst = std::max(worst, -x);
        violations += x < -allowed;
      }
    };
    if (!s.time) {
      const DiscreteMeasure f2 = interior_data(g, gen, 2.0);
      const DiscreteMeasure f1(f2.masses() + interior_data(g, gen, 1.0).masses());
      const GridFunction b2 = uniform(g, gen, -1.0, 1.0);
      const GridFunction b1 = b2 + uniform(g, gen, 0.0, 0.5);
      track(solve_dirichlet(g, P, f1, b1, so) - solve_dirichlet(g, P, f2, b2, so));
    } else {
      const SpaceTimeGrid st(g, s.time->t0, s.time->t1, s.time->steps);
      std::vector<DiscreteMeasure> f1;
      std::vector<DiscreteMeasure> f2;
      std::vector<GridFunction> s1;
      std::vector<GridFunction> s2;
      for (int k = 0; k < st.levels(); ++k) {
        f2.push_back(interior_data(g, gen, 2.0));
        f1.emplace_back(f2.back().masses() + interior_data(g, gen, 1.0).masses());
        s2.push_back(uniform(g, gen, -1.0, 1.0));
        s1.push_back(s2.back() + uniform(g, gen, 0.0, 0.5));
      }
      const SpaceTimeFunction d = solve_cauchy_dirichlet(st, P, f1, SpaceTimeFunction(st, std::move(s1)), so) -
                                  solve_cauchy_dirichlet(st, P, f2, SpaceTimeFunction(st, std::move(s2)), so);
      for (const auto& sl : d.slices()) track(sl);
    }
    r.add_row({static_cast<double>(i), worst});
  }
  r.values["violations"] = violations;
  r.values["allowed_undershoot"] = allowed;
  r.checks["no_violations"] = violations == 0;
  return r;
}

ExperimentReport round_trip(const RoundTripSpec& s, const PParams& P, std::mt19937_64& gen) {
  SolverOptions so;
  so.scheme = s.scheme;
  const double allowed = 10.0 * so.tol;
  ExperimentReport r;
  r.name = "round_trip";
  r.parameters = {{"instances", s.instances}, {"cells", s.grid.cells}, {"parabolic", s.time.has_value()}};
  r.columns = {"instance", "total_variation"};
  const Grid g = s.grid.build();
  double worst = 0.0;
  for (int i = 0; i < s.instances; ++i) {
    double tv = 0.0;
    if (!s.time) {
      const DiscreteMeasure f = interior_data(g, gen, 3.0);
      const GridFunction u = solve_dirichlet(g, P, f, uniform(g, gen, -1.0, 1.0), so);
      tv = total_variation(riesz_measure(u, P, s.scheme).signed_masses(), f.masses());
    } else {
      const SpaceTimeGrid st(g, s.time->t0, s.time->t1, s.time->steps);
      std::vector<DiscreteMeasure> f;
      std::vector<GridFunction> b;
      for (int k = 0; k < st.levels(); ++k) {
        f.push_back(interior_data(g, gen, 3.0));
        b.push_back(uniform(g, gen, -1.0, 1.0));
      }
      const SpaceTimeFunction U = solve_cauchy_dirichlet(st, P, f, SpaceTimeFunction(st, std::move(b)), so);
      const SpaceTimeFunction m = riesz_measure_parabolic(U, P, s.scheme).signed_masses();
      for (int k = 1; k < st.levels(); ++k) {
        tv = std::max(tv, total_variation(m.slice(k), f[static_cast<std::size_t>(k)].masses()));
      }
    }
    worst = std::max(worst, tv);
    r.add_row({static_cast<double>(i), tv});
  }
  r.values["max_total_variation"] = worst;
  r.checks["identity"] = worst <= allowed;
  return r;
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void write_text(const std::filesystem::path& path, const std::string& s) {
  std::ofstream os(path);
  if (!os || !(os << s)) throw Error("cannot write " + path.string());
}

std::filesystem::path prepare(const GlobalOptions& g) {
  std::error_code ec;
  std::filesystem::create_directories(g.out_dir, ec);
  if (ec) throw Error("cannot create output directory " + g.out_dir.string() + ": " + ec.message());
  return g.out_dir;
}

void log(const GlobalOptions& g, const std::string& msg) {
  if (g.verbose) std::cerr << msg << '\n';
}

double pole_limit(int n, double p) {
  if (p < n) return std::numeric_limits<double>::infinity();
  if (p == n) return -std::numeric_limits<double>::infinity();
  return 0.0;
}

}  // namespace

ExperimentReport run_experiment(const Experiment& e, int n, const PParams& P, std::uint64_t seed) {
  auto gen = engine(seed, 0);
  ExperimentReport r = std::visit(overloaded{
                                      [&](const RateSpec& s) { return rate(s, P); },
                                      [&](const IntegrabilitySpec& s) {
                                        return integrability_experiment(s.kind, n, P, s.q, s.levels, s.options);
                                      },
                                      [&](const MollificationSpec& s) { return mollification(s, P, gen); },
                                      [&](const ComparisonSpec& s) { return comparison(s, P, gen); },
                                      [&](const RoundTripSpec& s) { return round_trip(s, P, gen); },
                                  },
                                  e.spec);
  r.name = e.name;
  r.parameters["seed"] = seed;
  return r;
}

int run(const RunConfig& cfg, const GlobalOptions& g) {
  const PParams P(cfg.p);
  const std::uint64_t seed = g.seed.value_or(cfg.seed);
  if (cfg.experiments.empty()) return kOk;
  const auto dir = prepare(g);

  struct Result {
    std::optional<ExperimentReport> report;
    std::string error;
  };
  std::vector<Result> results(cfg.experiments.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cfg.experiments.size(); i = next++) {
      const auto& e = cfg.experiments[i];
      log(g, "start " + e.name);
      try {
        results[i].report = run_experiment(e, cfg.n, P, seed + i);
      } catch (const std::exception& ex) {
        results[i].error = ex.what();
      }
      log(g, "done  " + e.name);
    }
  };
  const int threads = std::clamp(g.threads, 1, static_cast<int>(cfg.experiments.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  const std::string stamp = utc_timestamp();
  int code = kOk;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& res = results[i];
    const std::string& name = cfg.experiments[i].name;
    if (!res.report) {
      std::cerr << name << ": " << res.error << '\n';
      std::cout << name << " FAIL (error)\n";
      code = kExperimentFailed;
      continue;
    }
    const std::string stem = write_report(dir, *res.report, cfg.n, cfg.p, stamp);
    const bool ok = res.report->passed();
    std::cout << name << ' ' << (ok ? "PASS" : "FAIL") << ' ' << (dir / stem).string() << '\n';
    for (const auto& [k, v] : res.report->checks) {
      if (!v) std::cout << "  failed check: " << k << '\n';
    }
    if (!ok) code = kExperimentFailed;
  }
  return code;
}

int tabulate(const TabulateConfig& cfg, const GlobalOptions& g) {
  const PParams P(cfg.p);
  const Grid grid = cfg.grid.build();
  const int n = grid.dim();
  GridFunction f;
  if (cfg.solution == "fundamental") {
    f = GridFunction::sample(grid, [&](const Point& x) {
      return exact::radius(x, n) == 0.0 ? pole_limit(n, cfg.p) : exact::fundamental_solution(x, n, P);
    });
  } else {
    const double c = cfg.c.value_or(exact::barenblatt_normalize(n, P));
    f = GridFunction::sample(grid, [&](const Point& x) { return exact::barenblatt(x, cfg.t, n, P, c); });
  }
  const auto path = prepare(g) / cfg.out;
  io::write_raw(path, f);
  log(g, "wrote " + path.string());
  return kOk;
}

int solve_elliptic(const SolveConfig& cfg, const GlobalOptions& g) {
  const PParams P(cfg.p);
  const Grid grid = cfg.grid.build();
  auto gen = engine(g.seed.value_or(cfg.seed), 0);
  const DiscreteMeasure f = build_data(grid, cfg.data, gen);
  SolverOptions so;
  so.scheme = cfg.scheme;
  SolveStats stats;
  const GridFunction u = solve_dirichlet(grid, P, f, GridFunction(grid, cfg.boundary), so, std::nullopt, &stats);
  const auto dir = prepare(g);
  io::write_raw(dir / (cfg.out + "-u.raw"), u);
  io::write_raw(dir / (cfg.out + "-mu.raw"), riesz_measure(u, P, cfg.scheme).measure);
  const json summary{{"iterations", stats.iterations},
                     {"residual", stats.residual},
                     {"data_mass", f.total_mass()},
                     {"max_abs", u.max_abs()},
                     {"scheme", to_string(cfg.scheme)}};
  write_text(dir / (cfg.out + ".json"), summary.dump(2) + "\n");
  log(g, summary.dump());
  return kOk;
}

int solve_parabolic(const SolveConfig& cfg, const GlobalOptions& g) {
  const PParams P(cfg.p);
  const Grid grid = cfg.grid.build();
  const SpaceTimeGrid st(grid, cfg.time->t0, cfg.time->t1, cfg.time->steps);
  auto gen = engine(g.seed.value_or(cfg.seed), 0);
  std::vector<DiscreteMeasure> f;
  for (int k = 0; k < st.levels(); ++k) f.push_back(build_data(grid, cfg.data, gen));
  std::vector<GridFunction> pb(static_cast<std::size_t>(st.levels()), GridFunction(grid, cfg.boundary));
  std::vector<double> init(grid.size(), cfg.boundary);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!grid.is_boundary(k)) init[k] = cfg.initial;
  }
  pb.front() = GridFunction(grid, std::move(init));
  SolverOptions so;
  so.scheme = cfg.scheme;
  const SpaceTimeFunction U = solve_cauchy_dirichlet(st, P, f, SpaceTimeFunction(st, std::move(pb)), so);
  const auto dir = prepare(g);
  io::write_raw_slices(dir, cfg.out + "-u", U);
  const ParabolicRieszMeasure mu = riesz_measure_parabolic(U, P, cfg.scheme);
  const json summary{{"levels", st.levels()},
                     {"tau", st.tau()},
                     {"space_time_mass", mu.space_time_mass()},
                     {"max_abs", U.max_abs()},
                     {"scheme", to_string(cfg.scheme)}};
  write_text(dir / (cfg.out + ".json"), summary.dump(2) + "\n");
  log(g, summary.dump());
  return kOk;
}

int obstacle(const ObstacleConfig& cfg, const GlobalOptions& g) {
  const PParams P(cfg.p);
  const Grid grid = cfg.grid.build();
  const GridFunction psi = GridFunction::sample(grid, [&](const Point& x) {
    double r2 = 0.0;
    for (int a = 0; a < grid.dim(); ++a) r2 += (x[a] - cfg.centre[a]) * (x[a] - cfg.centre[a]);
    return cfg.height - cfg.curvature * r2;
  });
  SolverOptions so;
  so.scheme = cfg.scheme;
  const GridFunction u = solve_obstacle(grid, P, psi, GridFunction(grid, cfg.boundary), so);
  std::size_t contact = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) contact += !grid.is_boundary(k) && u[k] <= psi[k] + so.act_tol;
  const auto dir = prepare(g);
  io::write_raw(dir / (cfg.out + "-u.raw"), u);
  io::write_raw(dir / (cfg.out + "-psi.raw"), psi);
  io::write_raw(dir / (cfg.out + "-mu.raw"), riesz_measure(u, P, cfg.scheme).measure);
  const json summary{{"contact_nodes", contact}, {"max_abs", u.max_abs()}, {"scheme", to_string(cfg.scheme)}};
  write_text(dir / (cfg.out + ".json"), summary.dump(2) + "\n");
  log(g, summary.dump());
  return kOk;
}

int norms(const NormsConfig& cfg, const GlobalOptions& g) {
  const PParams P(cfg.p);
  json out = json::array();
  for (const auto& in : cfg.inputs) {
    const io::RawField f = io::read_raw(in);
    json e{{"input", in.string()}, {"measure", f.measure}, {"max_abs", f.values.max_abs()}};
    for (double r : cfg.r) e["L" + std::to_string(r)] = lr_norm(f.values, r);
    for (double q : cfg.q) {
      e["grad_L" + std::to_string(q)] = grad_lq_norm(f.values, q);
      e["W1_" + std::to_string(q)] = w1q_norm(f.values, q);
    }
    if (cfg.dual) {
      // Raw nodal values of a measure are masses; a function is read as a density.
      e["dual_norm"] = f.measure ? dual_norm(f.values, P) : dual_norm(f.values.grid().cell_volume() * f.values, P);
    }
    out.push_back(std::move(e));
  }
  write_text(prepare(g) / cfg.out, out.dump(2) + "\n");
  log(g, out.dump());
  return kOk;
}

}  // namespace psuper::cli
