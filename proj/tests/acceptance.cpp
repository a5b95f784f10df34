// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the number of failures.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "psuper/pipeline.hpp"

using namespace psuper;

namespace {

const PParams P3(3.0);

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Box box2(double lo, double hi) { return Box{{lo, lo, 0.0}, {hi, hi, 0.0}}; }
Box box1(double lo, double hi) { return Box{{lo, 0.0, 0.0}, {hi, 0.0, 0.0}}; }

GridFunction uniform(const Grid& g, std::mt19937_64& gen, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(g.size());
  for (double& x : v) x = d(gen);
  return GridFunction(g, std::move(v));
}

DiscreteMeasure interior_data(const Grid& g, std::mt19937_64& gen, double lo, double hi) {
  return DiscreteMeasure::from_density(uniform(g, gen, lo, hi)).interior();
}

// ---------------------------------------------------------------------------------------------

Outcome barenblatt_mass() {
  constexpr double kTol = 1e-3;
  const double c = exact::barenblatt_normalize(1, P3);
  const Grid g = Grid::cube(1, -4.0, 4.0, 8 * 512 + 1);
  Outcome o{true, ""};
  for (double t : {0.5, 1.0, 2.0}) {
    const GridFunction b = GridFunction::sample(g, [&](const Point& x) { return exact::barenblatt(x, t, 1, P3, c); });
    const double mass = DiscreteMeasure::from_density(b).total_mass();
    o.pass = o.pass && std::abs(mass - 1.0) <= kTol;
    o.detail += fmt("m(%g)=", t) + fmt("%.7f ", mass);
  }
  return o;
}

Outcome barenblatt_consistency() {
  constexpr double kRatio = 1.7;
  constexpr double kMargin = 0.1;
  const double c = exact::barenblatt_normalize(1, P3);
  std::vector<double> res;
  for (int l = 0; l < 3; ++l) {
    const double h = 1.0 / (32 << l);
    const SpaceTimeGrid st(Grid::cube(1, -4.0, 4.0, static_cast<int>(std::lround(8.0 / h)) + 1), 0.5, 1.5,
                           32 << l);
    const SpaceTimeFunction B =
        SpaceTimeFunction::sample(st, [&](const Point& x, double t) { return exact::barenblatt(x, t, 1, P3, c); });
    const OperatorReport rep = parabolic_supersolution_check(B, P3, Scheme::simplex, 0.0);
    const Grid& g = st.spatial();
    double worst = 0.0;
    for (int k = 1; k < st.levels(); ++k) {
      const double R = exact::support_radius(st.time(k), 1, P3, c);
      const GridFunction& r = rep.residual[static_cast<std::size_t>(k - 1)];
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (g.is_boundary(j)) continue;
        const double ax = std::abs(g.point(j)[0]);
        if (ax < kMargin || std::abs(ax - R) < kMargin) continue;
        worst = std::max(worst, std::abs(r[j]) / g.node_weight(j));
      }
    }
    res.push_back(worst);
  }
  Outcome o{true, "residual"};
  for (double r : res) o.detail += fmt(" %.4e", r);
  o.detail += " ratios";
  for (std::size_t i = 1; i < res.size(); ++i) {
    o.pass = o.pass && res[i - 1] / res[i] >= kRatio;
    o.detail += fmt(" %.3f", res[i - 1] / res[i]);
  }
  return o;
}

Outcome fundamental_riesz_mass() {
  constexpr double kTol = 0.05;
  constexpr double kConcentration = 0.99;
  const double flux = exact::flux_constant(2, P3);
  Outcome o{true, ""};
  std::vector<double> totals;
  std::string pos_detail = " | positive part:";
  for (int m : {32, 64, 128}) {
    // Even node count: the pole sits at a cell centre between the 4 nearest nodes.
    const Grid g = Grid::cube(2, -0.5, 0.5, m);
    const GridFunction u = GridFunction::sample(g, [](const Point& x) { return exact::fundamental_superharmonic(x, 2, P3); });
    const RieszMeasure r = riesz_measure(u, P3);
    const GridFunction s = r.signed_masses();
    double total = 0.0;
    double near = 0.0;
    double pos_total = 0.0;
    double pos_near = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      total += s[k];
      pos_total += r.measure[k];
      if (exact::radius(g.point(k), 2) < g.spacing(0)) {
        near += s[k];
        pos_near += r.measure[k];
      }
    }
    totals.push_back(total);
    o.pass = o.pass && std::abs(total / flux - 1.0) <= kTol && near / total >= kConcentration;
    o.detail += fmt("m=%g:", m) + fmt(" total=%.5f", total) + fmt(" near=%.4f; ", near / total);
    pos_detail += fmt(" %.4f", pos_total) + fmt("(%.3f)", pos_near / pos_total);
  }
  for (double t : totals) o.pass = o.pass && std::abs(t / totals.front() - 1.0) <= kTol;
  o.detail += fmt("flux=%.5f", flux) + pos_detail;
  return o;
}

Outcome rate_reproduction() {
  const Grid g = Grid::cube(2, -1.0, 1.0, 513);
  const GridFunction u = solve_dirichlet(g, P3, DiscreteMeasure::dirac(g, {0.0, 0.0, 0.0}), GridFunction(g, 0.0));
  const ApproxSequence seq = approximate_supersolution(u, box2(-0.5, 0.5), P3, {0.2, 0.1, 0.05, 0.025, 0.0125});
  const RateFit f = rate_experiment(seq, P3);
  Outcome o{f.passed(), fmt("slope=%.4f", f.slope) + fmt(" (>= %.3f)", 0.9 * f.predicted) + fmt(" C=%.4f", f.constant) +
                            fmt(" worst_ratio=%.4f (<= 1.25)", f.worst_ratio)};
  return o;
}

Outcome integrability() {
  const ExperimentReport e = integrability_experiment(IntegrabilityKind::elliptic, 2, P3, {3.5, 3.8, 4.2, 4.5}, 4);
  IntegrabilityOptions po;
  po.half_width = 3.0;
  po.h0 = 1.0 / 8.0;
  po.tau0 = 1.0 / 32.0;
  const ExperimentReport pr = integrability_experiment(IntegrabilityKind::parabolic, 1, P3, {2.2, 2.4, 2.6, 2.8}, 4, po);
  Outcome o{e.passed() && pr.passed(), ""};
  for (const ExperimentReport* r : {&e, &pr}) {
    o.detail += r->name + fmt(" (critical %.3f):", r->values.at("critical_q"));
    for (const auto& note : r->notes) o.detail += " [" + note + "]";
    for (const auto& [k, v] : r->values) {
      if (k.find("growth_ratio") != std::string::npos) o.detail += " " + k + fmt("=%.4f", v);
      if (k.find("predicted_ratio") != std::string::npos) o.detail += fmt("/%.4f", v);
    }
    o.detail += "; ";
  }
  return o;
}

// Smooth obstacle, negative on the boundary of [-1,1]^2.
std::function<double(const Point&, double)> random_obstacle(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> U(-0.5, 0.5);
  std::uniform_real_distribution<double> A(0.2, 0.8);
  std::uniform_real_distribution<double> W(0.15, 0.4);
  struct Bump {
    double a, cx, cy, w, rate;
  };
  std::vector<Bump> bumps;
  for (int b = 0; b < 3; ++b) bumps.push_back({A(gen), U(gen), U(gen), W(gen), 2.0 * A(gen)});
  return [bumps](const Point& x, double t) {
    double s = 0.0;
    for (const auto& b : bumps) {
      const double r2 = (x[0] - b.cx) * (x[0] - b.cx) + (x[1] - b.cy) * (x[1] - b.cy);
      s += b.a * std::exp(-b.rate * t) * std::exp(-r2 / (b.w * b.w));
    }
    return s * (1.0 - x[0] * x[0]) * (1.0 - x[1] * x[1]) - 0.05;
  };
}

Outcome obstacle_complementarity() {
  constexpr double kDetach = 1e-8;
  constexpr double kResidual = 1e-8;
  constexpr double kMassFraction = 1e-6;
  auto gen = std::mt19937_64(606);
  const Grid g = Grid::cube(2, -1.0, 1.0, 25);
  const SpaceTimeGrid st(Grid::cube(2, -1.0, 1.0, 17), 0.0, 0.5, 8);
  double below = 0.0;
  double residual = 0.0;
  double fraction = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto psi_fn = random_obstacle(gen);
    const GridFunction psi = GridFunction::sample(g, [&](const Point& x) { return psi_fn(x, 0.0); });
    const GridFunction u = solve_obstacle(g, P3, psi, GridFunction(g, 0.0));
    const GridFunction w = weak_p_laplacian(u, P3, Scheme::simplex);
    const RieszMeasure r = riesz_measure(u, P3);
    double off = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      below = std::max(below, psi[k] - u[k]);
      if (g.is_boundary(k) || u[k] <= psi[k] + kDetach) continue;
      residual = std::max(residual, std::abs(w[k]));
      off += r.measure[k];
    }
    if (r.measure.total_mass() > 0.0) fraction = std::max(fraction, off / r.measure.total_mass());

    const SpaceTimeFunction Psi = SpaceTimeFunction::sample(st, psi_fn);
    const SpaceTimeFunction pb = SpaceTimeFunction::sample(st, [&](const Point& x, double t) {
      return t == 0.0 ? std::max(psi_fn(x, 0.0), 0.0) : 0.0;
    });
    const SpaceTimeFunction U = solve_parabolic_obstacle(st, P3, Psi, pb);
    const SpaceTimeFunction W = parabolic_weak_residual(U, P3, Scheme::simplex);
    const ParabolicRieszMeasure R = riesz_measure_parabolic(U, P3);
    const Grid& sg = st.spatial();
    double off_t = 0.0;
    for (int k = 1; k < st.levels(); ++k) {
      for (std::size_t j = 0; j < sg.size(); ++j) {
        below = std::max(below, Psi.slice(k)[j] - U.slice(k)[j]);
        if (sg.is_boundary(j) || U.slice(k)[j] <= Psi.slice(k)[j] + kDetach) continue;
        residual = std::max(residual, std::abs(W.slice(k)[j]));
        off_t += R.measures[static_cast<std::size_t>(k)][j];
      }
    }
    if (R.space_time_mass() > 0.0) fraction = std::max(fraction, off_t * st.tau() / R.space_time_mass());
  }
  Outcome o{below <= 0.0 && residual <= kResidual && fraction <= kMassFraction, ""};
  o.detail = fmt("max(psi-u)=%.3e", below) + fmt(" max|residual| off contact=%.3e", residual) +
             fmt(" max mass fraction off contact=%.3e", fraction);
  return o;
}

Outcome structural_closures() {
  constexpr double kTol = 1e-10;
  constexpr double kShiftTol = 1e-12;
  auto gen = std::mt19937_64(707);
  std::uniform_real_distribution<double> B(-10.0, 10.0);
  SolverOptions so;
  so.scheme = Scheme::edge;
  const Grid g = Grid::cube(2, 0.0, 1.0, 21);
  int min_pass = 0;
  int shift_same = 0;
  double shift_diff = 0.0;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const GridFunction u = solve_dirichlet(g, P3, interior_data(g, gen, 0.5, 2.0), uniform(g, gen, -1.0, 1.0), so);
    const GridFunction v = solve_dirichlet(g, P3, interior_data(g, gen, 0.5, 2.0), uniform(g, gen, -1.0, 1.0), so);
    const OperatorReport m = is_supersolution(min(u, v), P3, Scheme::edge, kTol);
    worst = std::max(worst, m.worst);
    min_pass += m.passed();
    const double beta = B(gen);
    const OperatorReport a = is_supersolution(u, P3, Scheme::edge, kTol);
    const OperatorReport b = is_supersolution(u + beta, P3, Scheme::edge, kTol);
    shift_same += a.passed() == b.passed();
    shift_diff = std::max(shift_diff, (a.residual.front() - b.residual.front()).max_abs());
  }
  Outcome o{min_pass == 20 && shift_same == 20 && shift_diff <= kShiftTol, ""};
  o.detail = fmt("min passes %g/20", min_pass) + fmt(" (worst negative %.3e)", worst) +
             fmt("; shift status equal %g/20", shift_same) + fmt(" max weak change %.3e", shift_diff);
  return o;
}

Outcome comparison_fuzz() {
  auto gen = std::mt19937_64(808);
  const SolverOptions so;
  const double allowed = 10.0 * so.tol;
  double worst = 0.0;
  int violations = 0;
  const Grid g = Grid::cube(2, 0.0, 1.0, 15);
  for (int trial = 0; trial < 25; ++trial) {
    const DiscreteMeasure f2 = interior_data(g, gen, 0.0, 2.0);
    const DiscreteMeasure f1(f2.masses() + interior_data(g, gen, 0.0, 1.0).masses());
    const GridFunction b2 = uniform(g, gen, -1.0, 1.0);
    const GridFunction b1 = b2 + uniform(g, gen, 0.0, 0.5);
    const GridFunction d = solve_dirichlet(g, P3, f1, b1, so) - solve_dirichlet(g, P3, f2, b2, so);
    for (double x : d.values()) {
      worst = std::max(worst, -x);
      violations += x < -allowed;
    }
  }
  const SpaceTimeGrid st(Grid::cube(2, 0.0, 1.0, 13), 0.0, 0.25, 6);
  const Grid& sg = st.spatial();
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<DiscreteMeasure> f1;
    std::vector<DiscreteMeasure> f2;
    std::vector<GridFunction> s1;
    std::vector<GridFunction> s2;
    for (int k = 0; k < st.levels(); ++k) {
      f2.push_back(interior_data(sg, gen, 0.0, 2.0));
      f1.emplace_back(f2.back().masses() + interior_data(sg, gen, 0.0, 1.0).masses());
      s2.push_back(uniform(sg, gen, -1.0, 1.0));
      s1.push_back(s2.back() + uniform(sg, gen, 0.0, 0.5));
    }
    const SpaceTimeFunction U1 = solve_cauchy_dirichlet(st, P3, f1, SpaceTimeFunction(st, std::move(s1)), so);
    const SpaceTimeFunction U2 = solve_cauchy_dirichlet(st, P3, f2, SpaceTimeFunction(st, std::move(s2)), so);
    for (int k = 0; k < st.levels(); ++k) {
      for (std::size_t j = 0; j < sg.size(); ++j) {
        const double x = U1.slice(k)[j] - U2.slice(k)[j];
        worst = std::max(worst, -x);
        violations += x < -allowed;
      }
    }
  }
  return {violations == 0, fmt("violations %g", violations) + fmt(" largest undershoot %.3e", worst) +
                               fmt(" (allowed %.1e)", allowed)};
}

Outcome mollification_convergence() {
  constexpr double kNoise = 0.05;
  constexpr double kFinal = 0.15;
  auto judge = [&](const std::string& name, const std::vector<double>& gaps, Outcome& o) {
    bool ok = gaps.back() <= kFinal * gaps.front();
    o.detail += name + ":";
    for (std::size_t i = 0; i < gaps.size(); ++i) {
      o.detail += fmt(" %.4e", gaps[i]);
      if (i > 0) ok = ok && gaps[i] <= (1.0 + kNoise) * gaps[i - 1];
    }
    o.detail += fmt(" (final/initial %.3f)", gaps.back() / gaps.front()) + (ok ? " ok; " : " not met; ");
    o.pass = o.pass && ok;
  };
  Outcome o{true, ""};
  const std::vector<double> eps{0.2, 0.1, 0.05, 0.025, 0.0125};
  const Grid g = Grid::cube(2, -1.0, 1.0, 513);
  const DiscreteMeasure dirac = DiscreteMeasure::dirac(g, {0.0, 0.0, 0.0});
  auto gen = std::mt19937_64(909);
  // Random positive measure supported in [-0.5, 0.5]^2 so no mass leaves the box.
  GridFunction dens = uniform(g, gen, 0.0, 1.0);
  std::vector<double> dv(dens.values().begin(), dens.values().end());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point x = g.point(k);
    if (std::max(std::abs(x[0]), std::abs(x[1])) > 0.5) dv[k] = 0.0;
  }
  const DiscreteMeasure random = DiscreteMeasure::from_density(GridFunction(g, std::move(dv)));
  for (const auto& [name, mu] : {std::pair<std::string, const DiscreteMeasure*>{"dirac", &dirac}, {"random", &random}}) {
    std::vector<double> gaps;
    for (double e : eps) gaps.push_back(dual_norm(mu->masses() - g.cell_volume() * mollify(*mu, e), P3));
    judge(name, gaps, o);
  }
  const SpaceTimeGrid st(Grid::cube(2, -1.0, 1.0, 257), 0.0, 0.5, 4);
  const Grid& sg = st.spatial();
  const GridFunction d = DiscreteMeasure::dirac(sg, {0.0, 0.0, 0.0}).masses();
  std::vector<double> gaps;
  for (double e : {0.4, 0.2, 0.1, 0.05, 0.025}) {
    const GridFunction diff = d - sg.cell_volume() * mollify(DiscreteMeasure(d), e);
    gaps.push_back(parabolic_dual_norm(SpaceTimeFunction(st, std::vector<GridFunction>(5, diff)), P3));
  }
  judge("slicewise dirac", gaps, o);
  return o;
}

Outcome compactness() {
  const double c = 1.5;
  const double M = 2.0;
  auto member = [&](const SpaceTimeGrid& st, double shift) {
    return SpaceTimeFunction::sample(st, [&](const Point& x, double t) {
      Point y = x;
      y[0] -= shift;
      return std::min(M, exact::barenblatt(y, t, 1, P3, c));
    });
  };
  const SpaceTimeGrid coarse(Grid::cube(1, -6.0, 6.0, 97), 0.5, 1.5, 32);
  const double tol = 0.5 * parabolic_supersolution_check(member(coarse, 0.0), P3, Scheme::edge, 0.0).max_violation;
  const SpaceTimeGrid st(Grid::cube(1, -6.0, 6.0, 193), 0.5, 1.5, 64);
  std::vector<SpaceTimeFunction> family;
  for (int i = 0; i < 10; ++i) family.push_back(member(st, 0.2 * std::ldexp(1.0, -i)));
  CompactnessOptions co;
  co.check_tol = tol;
  co.interior = SpaceTimeBox{box1(-5.0, 5.0), 0.75, 1.5};
  co.eps_schedule = {0.5, 0.25, 0.125, 0.0625, 0.03125};
  co.analytic_limit = member(st, 0.0);
  const CompactnessResult res = compactness_experiment(family, M, P3, co);
  const ExperimentReport& r = res.report;
  Outcome o{r.passed(), fmt("check_tol=%.3e", tol)};
  for (const auto& [k, v] : r.checks) o.detail += " " + k + (v ? "=yes" : "=NO");
  o.detail += fmt(" caccioppoli_median=%.4f", r.values.at("caccioppoli_median"));
  const auto C = r.column("caccioppoli_C");
  o.detail += fmt(" C range [%.4f,", *std::min_element(C.begin(), C.end())) +
              fmt(" %.4f]", *std::max_element(C.begin(), C.end()));
  o.detail += fmt(" subsequence=%g", r.values.at("subsequence_length")) +
              fmt(" limit_l1_rel=%.4e", r.values.at("limit_l1_relative_error"));
  return o;
}

Outcome round_trip() {
  auto gen = std::mt19937_64(1111);
  const SolverOptions so;
  const double allowed = 10.0 * so.tol;
  double worst = 0.0;
  const Grid g = Grid::cube(2, 0.0, 1.0, 17);
  for (int trial = 0; trial < 10; ++trial) {
    const DiscreteMeasure f = interior_data(g, gen, 0.0, 3.0);
    const GridFunction u = solve_dirichlet(g, P3, f, uniform(g, gen, -1.0, 1.0), so);
    worst = std::max(worst, total_variation(riesz_measure(u, P3).signed_masses(), f.masses()));
  }
  const SpaceTimeGrid st(Grid::cube(2, 0.0, 1.0, 13), 0.0, 0.25, 6);
  const Grid& sg = st.spatial();
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<DiscreteMeasure> f;
    for (int k = 0; k < st.levels(); ++k) f.push_back(interior_data(sg, gen, 0.0, 3.0));
    const SpaceTimeFunction U =
        solve_cauchy_dirichlet(st, P3, f, SpaceTimeFunction::sample(st, [](const Point& x, double t) {
                                 return std::sin(3.0 * x[0]) * std::cos(2.0 * x[1]) + t;
                               }),
                               so);
    const SpaceTimeFunction s = riesz_measure_parabolic(U, P3).signed_masses();
    for (int k = 1; k < st.levels(); ++k) {
      worst = std::max(worst, total_variation(s.slice(k), f[static_cast<std::size_t>(k)].masses()));
    }
  }
  return {worst <= allowed, fmt("max total variation %.3e", worst) + fmt(" (allowed %.1e)", allowed)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all{
      {1, "barenblatt mass conservation", 10.0, barenblatt_mass},
      {2, "barenblatt consistency", 60.0, barenblatt_consistency},
      {3, "fundamental solution riesz mass", 60.0, fundamental_riesz_mass},
      {4, "rate reproduction", 300.0, rate_reproduction},
      {5, "integrability sharpness", 600.0, integrability},
      {6, "obstacle complementarity", 120.0, obstacle_complementarity},
      {7, "structural closures (edge scheme)", 60.0, structural_closures},
      {8, "comparison principle fuzz", 300.0, comparison_fuzz},
      {9, "dual-norm mollification convergence", 60.0, mollification_convergence},
      {10, "compactness", 600.0, compactness},
      {11, "round trip", 120.0, round_trip},
  };
  int failures = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::ostringstream line;
    line << "criterion " << c.id << ": " << (pass ? "PASS" : "FAIL") << "  " << c.name << "  [" << fmt("%.1f", secs)
         << " s / " << fmt("%g", c.budget_s) << " s" << (in_time ? "" : ", over budget") << "]  " << o.detail;
    std::puts(line.str().c_str());
    std::fflush(stdout);
  }
  return failures;
}
