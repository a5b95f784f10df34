#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "psuper/elliptic.hpp"
#include "psuper/exact.hpp"
#include "psuper/measures.hpp"
#include "psuper/norms.hpp"
#include "psuper/operators.hpp"
#include "psuper/parabolic.hpp"
#include "psuper/report.hpp"

namespace psuper {

// ---------------------------------------------------------------------------------------------
// Elliptic approximation by smooth data
// ---------------------------------------------------------------------------------------------

struct ApproxOptions {
  SolverOptions solver{};
  /// Exponent of the recorded W^{1,q} error column.
  double q = 2.0;
  /// Hat-tested tolerance for the supersolution precondition.
  double supersolution_tol = 1e-8;
  /// Relative slack allowed in the "decreasing column" checks.
  double monotone_slack = 0.10;
  int padding = kDefaultPadding;
};

struct ApproxLevel {
  double eps = 0.0;
  GridFunction u;
  /// Mollified data as nodal masses on the subdomain grid (interior nodes only).
  DiscreteMeasure f;
  double grad_error = 0.0;  ///< ||grad(u - u_i)||_{L^p(sub)}
  double w1p_error = 0.0;   ///< ||u - u_i||_{W^{1,p}(sub)}
  double w1q_error = 0.0;   ///< ||u - u_i||_{W^{1,q}(sub)}
  double dual_gap = 0.0;    ///< ||mu - f_i|| through the Bessel multiplier
  double lost_mass = 0.0;
};

struct ApproxSequence {
  GridFunction reference;  ///< u on the subdomain grid
  DiscreteMeasure mu;      ///< Riesz measure of u restricted to the open subdomain
  std::vector<ApproxLevel> levels;
  bool grad_decreasing = true;
  bool gap_decreasing = true;
};

namespace detail {

inline void require_decreasing(const std::vector<double>& eps) {
  if (eps.empty()) throw InvalidArgument("eps schedule is empty");
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0)) throw InvalidArgument("eps schedule entries must be > 0");
    if (i > 0 && !(eps[i] < eps[i - 1])) throw InvalidArgument("eps schedule must be strictly decreasing");
  }
}

inline bool decreasing_within(const std::vector<double>& v, double slack) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > (1.0 + slack) * v[i - 1]) return false;
  }
  return true;
}

/// Masses of mu on the interior nodes of the index box, as a measure on the box's own grid.
inline DiscreteMeasure restrict_interior(const DiscreteMeasure& mu, const IndexBox& box) {
  return DiscreteMeasure(mu.masses().restrict_to(box)).interior();
}

/// Mollified data on the subdomain grid, boundary nodes dropped.
inline DiscreteMeasure mollified_data(const DiscreteMeasure& mu_sub, double eps, double* lost) {
  MollifyInfo info;
  const GridFunction density = mollify(mu_sub, eps, &info);
  const DiscreteMeasure f = DiscreteMeasure::from_density(density).interior();
  if (lost) *lost = std::max(0.0, mu_sub.total_mass() - f.total_mass());
  return f;
}

}  // namespace detail

/// Smooth-data approximation of a supersolution on a subdomain: mu = Riesz measure of u restricted to
/// sub, f_i = mollify(mu, eps_i), u_i solves -Delta_p u_i = f_i on sub with u_i = u on its boundary.
inline ApproxSequence approximate_supersolution(const GridFunction& u, const Box& sub, const PParams& P,
                                                const std::vector<double>& eps_schedule, const ApproxOptions& opts = {}) {
  detail::require_decreasing(eps_schedule);
  const Grid& g = u.grid();
  const IndexBox box = g.snap(sub);
  for (int a = 0; a < g.dim(); ++a) {
    if (box.lo[a] == 0 || box.hi[a] == g.nodes(a) - 1) {
      throw InvalidArgument("approximate_supersolution: subdomain must lie strictly inside the grid");
    }
  }
  const OperatorReport pre = is_supersolution(u, P, opts.solver.scheme, opts.supersolution_tol);
  if (!pre.passed()) {
    throw InvalidArgument("approximate_supersolution: input is not a supersolution (max violation " +
                          std::to_string(pre.max_violation) + ")");
  }
  ApproxSequence seq;
  seq.reference = u.restrict_to(box);
  seq.mu = detail::restrict_interior(riesz_measure(u, P, opts.solver.scheme).measure, box);
  const Grid& sg = seq.reference.grid();
  std::optional<GridFunction> warm = seq.reference;
  std::vector<double> grads;
  std::vector<double> gaps;
  for (double eps : eps_schedule) {
    ApproxLevel lvl;
    lvl.eps = eps;
    lvl.f = detail::mollified_data(seq.mu, eps, &lvl.lost_mass);
    lvl.u = solve_dirichlet(sg, P, lvl.f, seq.reference, opts.solver, warm);
    const GridFunction e = seq.reference - lvl.u;
    lvl.grad_error = grad_lq_norm(e, P.p());
    lvl.w1p_error = w1q_norm(e, P.p());
    lvl.w1q_error = w1q_norm(e, opts.q);
    lvl.dual_gap = dual_norm(seq.mu.masses() - lvl.f.masses(), P, opts.padding);
    grads.push_back(lvl.grad_error);
    gaps.push_back(lvl.dual_gap);
    seq.levels.push_back(std::move(lvl));
  }
  seq.grad_decreasing = detail::decreasing_within(grads, opts.monotone_slack);
  seq.gap_decreasing = detail::decreasing_within(gaps, opts.monotone_slack);
  return seq;
}

struct RateFit {
  double slope = 0.0;
  double predicted = 0.0;  ///< 1/(p-1)
  /// Geometric-mean constant in ||grad(u - u_i)||^{p-1} <= C ||mu - f_i||.
  double constant = 0.0;
  /// max_i (ratio_i / constant); the one-sided bound holds within 25% when <= 1.25.
  double worst_ratio = 0.0;
  bool slope_ok = false;
  bool one_sided_ok = false;
  int levels_used = 0;

  bool passed() const noexcept { return slope_ok && one_sided_ok; }
};

/// Log-log slope of the gradient error against the dual-norm gap, coarsest level discarded.
/// Passes when slope >= 0.9/(p-1) and every level obeys the fitted one-sided bound within 25%.
inline RateFit rate_fit(const std::vector<double>& gaps, const std::vector<double>& errors, const PParams& P) {
  if (gaps.size() != errors.size()) throw InvalidArgument("rate_fit: column lengths differ");
  if (gaps.size() < 4) throw DegenerateFit("rate_fit: need at least 3 levels after discarding the coarsest");
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = 1; i < gaps.size(); ++i) {
    if (!(gaps[i] > 0.0) || !(errors[i] > 0.0)) throw DegenerateFit("rate_fit: nonpositive gap or error");
    x.push_back(std::log(gaps[i]));
    y.push_back(std::log(errors[i]));
  }
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (std::abs(x[i] - x[i - 1]) < std::log(1.1)) throw DegenerateFit("rate_fit: gaps not separated by 10%");
  }
  RateFit fit;
  fit.levels_used = static_cast<int>(x.size());
  fit.slope = fit_slope(x, y);
  fit.predicted = 1.0 / (P.p() - 1.0);
  fit.slope_ok = fit.slope >= 0.9 * fit.predicted;
  double logc = 0.0;
  std::vector<double> ratios;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = std::pow(std::exp(y[i]), P.p() - 1.0) / std::exp(x[i]);
    ratios.push_back(r);
    logc += std::log(r) / static_cast<double>(x.size());
  }
  fit.constant = std::exp(logc);
  for (double r : ratios) fit.worst_ratio = std::max(fit.worst_ratio, r / fit.constant);
  fit.one_sided_ok = fit.worst_ratio <= 1.25;
  return fit;
}

inline RateFit rate_experiment(const ApproxSequence& seq, const PParams& P) {
  std::vector<double> gaps;
  std::vector<double> errors;
  for (const auto& l : seq.levels) {
    gaps.push_back(l.dual_gap);
    errors.push_back(l.grad_error);
  }
  return rate_fit(gaps, errors, P);
}

inline ExperimentReport approx_report(const std::string& name, const ApproxSequence& seq) {
  ExperimentReport r;
  r.name = name;
  r.columns = {"eps", "grad_lp_error", "w1p_error", "w1q_error", "dual_gap", "f_mass", "lost_mass"};
  for (const auto& l : seq.levels) {
    r.add_row({l.eps, l.grad_error, l.w1p_error, l.w1q_error, l.dual_gap, l.f.total_mass(), l.lost_mass});
  }
  r.values["mu_mass"] = seq.mu.total_mass();
  r.checks["grad_error_decreasing"] = seq.grad_decreasing;
  r.checks["dual_gap_decreasing"] = seq.gap_decreasing;
  return r;
}

// ---------------------------------------------------------------------------------------------
// p-superharmonic functions: obstacle stage + smooth-data stage
// ---------------------------------------------------------------------------------------------

struct SuperharmonicSchedule {
  /// Mollification radius of the i-th obstacle (i = 1..levels); heights are M_i = 2^i.
  std::vector<double> obstacle_eps;
  /// Candidate radii for the smooth-data stage, refined until the 1/i budget is met.
  std::vector<double> data_eps;
  /// Smooth test functions for the weak convergence int phi f_i -> int phi dmu (evaluated at nodes).
  std::vector<std::function<double(const Point&)>> tests;
};

struct SuperharmonicLevel {
  double height = 0.0;
  double obstacle_eps = 0.0;
  /// Constant subtracted from the mollified truncation so that the obstacles increase.
  double obstacle_shift = 0.0;
  double data_eps = 0.0;
  GridFunction obstacle;   ///< psi_i on the subdomain grid
  GridFunction obstacle_solution;  ///< tilde u_i
  GridFunction smooth_solution;    ///< u_i
  double budget_gap = 0.0;  ///< ||u_i - tilde u_i||_{W^{1,p}}
  bool budget_met = false;
  double w1q_error = 0.0;   ///< ||u - u_i||_{W^{1,q}}, non-finite nodes of u excluded
  std::vector<double> weak_errors;  ///< |int phi f_i - <mu, phi>| per test function
};

struct SuperharmonicSequence {
  GridFunction reference;
  std::vector<SuperharmonicLevel> levels;
  bool obstacle_solutions_increasing = true;
  bool w1q_decreasing = true;
};

namespace detail {

inline GridFunction truncate_above(const GridFunction& u, double height) {
  std::vector<double> v(u.values().begin(), u.values().end());
  for (double& x : v) x = std::min(x, height);
  return GridFunction(u.grid(), std::move(v));
}

/// u - v with nodes where either is non-finite set to zero (the pole sentinel is a null set).
inline GridFunction finite_difference_field(const GridFunction& u, const GridFunction& v) {
  require_same_grid(u.grid(), v.grid(), "finite_difference_field");
  std::vector<double> d(u.size());
  for (std::size_t k = 0; k < d.size(); ++k) {
    d[k] = (std::isfinite(u[k]) && std::isfinite(v[k])) ? u[k] - v[k] : 0.0;
  }
  return GridFunction(u.grid(), std::move(d));
}

}  // namespace detail

/// Two-stage approximation of a (possibly unbounded) p-superharmonic sample u: increasing smooth
/// obstacles psi_i = mollify(min(u, 2^i)) - c_i give obstacle solutions tilde u_i, and each tilde u_i
/// is approximated by a smooth-data solution u_i with ||u_i - tilde u_i||_{W^{1,p}} <= 1/i.
/// The shifts c_i >= 0 vanish on the last level and absorb lattice ripples of the mollifier, so the
/// obstacles are nondecreasing exactly.
/// mu_reference, when given, is the Riesz functional of u on the full grid used for the weak
/// convergence column.
inline SuperharmonicSequence approximate_superharmonic(const GridFunction& u, const Box& sub, const PParams& P,
                                                       const SuperharmonicSchedule& schedule, const ApproxOptions& opts = {},
                                                       const std::optional<GridFunction>& mu_reference = std::nullopt) {
  if (schedule.obstacle_eps.empty()) throw InvalidArgument("approximate_superharmonic: empty obstacle schedule");
  detail::require_decreasing(schedule.data_eps);
  const Grid& g = u.grid();
  const IndexBox box = g.snap(sub);
  SuperharmonicSequence seq;
  seq.reference = u.restrict_to(box);
  const Grid& sg = seq.reference.grid();
  std::optional<GridFunction> mu_sub;
  if (mu_reference) mu_sub = mu_reference->restrict_to(box);
  std::vector<GridFunction> tests;
  for (const auto& phi : schedule.tests) {
    // Test functions vanish on the subdomain boundary.
    GridFunction t = GridFunction::sample(sg, phi);
    std::vector<double> v(t.values().begin(), t.values().end());
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (sg.is_boundary(k)) v[k] = 0.0;
    }
    tests.emplace_back(sg, std::move(v));
  }
  const std::size_t L = schedule.obstacle_eps.size();
  std::vector<GridFunction> smooth;
  for (std::size_t i = 0; i < L; ++i) {
    const GridFunction truncated = detail::truncate_above(u, std::ldexp(1.0, static_cast<int>(i) + 1));
    smooth.push_back(mollify_function(truncated, schedule.obstacle_eps[i]).restrict_to(box));
  }
  std::vector<double> shift(L, 0.0);
  for (std::size_t i = L - 1; i > 0; --i) {
    double drop = 0.0;
    for (std::size_t k = 0; k < smooth[i].size(); ++k) drop = std::max(drop, smooth[i - 1][k] - smooth[i][k]);
    shift[i - 1] = shift[i] + drop;
  }
  std::vector<double> w1q;
  for (std::size_t i = 0; i < L; ++i) {
    const int index = static_cast<int>(i) + 1;
    SuperharmonicLevel lvl;
    lvl.height = std::ldexp(1.0, index);
    lvl.obstacle_eps = schedule.obstacle_eps[i];
    lvl.obstacle_shift = shift[i];
    lvl.obstacle = smooth[i] + (-shift[i]);
    lvl.obstacle_solution = solve_obstacle(sg, P, lvl.obstacle, lvl.obstacle, opts.solver);
    const DiscreteMeasure mu_i = riesz_measure(lvl.obstacle_solution, P, opts.solver.scheme).measure.interior();
    const double budget = 1.0 / index;
    std::optional<GridFunction> warm = lvl.obstacle_solution;
    for (double eps : schedule.data_eps) {
      const DiscreteMeasure f = detail::mollified_data(mu_i, eps, nullptr);
      lvl.smooth_solution = solve_dirichlet(sg, P, f, lvl.obstacle_solution, opts.solver, warm);
      warm = lvl.smooth_solution;
      lvl.data_eps = eps;
      lvl.budget_gap = w1q_norm(lvl.smooth_solution - lvl.obstacle_solution, P.p());
      lvl.weak_errors.clear();
      if (mu_sub) {
        for (const auto& t : tests) {
          lvl.weak_errors.push_back(std::abs(f.pair(t) - [&] {
            double s = 0.0;
            for (std::size_t k = 0; k < t.size(); ++k) s += (*mu_sub)[k] * t[k];
            return s;
          }()));
        }
      }
      if (lvl.budget_gap <= budget) {
        lvl.budget_met = true;
        break;
      }
    }
    lvl.w1q_error = w1q_norm(detail::finite_difference_field(seq.reference, lvl.smooth_solution), opts.q);
    w1q.push_back(lvl.w1q_error);
    if (!seq.levels.empty()) {
      const GridFunction& prev = seq.levels.back().obstacle_solution;
      for (std::size_t k = 0; k < prev.size(); ++k) {
        if (prev[k] > lvl.obstacle_solution[k] + 10.0 * opts.solver.tol) seq.obstacle_solutions_increasing = false;
      }
    }
    seq.levels.push_back(std::move(lvl));
  }
  seq.w1q_decreasing = detail::decreasing_within(w1q, opts.monotone_slack);
  return seq;
}

// ---------------------------------------------------------------------------------------------
// Parabolic approximation by smooth data
// ---------------------------------------------------------------------------------------------

struct ParabolicApproxLevel {
  double eps = 0.0;
  SpaceTimeFunction u;
  double sobolev_error = 0.0;   ///< L^q(W^{1,q}) norm of U - u_i
  double grad_p_error = 0.0;    ///< ||grad(U - u_i)||_{L^p(L^p)}
  double dual_gap = 0.0;        ///< L^{p'}(W^{-1,p'}) gap of mu - f_i
};

struct ParabolicApproxSequence {
  SpaceTimeFunction reference;  ///< U on the sub-cylinder
  SpaceTimeFunction mu;         ///< spatial Riesz masses per level (level 0 zero), nonnegative
  std::vector<ParabolicApproxLevel> levels;
  bool error_decreasing = true;
  bool gap_decreasing = true;
};

struct ParabolicApproxOptions {
  SolverOptions solver{};
  double q = 2.0;
  double supersolution_tol = 1e-8;
  /// Skip the supersolution precondition (for inputs that are supersolutions only up to truncation error).
  bool check_input = true;
  double monotone_slack = 0.10;
  int padding = kDefaultPadding;
  /// Stop at the first eps whose L^q(W^{1,q}) error is <= budget (0 disables).
  double budget = 0.0;
};

namespace detail {

inline SpaceTimeFunction restrict_cylinder(const SpaceTimeFunction& U, const IndexBox& box, const LevelRange& lv) {
  const Grid sg = U.grid().spatial().subgrid(box);
  const SpaceTimeGrid st(sg, U.grid().time(lv.lo), U.grid().time(lv.hi), lv.hi - lv.lo);
  std::vector<GridFunction> slices;
  for (int k = lv.lo; k <= lv.hi; ++k) slices.push_back(U.slice(k).restrict_to(box));
  return SpaceTimeFunction(st, std::move(slices));
}

}  // namespace detail

/// Parabolic mirror of approximate_supersolution on a sub-cylinder: slicewise mollified Riesz data,
/// Cauchy-Dirichlet solves with the parabolic boundary values of U.
inline ParabolicApproxSequence approximate_superparabolic(const SpaceTimeFunction& U, const SpaceTimeBox& sub,
                                                          const PParams& P, const std::vector<double>& eps_schedule,
                                                          const ParabolicApproxOptions& opts = {}) {
  detail::require_decreasing(eps_schedule);
  if (opts.check_input) {
    const OperatorReport pre = parabolic_supersolution_check(U, P, opts.solver.scheme, opts.supersolution_tol);
    if (!pre.passed()) {
      throw InvalidArgument("approximate_superparabolic: input is not a supersolution (max violation " +
                            std::to_string(pre.max_violation) + ")");
    }
  }
  const Grid& g = U.grid().spatial();
  const IndexBox box = g.snap(sub.space);
  for (int a = 0; a < g.dim(); ++a) {
    if (box.lo[a] == 0 || box.hi[a] == g.nodes(a) - 1) {
      throw InvalidArgument("approximate_superparabolic: subdomain must lie strictly inside the grid");
    }
  }
  const LevelRange lv = snap_levels(U.grid(), sub.t_lo, sub.t_hi);
  if (lv.hi <= lv.lo) throw InvalidArgument("approximate_superparabolic: empty time window");
  const ParabolicRieszMeasure riesz = riesz_measure_parabolic(U, P, opts.solver.scheme);

  ParabolicApproxSequence seq;
  seq.reference = detail::restrict_cylinder(U, box, lv);
  const SpaceTimeGrid& st = seq.reference.grid();
  std::vector<DiscreteMeasure> mu_levels;
  std::vector<GridFunction> mu_slices;
  mu_levels.emplace_back(st.spatial());
  mu_slices.emplace_back(st.spatial(), 0.0);
  for (int k = lv.lo + 1; k <= lv.hi; ++k) {
    mu_levels.push_back(detail::restrict_interior(riesz.measures[static_cast<std::size_t>(k)], box));
    mu_slices.push_back(mu_levels.back().masses());
  }
  seq.mu = SpaceTimeFunction(st, mu_slices);
  std::vector<double> errs;
  std::vector<double> gaps;
  for (double eps : eps_schedule) {
    ParabolicApproxLevel lvl;
    lvl.eps = eps;
    std::vector<DiscreteMeasure> f;
    std::vector<GridFunction> diff;
    f.emplace_back(st.spatial());
    diff.emplace_back(st.spatial(), 0.0);
    for (std::size_t k = 1; k < mu_levels.size(); ++k) {
      f.push_back(detail::mollified_data(mu_levels[k], eps, nullptr));
      diff.push_back(mu_levels[k].masses() - f.back().masses());
    }
    lvl.u = solve_cauchy_dirichlet(st, P, f, seq.reference, opts.solver);
    const SpaceTimeFunction e = seq.reference - lvl.u;
    lvl.sobolev_error = parabolic_sobolev_norm(e, opts.q);
    lvl.grad_p_error = std::pow(parabolic_grad_power_integral(e, P.p()), 1.0 / P.p());
    lvl.dual_gap = parabolic_dual_norm(SpaceTimeFunction(st, std::move(diff)), P, opts.padding);
    errs.push_back(lvl.sobolev_error);
    gaps.push_back(lvl.dual_gap);
    const bool done = opts.budget > 0.0 && lvl.sobolev_error <= opts.budget;
    seq.levels.push_back(std::move(lvl));
    if (done) break;
  }
  seq.error_decreasing = detail::decreasing_within(errs, opts.monotone_slack);
  seq.gap_decreasing = detail::decreasing_within(gaps, opts.monotone_slack);
  return seq;
}

// ---------------------------------------------------------------------------------------------
// Integrability of the exact singular solutions
// ---------------------------------------------------------------------------------------------

enum class IntegrabilityKind { elliptic, parabolic };

enum class Integrability { convergent, divergent, borderline };

inline const char* to_string(Integrability c) {
  switch (c) {
    case Integrability::convergent: return "CONVERGENT";
    case Integrability::divergent: return "DIVERGENT";
    default: return "BORDERLINE";
  }
}

struct IntegrabilityOptions {
  /// Coarsest spacing; level k uses h0 / 2^k.
  double h0 = 1.0 / 16.0;
  /// Half-width of the spatial box around the pole.
  double half_width = 0.5;
  /// Parabolic only: coarsest time step and final time.
  double tau0 = 1.0 / 64.0;
  double t_final = 1.0;
  /// Allowed relative deviation of a divergent growth ratio from the radial prediction.
  double ratio_tolerance = 0.30;
};

struct IntegrabilityRow {
  double q = 0.0;
  std::vector<double> integrals;  ///< int |grad u|^q per level
  double growth_ratio = 0.0;      ///< last increment ratio (I_{k+1} - I_k)/(I_k - I_{k-1})
  double predicted_ratio = 0.0;
  Integrability classification = Integrability::borderline;
  Integrability expected = Integrability::borderline;
};

namespace detail {

/// Cell-centred lattice around the origin: nodes at (j + 1/2) h, |x| <= half_width.
inline Grid centred_grid(int dim, double h, double half_width) {
  const int half = static_cast<int>(std::ceil(half_width / h - 0.5 - 1e-9));
  const int m = 2 * half + 2;
  const double L = (m - 1) * h / 2.0;
  return Grid::cube(dim, -L, L, m);
}

}  // namespace detail

/// Tabulates int |grad u|^q (elliptic: fundamental p-superharmonic function; parabolic: Barenblatt on
/// (0, t_final)) on grids with h halved per level and classifies each q by the ratio of successive
/// increments: below 1 the values are Cauchy, above 1 they grow geometrically. The radial prediction
/// for the ratio is 2^{(1-beta) q - n} (elliptic, beta = (p-n)/(p-1)) and 2^{((n+1) q - n)/lambda - 1}
/// (parabolic).
inline ExperimentReport integrability_experiment(IntegrabilityKind kind, int n, const PParams& P,
                                                 const std::vector<double>& q_list, int levels,
                                                 const IntegrabilityOptions& opts = {}) {
  if (levels < 3) throw InsufficientLevels("integrability_experiment: need at least 3 refinement levels");
  const auto bounds = exact::exponent_bounds(n, P);
  const double critical = kind == IntegrabilityKind::elliptic ? bounds.q_elliptic : bounds.q_parabolic;
  const double c = kind == IntegrabilityKind::parabolic ? exact::barenblatt_normalize(n, P) : 0.0;
  std::vector<IntegrabilityRow> rows;
  for (double q : q_list) {
    IntegrabilityRow row;
    row.q = q;
    if (kind == IntegrabilityKind::elliptic) {
      const double beta = exact::fundamental_exponent(n, P);
      row.predicted_ratio = std::exp2((1.0 - beta) * q - n);
    } else {
      const double lambda = exact::barenblatt_lambda(n, P);
      row.predicted_ratio = std::exp2(((n + 1.0) * q - n) / lambda - 1.0);
    }
    row.expected = std::abs(q - critical) <= 1e-9 * critical ? Integrability::borderline
                   : q < critical                           ? Integrability::convergent
                                                            : Integrability::divergent;
    rows.push_back(row);
  }
  std::vector<double> hs;
  for (int lvl = 0; lvl < levels; ++lvl) {
    const double h = opts.h0 / std::ldexp(1.0, lvl);
    hs.push_back(h);
    const Grid grid = detail::centred_grid(n, h, opts.half_width);
    if (kind == IntegrabilityKind::elliptic) {
      const GridFunction u =
          GridFunction::sample(grid, [&](const Point& x) { return exact::fundamental_superharmonic(x, n, P); });
      for (auto& row : rows) row.integrals.push_back(grad_power_integral(u, row.q, grid.full()));
    } else {
      const int steps = static_cast<int>(std::lround(opts.t_final / (opts.tau0 / std::ldexp(1.0, lvl))));
      const SpaceTimeGrid st(grid, 0.0, opts.t_final, steps);
      const SpaceTimeFunction B =
          SpaceTimeFunction::sample(st, [&](const Point& x, double t) { return exact::barenblatt(x, t, n, P, c); });
      for (auto& row : rows) row.integrals.push_back(parabolic_grad_power_integral(B, row.q));
    }
  }
  ExperimentReport rep;
  rep.name = kind == IntegrabilityKind::elliptic ? "integrability-elliptic" : "integrability-parabolic";
  rep.parameters = {{"n", n}, {"p", P.p()}, {"levels", levels}, {"h0", opts.h0}, {"critical_q", critical}};
  rep.columns = {"level", "h"};
  for (const auto& row : rows) rep.columns.push_back("I_q" + std::to_string(row.q));
  for (int lvl = 0; lvl < levels; ++lvl) {
    std::vector<double> r{static_cast<double>(lvl), hs[static_cast<std::size_t>(lvl)]};
    for (const auto& row : rows) r.push_back(row.integrals[static_cast<std::size_t>(lvl)]);
    rep.add_row(std::move(r));
  }
  rep.values["critical_q"] = critical;
  for (auto& row : rows) {
    const auto& I = row.integrals;
    const std::size_t L = I.size();
    const double d1 = I[L - 1] - I[L - 2];
    const double d0 = I[L - 2] - I[L - 3];
    row.growth_ratio = d1 / d0;
    if (row.expected == Integrability::borderline) {
      row.classification = Integrability::borderline;
    } else {
      row.classification = (d0 > 0.0 && d1 > 0.0 && row.growth_ratio > 1.0) ? Integrability::divergent
                                                                               : Integrability::convergent;
    }
    const std::string key = "q=" + std::to_string(row.q);
    rep.values[key + ":growth_ratio"] = row.growth_ratio;
    rep.values[key + ":predicted_ratio"] = row.predicted_ratio;
    rep.notes.push_back(key + " " + to_string(row.classification) + " (expected " + to_string(row.expected) + ")");
    if (row.expected == Integrability::borderline) continue;
    rep.checks[key + ":classification"] = row.classification == row.expected;
    if (row.expected == Integrability::divergent) {
      rep.checks[key + ":ratio_matches_prediction"] =
          std::abs(row.growth_ratio - row.predicted_ratio) <= opts.ratio_tolerance * row.predicted_ratio;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------------------------
// Compactness of bounded supersolution families
// ---------------------------------------------------------------------------------------------

struct CompactnessOptions {
  Scheme scheme = Scheme::edge;
  /// Hat-tested tolerance for the supersolution checks (members and limit).
  double check_tol = 1e-8;
  /// Interior cylinder for the Caccioppoli bound and the smooth approximants.
  SpaceTimeBox interior{};
  /// Allowed spread of ||grad u_i||_{L^p} / M around the family median.
  double caccioppoli_spread = 0.25;
  /// eps candidates for the smooth approximants v_i (budget 1/i in L^q(W^{1,q})).
  std::vector<double> eps_schedule{};
  double q = 2.0;
  /// Exponent s in (1, n/(n-1)) of the slicewise W^{-1,s} <= C L^1 bound.
  double s = 1.5;
  SolverOptions solver{};
  /// Minimum subsequence length before the greedy extraction counts as settled.
  int min_subsequence = 3;
  /// Analytic limit for the L^1 comparison (optional) and its relative tolerance.
  std::optional<SpaceTimeFunction> analytic_limit{};
  double limit_tolerance = 0.02;
};

struct CompactnessResult {
  ExperimentReport report;
  std::vector<int> subsequence;
  SpaceTimeFunction limit;
};

/// ||T_1 nu||_{L^s} for a general exponent s > 1.
inline double dual_norm_exponent(const GridFunction& nu, double s, int padding = kDefaultPadding) {
  return dual_norm(nu, PParams(s / (s - 1.0)), padding);
}

inline CompactnessResult compactness_experiment(const std::vector<SpaceTimeFunction>& family, double M, const PParams& P,
                                                const CompactnessOptions& opts) {
  if (family.size() < 2) throw InvalidArgument("compactness_experiment: need at least two members");
  const SpaceTimeGrid& st = family.front().grid();
  const int n = st.spatial().dim();
  CompactnessResult out;
  ExperimentReport& rep = out.report;
  rep.name = "compactness";
  rep.parameters = {{"members", family.size()}, {"M", M}, {"p", P.p()}, {"q", opts.q}, {"s", opts.s}};
  rep.columns = {"member", "sup_norm", "check_worst", "caccioppoli_C", "approx_error", "approx_eps",
                 "max_slice_bound_ratio"};

  // Calibrated Young constant: ||T_1 delta||_{L^s}, so that ||T_1 f||_{L^s} <= C ||f||_{L^1} for f >= 0.
  const Grid& sg0 = st.spatial();
  const IndexBox ibox = sg0.snap(opts.interior.space);
  const Grid sub_grid = sg0.subgrid(ibox);
  Point centre{0.0, 0.0, 0.0};
  for (int a = 0; a < n; ++a) centre[a] = 0.5 * (sub_grid.lo(a) + sub_grid.hi(a));
  const double young = dual_norm_exponent(DiscreteMeasure::dirac(sub_grid, centre).masses(), opts.s);
  rep.values["young_constant"] = young;
  if (n > 1 && !(opts.s < static_cast<double>(n) / (n - 1))) {
    throw InvalidArgument("compactness_experiment: s must lie in (1, n/(n-1))");
  }

  std::vector<double> cacc;
  std::vector<SpaceTimeFunction> approximants;
  bool members_ok = true;
  bool bounded = true;
  bool budgets_ok = true;
  bool slice_ok = true;
  for (std::size_t i = 0; i < family.size(); ++i) {
    const auto& u = family[i];
    if (!(u.grid() == st)) throw InvalidArgument("compactness_experiment: members live on different grids");
    const double sup = u.max_abs();
    bounded = bounded && sup <= M * (1.0 + 1e-12);
    const OperatorReport chk = parabolic_supersolution_check(u, P, opts.scheme, opts.check_tol);
    members_ok = members_ok && chk.passed();
    const double grad = std::pow(parabolic_grad_power_integral(u, P.p(), opts.interior), 1.0 / P.p());
    cacc.push_back(grad / M);

    // Smooth approximants with the 1/i budget.
    ParabolicApproxOptions po;
    po.solver = opts.solver;
    po.solver.scheme = opts.scheme;
    po.q = opts.q;
    po.check_input = false;
    po.budget = 1.0 / static_cast<double>(i + 1);
    double approx_error = std::numeric_limits<double>::quiet_NaN();
    double approx_eps = std::numeric_limits<double>::quiet_NaN();
    double worst_slice = 0.0;
    if (!opts.eps_schedule.empty()) {
      const auto seq = approximate_superparabolic(u, opts.interior, P, opts.eps_schedule, po);
      const auto& last = seq.levels.back();
      approx_error = last.sobolev_error;
      approx_eps = last.eps;
      budgets_ok = budgets_ok && approx_error <= po.budget;
      // Slicewise W^{-1,s} bound for the smooth data of the accepted level.
      for (int k = 1; k < seq.reference.grid().levels(); ++k) {
        const DiscreteMeasure mk(seq.mu.slice(k));
        const DiscreteMeasure fk = detail::mollified_data(mk, last.eps, nullptr);
        const double mass = fk.total_mass();
        if (mass <= 0.0) continue;
        const double dn = dual_norm_exponent(fk.masses(), opts.s);
        worst_slice = std::max(worst_slice, dn / (young * mass));
      }
      slice_ok = slice_ok && worst_slice <= 1.0 + 1e-9;
      approximants.push_back(last.u);
    }
    rep.add_row({static_cast<double>(i), sup, chk.worst, cacc.back(), approx_error, approx_eps, worst_slice});
  }
  std::vector<double> sorted = cacc;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[sorted.size() / 2];
  bool cacc_ok = true;
  for (double cval : cacc) cacc_ok = cacc_ok && std::abs(cval - median) <= opts.caccioppoli_spread * median;
  rep.values["caccioppoli_median"] = median;
  rep.checks["members_bounded_by_M"] = bounded;
  rep.checks["members_are_supersolutions"] = members_ok;
  rep.checks["caccioppoli_uniform"] = cacc_ok;
  if (!opts.eps_schedule.empty()) {
    rep.checks["approximant_budgets"] = budgets_ok;
    rep.checks["slicewise_dual_bound"] = slice_ok;
  }

  // Greedy L^1-Cauchy extraction over the approximants (the members themselves without an eps schedule):
  // the next index is the first with ||v_j - v_{i_k}||_{L^1} <= 2^{-k}.
  const std::vector<SpaceTimeFunction>& seqv = approximants.empty() ? family : approximants;
  out.subsequence.push_back(0);
  for (std::size_t j = 1; j < seqv.size(); ++j) {
    const int k = static_cast<int>(out.subsequence.size());
    const double d = parabolic_l1_norm(seqv[j] - seqv[static_cast<std::size_t>(out.subsequence.back())]);
    if (d <= std::ldexp(1.0, -k)) out.subsequence.push_back(static_cast<int>(j));
  }
  rep.values["subsequence_length"] = static_cast<double>(out.subsequence.size());
  if (static_cast<int>(out.subsequence.size()) < opts.min_subsequence) {
    throw NoCauchySubsequence("compactness_experiment: greedy extraction stalled after " +
                              std::to_string(out.subsequence.size()) + " members");
  }
  out.limit = seqv[static_cast<std::size_t>(out.subsequence.back())];
  const OperatorReport lim = parabolic_supersolution_check(out.limit, P, opts.scheme, opts.check_tol);
  rep.checks["limit_is_supersolution"] = lim.passed();
  rep.values["limit_check_worst"] = lim.worst;
  if (opts.analytic_limit) {
    SpaceTimeFunction target = *opts.analytic_limit;
    if (!approximants.empty()) {
      target = detail::restrict_cylinder(target, ibox, snap_levels(st, opts.interior.t_lo, opts.interior.t_hi));
    }
    const double rel = parabolic_l1_norm(out.limit - target) / parabolic_l1_norm(target);
    rep.values["limit_l1_relative_error"] = rel;
    rep.checks["limit_matches_analytic"] = rel <= opts.limit_tolerance;
  }
  return out;
}

}  // namespace psuper
