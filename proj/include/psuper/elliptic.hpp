#pragma once

#include <optional>
#include <vector>

#include "psuper/grid.hpp"
#include "psuper/measure.hpp"
#include "psuper/operators.hpp"
#include "psuper/solver.hpp"

namespace psuper {

namespace detail {

inline void check_boundary_finite(const GridFunction& g, const char* what) {
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g.grid().is_boundary(k) && !std::isfinite(g[k])) {
      throw InvalidArgument(std::string(what) + ": boundary data must be finite");
    }
  }
}

/// Boundary values from g, interior from the optional initial iterate (zero otherwise).
inline std::vector<double> initial_iterate(const GridFunction& g, const std::optional<GridFunction>& initial) {
  std::vector<double> u(g.values().begin(), g.values().end());
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (g.grid().is_boundary(k)) continue;
    u[k] = initial ? (*initial)[k] : 0.0;
    if (!std::isfinite(u[k])) u[k] = 0.0;
  }
  return u;
}

}  // namespace detail

/// Unique minimizer of p_energy(., f) among nodal functions equal to g on the boundary:
/// discrete -Delta_p u = f with Dirichlet data g.
inline GridFunction solve_dirichlet(const Grid& grid, const PParams& P, const DiscreteMeasure& f, const GridFunction& g,
                                    const SolverOptions& opts = {}, const std::optional<GridFunction>& initial = std::nullopt,
                                    SolveStats* stats = nullptr) {
  require_same_grid(grid, f.grid(), "solve_dirichlet(f)");
  require_same_grid(grid, g.grid(), "solve_dirichlet(g)");
  if (initial) require_same_grid(grid, initial->grid(), "solve_dirichlet(initial)");
  detail::check_boundary_finite(g, "solve_dirichlet");
  ConvexProblem prob{grid, P, opts.scheme, std::vector<double>(f.masses().values().begin(), f.masses().values().end()),
                     std::nullopt, std::numeric_limits<double>::infinity(), std::nullopt};
  return GridFunction(grid, minimize(prob, detail::initial_iterate(g, initial), opts, stats));
}

/// Minimizer of p_energy over {u = g on the boundary, u >= psi}.
inline GridFunction solve_obstacle(const Grid& grid, const PParams& P, const GridFunction& psi, const GridFunction& g,
                                   const SolverOptions& opts = {}, const std::optional<GridFunction>& initial = std::nullopt,
                                   SolveStats* stats = nullptr) {
  require_same_grid(grid, psi.grid(), "solve_obstacle(psi)");
  require_same_grid(grid, g.grid(), "solve_obstacle(g)");
  detail::check_boundary_finite(g, "solve_obstacle");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (grid.is_boundary(k) && g[k] < psi[k]) {
      throw Infeasible("solve_obstacle: boundary data lies below the obstacle at node " + std::to_string(k));
    }
  }
  ConvexProblem prob{grid, P, opts.scheme, std::vector<double>(grid.size(), 0.0), std::nullopt,
                     std::numeric_limits<double>::infinity(),
                     std::vector<double>(psi.values().begin(), psi.values().end())};
  return GridFunction(grid, minimize(prob, detail::initial_iterate(g, initial), opts, stats));
}

/// Comparison test on a subdomain: solves the p-harmonic Dirichlet problem h on the snapped box
/// with boundary values u and reports whether u >= h - tol on every node of the box.
inline bool comparison_check(const GridFunction& u, const PParams& P, Scheme scheme, const Box& sub, double tol,
                             SolverOptions opts = {}) {
  const IndexBox box = u.grid().snap(sub);
  const GridFunction local = u.restrict_to(box);
  detail::require_finite(local, "comparison_check");
  opts.scheme = scheme;
  const GridFunction h = solve_dirichlet(local.grid(), P, DiscreteMeasure(local.grid()), local, opts, local);
  for (std::size_t k = 0; k < local.size(); ++k) {
    if (local[k] < h[k] - tol) return false;
  }
  return true;
}

}  // namespace psuper
