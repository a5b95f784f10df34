#pragma once

#include <optional>
#include <string>
#include <vector>

#include "psuper/elliptic.hpp"
#include "psuper/grid.hpp"
#include "psuper/measure.hpp"
#include "psuper/solver.hpp"

namespace psuper {

/// One implicit-Euler step: minimizer of 1/(2 tau) ||u - u_prev||^2 + p_energy(u, f_k) with u = g_k on
/// the boundary, i.e. (u - u_prev)/tau - Delta_p u = f_k. An optional lower bound turns it into the
/// constrained step of the parabolic obstacle problem.
inline GridFunction step_implicit(const GridFunction& u_prev, double tau, const PParams& P, const DiscreteMeasure& f_k,
                                  const GridFunction& g_k, const SolverOptions& opts = {},
                                  const std::optional<GridFunction>& lower = std::nullopt, SolveStats* stats = nullptr) {
  if (!(tau > 0.0)) throw InvalidArgument("step_implicit: tau must be > 0");
  const Grid& grid = u_prev.grid();
  require_same_grid(grid, f_k.grid(), "step_implicit(f)");
  require_same_grid(grid, g_k.grid(), "step_implicit(g)");
  detail::require_finite(u_prev, "step_implicit(u_prev)");
  detail::check_boundary_finite(g_k, "step_implicit");
  ConvexProblem prob{grid,
                     P,
                     opts.scheme,
                     std::vector<double>(f_k.masses().values().begin(), f_k.masses().values().end()),
                     std::vector<double>(u_prev.values().begin(), u_prev.values().end()),
                     tau,
                     std::nullopt};
  if (lower) {
    require_same_grid(grid, lower->grid(), "step_implicit(lower)");
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (grid.is_boundary(k) && g_k[k] < (*lower)[k]) {
        throw Infeasible("step_implicit: boundary data lies below the obstacle at node " + std::to_string(k));
      }
    }
    prob.lower = std::vector<double>(lower->values().begin(), lower->values().end());
  }
  return GridFunction(grid, minimize(prob, detail::initial_iterate(g_k, u_prev), opts, stats));
}

namespace detail {

template <class Step>
SpaceTimeFunction march(const SpaceTimeGrid& stg, const SpaceTimeFunction& pb, Step&& step) {
  if (!(pb.grid() == stg)) throw InvalidArgument("parabolic solve: boundary data lives on a different space-time grid");
  std::vector<GridFunction> slices;
  slices.reserve(static_cast<std::size_t>(stg.levels()));
  slices.push_back(pb.slice(0));
  for (int k = 1; k < stg.levels(); ++k) {
    try {
      slices.push_back(step(k, slices.back()));
    } catch (const NonConvergence& e) {
      throw NonConvergence(e.iterations(), e.residual(), "time level " + std::to_string(k));
    } catch (const Infeasible& e) {
      throw Infeasible("time level " + std::to_string(k) + ": " + e.what());
    }
  }
  return SpaceTimeFunction(stg, std::move(slices));
}

}  // namespace detail

/// Implicit Euler for d_t u - Delta_p u = f. pb supplies the initial slice (level 0) and the lateral
/// boundary values (boundary nodes of every level). f holds one spatial measure per level; level 0
/// is ignored.
inline SpaceTimeFunction solve_cauchy_dirichlet(const SpaceTimeGrid& stg, const PParams& P,
                                                const std::vector<DiscreteMeasure>& f, const SpaceTimeFunction& pb,
                                                const SolverOptions& opts = {}) {
  if (f.size() != static_cast<std::size_t>(stg.levels())) {
    throw InvalidArgument("solve_cauchy_dirichlet: need one measure per time level");
  }
  return detail::march(stg, pb, [&](int k, const GridFunction& prev) {
    return step_implicit(prev, stg.tau(), P, f[static_cast<std::size_t>(k)], pb.slice(k), opts);
  });
}

/// Zero data on every level.
inline std::vector<DiscreteMeasure> zero_data(const SpaceTimeGrid& stg) {
  return std::vector<DiscreteMeasure>(static_cast<std::size_t>(stg.levels()), DiscreteMeasure(stg.spatial()));
}

/// Per-level constrained steps u_k >= psi(., t_k). pb must lie above psi on the parabolic boundary.
inline SpaceTimeFunction solve_parabolic_obstacle(const SpaceTimeGrid& stg, const PParams& P, const SpaceTimeFunction& psi,
                                                  const SpaceTimeFunction& pb, const SolverOptions& opts = {}) {
  if (!(psi.grid() == stg)) throw InvalidArgument("solve_parabolic_obstacle: obstacle grid mismatch");
  const Grid& g = stg.spatial();
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (pb.slice(0)[j] < psi.slice(0)[j]) {
      throw Infeasible("solve_parabolic_obstacle: initial data lies below the obstacle at node " + std::to_string(j));
    }
  }
  const DiscreteMeasure none(g);
  return detail::march(stg, pb, [&](int k, const GridFunction& prev) {
    return step_implicit(prev, stg.tau(), P, none, pb.slice(k), opts, psi.slice(k));
  });
}

}  // namespace psuper
