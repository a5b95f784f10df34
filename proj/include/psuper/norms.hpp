#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "psuper/grid.hpp"
#include "psuper/simplex.hpp"

namespace psuper {

/// Piecewise-constant gradient of the affine interpolant, one vector per Kuhn simplex.
struct GradientField {
  Grid grid;
  int simplices_per_cell = 1;
  std::vector<Point> values;

  const Point& at(std::size_t cell, int simplex) const {
    return values[cell * static_cast<std::size_t>(simplices_per_cell) + static_cast<std::size_t>(simplex)];
  }
};

inline GradientField gradient(const GridFunction& f) {
  const Grid& g = f.grid();
  GradientField out;
  out.grid = g;
  out.simplices_per_cell = factorial(g.dim());
  out.values.resize(g.cell_count() * static_cast<std::size_t>(out.simplices_per_cell));
  std::size_t last_cell = static_cast<std::size_t>(-1);
  int s_in_cell = 0;
  for_each_simplex(g, g.full(), [&](std::size_t cell, const KuhnSimplex& s) {
    s_in_cell = (cell == last_cell) ? s_in_cell + 1 : 0;
    last_cell = cell;
    out.values[cell * static_cast<std::size_t>(out.simplices_per_cell) + static_cast<std::size_t>(s_in_cell)] =
        simplex_gradient(g, s, f.values());
  });
  return out;
}

namespace detail {

inline void check_exponent(double r, const char* what) {
  if (!(r >= 1.0) || !std::isfinite(r)) throw InvalidArgument(std::string(what) + ": exponent must be finite and >= 1");
}

/// Sum of w_i |f_i|^r over the box with trapezoid weights relative to the box.
inline double power_sum(const GridFunction& f, double r, const IndexBox& box) {
  const Grid& g = f.grid();
  double s = 0.0;
  g.for_each_node(box, [&](std::size_t idx, const MultiIndex& i) {
    const double v = f[idx];
    if (!std::isfinite(v)) throw InvalidArgument("norm: non-finite value inside the subdomain");
    if (v != 0.0) s += g.node_weight(i, box) * std::pow(std::abs(v), r);
  });
  return s;
}

}  // namespace detail

/// Discrete L^r norm with lumped (trapezoid) nodal quadrature.
inline double lr_norm(const GridFunction& f, double r, const std::optional<Box>& sub = std::nullopt) {
  detail::check_exponent(r, "lr_norm");
  return std::pow(detail::power_sum(f, r, f.grid().resolve(sub)), 1.0 / r);
}

/// Exact integral of |grad f|^q over the simplices of the cells inside the box.
inline double grad_power_integral(const GridFunction& f, double q, const IndexBox& box) {
  detail::check_exponent(q, "grad_power_integral");
  const Grid& g = f.grid();
  const double vol = simplex_volume(g);
  double s = 0.0;
  for_each_simplex(g, box, [&](std::size_t, const KuhnSimplex& simplex) {
    const double n2 = norm2(simplex_gradient(g, simplex, f.values()), g.dim());
    if (!std::isfinite(n2)) throw InvalidArgument("norm: non-finite value inside the subdomain");
    if (n2 > 0.0) s += vol * std::pow(n2, 0.5 * q);
  });
  return s;
}

/// ||grad f||_{L^q(sub)}.
inline double grad_lq_norm(const GridFunction& f, double q, const std::optional<Box>& sub = std::nullopt) {
  return std::pow(grad_power_integral(f, q, f.grid().resolve(sub)), 1.0 / q);
}

/// ||f||_{L^q} + ||grad f||_{L^q} over the (snapped) subdomain.
inline double w1q_norm(const GridFunction& f, double q, const std::optional<Box>& sub = std::nullopt) {
  detail::check_exponent(q, "w1q_norm");
  const IndexBox box = f.grid().resolve(sub);
  return std::pow(detail::power_sum(f, q, box), 1.0 / q) + std::pow(grad_power_integral(f, q, box), 1.0 / q);
}

namespace detail {

struct SpaceTimeRange {
  IndexBox space;
  LevelRange time;
};

inline SpaceTimeRange resolve(const SpaceTimeGrid& g, const std::optional<SpaceTimeBox>& sub) {
  if (!sub) return {g.spatial().full(), {0, g.steps()}};
  return {g.spatial().snap(sub->space), snap_levels(g, sub->t_lo, sub->t_hi)};
}

/// Trapezoid weight of level k inside a level range.
inline double level_weight(const SpaceTimeGrid& g, const LevelRange& r, int k) {
  if (r.lo == r.hi) return 0.0;
  return (k == r.lo || k == r.hi) ? 0.5 * g.tau() : g.tau();
}

}  // namespace detail

/// (sum_k w_k sum (|F|^q + |grad F|^q))^{1/q}: the discrete L^q(W^{1,q}) norm on a space-time box.
inline double parabolic_sobolev_norm(const SpaceTimeFunction& f, double q,
                                     const std::optional<SpaceTimeBox>& sub = std::nullopt) {
  detail::check_exponent(q, "parabolic_sobolev_norm");
  const auto range = detail::resolve(f.grid(), sub);
  double s = 0.0;
  for (int k = range.time.lo; k <= range.time.hi; ++k) {
    const double w = detail::level_weight(f.grid(), range.time, k);
    if (w == 0.0) continue;
    s += w * (detail::power_sum(f.slice(k), q, range.space) + grad_power_integral(f.slice(k), q, range.space));
  }
  return std::pow(s, 1.0 / q);
}

/// sum_k w_k ||grad F_k||_{L^q}^q over a space-time box (no 1/q power).
inline double parabolic_grad_power_integral(const SpaceTimeFunction& f, double q,
                                            const std::optional<SpaceTimeBox>& sub = std::nullopt) {
  detail::check_exponent(q, "parabolic_grad_power_integral");
  const auto range = detail::resolve(f.grid(), sub);
  double s = 0.0;
  for (int k = range.time.lo; k <= range.time.hi; ++k) {
    const double w = detail::level_weight(f.grid(), range.time, k);
    if (w != 0.0) s += w * grad_power_integral(f.slice(k), q, range.space);
  }
  return s;
}

/// Discrete L^1 norm over all space-time levels (trapezoid in space and time).
inline double parabolic_l1_norm(const SpaceTimeFunction& f, const std::optional<SpaceTimeBox>& sub = std::nullopt) {
  const auto range = detail::resolve(f.grid(), sub);
  double s = 0.0;
  for (int k = range.time.lo; k <= range.time.hi; ++k) {
    const double w = detail::level_weight(f.grid(), range.time, k);
    if (w != 0.0) s += w * detail::power_sum(f.slice(k), 1.0, range.space);
  }
  return s;
}

}  // namespace psuper
