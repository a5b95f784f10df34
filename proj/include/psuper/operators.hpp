#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "psuper/grid.hpp"
#include "psuper/measure.hpp"
#include "psuper/simplex.hpp"

namespace psuper {

/// simplex: gradient of the piecewise-affine energy (consistent with -Delta_p).
/// edge: graph p-Laplacian over grid edges, sum_a |D_a u|^p (monotone, anisotropic for p != 2).
enum class Scheme { simplex, edge };

inline const char* to_string(Scheme s) { return s == Scheme::simplex ? "simplex" : "edge"; }

inline Scheme scheme_from_string(const std::string& s) {
  if (s == "simplex") return Scheme::simplex;
  if (s == "edge") return Scheme::edge;
  throw InvalidArgument("unknown scheme '" + s + "' (expected simplex or edge)");
}

namespace detail {

inline void require_finite(const GridFunction& u, const char* what) {
  for (double v : u.values()) {
    if (!std::isfinite(v)) throw InvalidArgument(std::string(what) + ": non-finite nodal value");
  }
}

/// Calls fn(i, j, axis, weight) for each grid edge i -> j = i + e_axis. The edge energy is
/// weight/p * |(u_j - u_i)/h_axis|^p.
template <class Fn>
void for_each_edge(const Grid& g, Fn&& fn) {
  const double w = g.cell_volume();
  g.for_each_node(g.full(), [&](std::size_t idx, const MultiIndex& i) {
    for (int a = 0; a < g.dim(); ++a) {
      if (i[a] + 1 < g.nodes(a)) fn(idx, idx + g.stride(a), a, w);
    }
  });
}

}  // namespace detail

/// Discrete p-Dirichlet energy without data: sum over simplices (or edges) of |grad u|^p / p.
inline double dirichlet_energy(const Grid& g, std::span<const double> u, const PParams& P, Scheme scheme) {
  const double p = P.p();
  double e = 0.0;
  if (scheme == Scheme::simplex) {
    const double vol = simplex_volume(g);
    for_each_simplex(g, g.full(), [&](std::size_t, const KuhnSimplex& s) {
      const double n2 = norm2(simplex_gradient(g, s, u), g.dim());
      if (n2 > 0.0) e += vol * std::pow(n2, 0.5 * p) / p;
    });
  } else {
    detail::for_each_edge(g, [&](std::size_t i, std::size_t j, int a, double w) {
      const double d = std::abs(u[j] - u[i]) / g.spacing(a);
      if (d > 0.0) e += w * std::pow(d, p) / p;
    });
  }
  return e;
}

/// Gradient of dirichlet_energy with respect to every nodal value (boundary nodes included).
/// At node j this is the weak form int |grad u|^{p-2} grad u . grad phi_j.
inline std::vector<double> dirichlet_energy_gradient(const Grid& g, std::span<const double> u, const PParams& P,
                                                     Scheme scheme) {
  const double p = P.p();
  std::vector<double> grad(g.size(), 0.0);
  if (scheme == Scheme::simplex) {
    const double vol = simplex_volume(g);
    for_each_simplex(g, g.full(), [&](std::size_t, const KuhnSimplex& s) {
      const Point gv = simplex_gradient(g, s, u);
      const double n2 = norm2(gv, g.dim());
      if (n2 == 0.0) return;
      const double coef = vol * std::pow(n2, 0.5 * (p - 2.0));
      for (int k = 0; k < g.dim(); ++k) {
        const int axis = s.axis_order[k];
        const double flux = coef * gv[axis] / g.spacing(axis);
        grad[s.path[k + 1]] += flux;
        grad[s.path[k]] -= flux;
      }
    });
  } else {
    detail::for_each_edge(g, [&](std::size_t i, std::size_t j, int a, double w) {
      const double h = g.spacing(a);
      const double d = (u[j] - u[i]) / h;
      if (d == 0.0) return;
      const double flux = w * std::pow(std::abs(d), p - 2.0) * d / h;
      grad[j] += flux;
      grad[i] -= flux;
    });
  }
  return grad;
}

/// p_energy(u, f) = dirichlet_energy(u) - <f, u>.
inline double p_energy(const GridFunction& u, const PParams& P, Scheme scheme,
                       const std::optional<DiscreteMeasure>& f = std::nullopt) {
  detail::require_finite(u, "p_energy");
  double e = dirichlet_energy(u.grid(), u.values(), P, scheme);
  if (f) e -= f->pair(u);
  return e;
}

/// Hat-tested weak p-Laplacian: value at interior node j is int |grad u|^{p-2} grad u . grad phi_j,
/// i.e. <-Delta_p u, phi_j>. Zero on boundary nodes.
inline GridFunction weak_p_laplacian(const GridFunction& u, const PParams& P, Scheme scheme) {
  detail::require_finite(u, "weak_p_laplacian");
  const Grid& g = u.grid();
  auto grad = dirichlet_energy_gradient(g, u.values(), P, scheme);
  for (std::size_t k = 0; k < grad.size(); ++k) {
    if (g.is_boundary(k)) grad[k] = 0.0;
  }
  return GridFunction(g, std::move(grad));
}

/// Discrete -Delta_p u as a density: weak value divided by the node volume. Zero on the boundary.
inline GridFunction p_laplacian_apply(const GridFunction& u, const PParams& P, Scheme scheme) {
  const GridFunction weak = weak_p_laplacian(u, P, scheme);
  return (1.0 / u.grid().cell_volume()) * weak;
}

struct NodeRef {
  int level = 0;
  std::size_t node = 0;
};

/// Outcome of a supersolution test. residual holds the hat-tested values, one GridFunction per
/// time level tested (a single entry in the elliptic case).
struct OperatorReport {
  std::vector<GridFunction> residual;
  /// Largest -value over violating nodes (0 when none).
  double max_violation = 0.0;
  /// Largest negative part of the tested values over all tested nodes.
  double worst = 0.0;
  std::vector<NodeRef> violating_nodes;

  bool passed() const noexcept { return violating_nodes.empty(); }

  nlohmann::json to_json() const {
    nlohmann::json nodes = nlohmann::json::array();
    const bool parabolic = residual.size() > 1 || (!violating_nodes.empty() && violating_nodes.front().level != 0);
    for (const auto& n : violating_nodes) {
      if (parabolic) {
        nodes.push_back({n.level, n.node});
      } else {
        nodes.push_back(n.node);
      }
    }
    return {{"max_violation", max_violation}, {"worst", worst}, {"count", violating_nodes.size()}, {"nodes", nodes}};
  }
};

namespace detail {

inline void collect_violations(const GridFunction& r, int level, double tol, OperatorReport& rep) {
  const Grid& g = r.grid();
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (g.is_boundary(k)) continue;
    rep.worst = std::max(rep.worst, -r[k]);
    if (r[k] < -tol) {
      rep.violating_nodes.push_back({level, k});
      rep.max_violation = std::max(rep.max_violation, -r[k]);
    }
  }
}

}  // namespace detail

/// Tests <-Delta_p u, phi_j> >= -tol for every interior hat phi_j.
inline OperatorReport is_supersolution(const GridFunction& u, const PParams& P, Scheme scheme, double tol) {
  if (!(tol >= 0.0)) throw InvalidArgument("is_supersolution: tol must be >= 0");
  OperatorReport rep;
  rep.residual.push_back(weak_p_laplacian(u, P, scheme));
  detail::collect_violations(rep.residual.front(), 0, tol, rep);
  return rep;
}

/// Hat-tested implicit-Euler residual w_j (U_k - U_{k-1})/tau + <-Delta_p U_k, phi_j> for
/// levels 1..steps; level 0 is identically zero.
inline SpaceTimeFunction parabolic_weak_residual(const SpaceTimeFunction& U, const PParams& P, Scheme scheme) {
  const SpaceTimeGrid& stg = U.grid();
  const Grid& g = stg.spatial();
  const double tau = stg.tau();
  std::vector<GridFunction> out;
  out.emplace_back(g, 0.0);
  for (int k = 1; k < stg.levels(); ++k) {
    const GridFunction weak = weak_p_laplacian(U.slice(k), P, scheme);
    std::vector<double> r(g.size(), 0.0);
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (g.is_boundary(j)) continue;
      r[j] = g.node_weight(j) * (U.slice(k)[j] - U.slice(k - 1)[j]) / tau + weak[j];
    }
    out.emplace_back(g, std::move(r));
  }
  return SpaceTimeFunction(stg, std::move(out));
}

/// Density form of parabolic_weak_residual: discrete d_t u - Delta_p u at interior nodes.
inline SpaceTimeFunction parabolic_residual(const SpaceTimeFunction& U, const PParams& P, Scheme scheme) {
  const SpaceTimeFunction weak = parabolic_weak_residual(U, P, scheme);
  std::vector<GridFunction> out;
  const double inv = 1.0 / U.grid().spatial().cell_volume();
  for (const auto& s : weak.slices()) out.push_back(inv * s);
  return SpaceTimeFunction(U.grid(), std::move(out));
}

inline OperatorReport parabolic_supersolution_check(const SpaceTimeFunction& U, const PParams& P, Scheme scheme,
                                                    double tol) {
  if (!(tol >= 0.0)) throw InvalidArgument("parabolic_supersolution_check: tol must be >= 0");
  const SpaceTimeFunction r = parabolic_weak_residual(U, P, scheme);
  OperatorReport rep;
  for (int k = 1; k < U.grid().levels(); ++k) {
    rep.residual.push_back(r.slice(k));
    detail::collect_violations(r.slice(k), k, tol, rep);
  }
  return rep;
}

}  // namespace psuper
