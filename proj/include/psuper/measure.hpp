#pragma once

#include <cmath>
#include <numeric>
#include <vector>

#include "psuper/grid.hpp"

namespace psuper {

/// Nonnegative nodal masses representing a Radon measure on a grid. Mass at node j is the
/// measure's action on the hat function of node j.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  explicit DiscreteMeasure(const Grid& grid) : masses_(grid, 0.0) {}

  explicit DiscreteMeasure(GridFunction masses) : masses_(std::move(masses)) {
    for (double m : masses_.values()) {
      if (!(m >= 0.0) || !std::isfinite(m)) throw InvalidArgument("DiscreteMeasure: masses must be finite and nonnegative");
    }
  }

  DiscreteMeasure(const Grid& grid, std::vector<double> masses) : DiscreteMeasure(GridFunction(grid, std::move(masses))) {}

  /// Unit-scaled point mass placed entirely on the node nearest to x.
  static DiscreteMeasure dirac(const Grid& grid, const Point& x, double mass = 1.0) {
    if (!(mass >= 0.0)) throw InvalidArgument("DiscreteMeasure::dirac: negative mass");
    MultiIndex i{0, 0, 0};
    for (int a = 0; a < grid.dim(); ++a) {
      i[a] = std::clamp(static_cast<int>(std::lround((x[a] - grid.lo(a)) / grid.spacing(a))), 0, grid.nodes(a) - 1);
    }
    std::vector<double> m(grid.size(), 0.0);
    m[grid.index(i)] = mass;
    return DiscreteMeasure(grid, std::move(m));
  }

  /// Masses w_j * density_j for a nonnegative nodal density (lumped quadrature).
  static DiscreteMeasure from_density(const GridFunction& density) {
    const Grid& g = density.grid();
    std::vector<double> m(g.size());
    for (std::size_t k = 0; k < m.size(); ++k) m[k] = std::max(0.0, density[k]) * g.node_weight(k);
    return DiscreteMeasure(g, std::move(m));
  }

  const Grid& grid() const noexcept { return masses_.grid(); }
  const GridFunction& masses() const noexcept { return masses_; }
  double operator[](std::size_t k) const { return masses_[k]; }

  double total_mass() const {
    const auto v = masses_.values();
    return std::accumulate(v.begin(), v.end(), 0.0);
  }

  /// <mu, u> = sum_j m_j u_j.
  double pair(const GridFunction& u) const {
    require_same_grid(grid(), u.grid(), "DiscreteMeasure::pair");
    double s = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) s += masses_[k] * u[k];
    return s;
  }

  /// Measure with the masses on grid-boundary nodes removed.
  DiscreteMeasure interior() const {
    std::vector<double> m(masses_.values().begin(), masses_.values().end());
    for (std::size_t k = 0; k < m.size(); ++k) {
      if (grid().is_boundary(k)) m[k] = 0.0;
    }
    return DiscreteMeasure(grid(), std::move(m));
  }

  friend DiscreteMeasure operator*(double s, const DiscreteMeasure& mu) {
    if (!(s >= 0.0)) throw InvalidArgument("DiscreteMeasure: scaling by a negative factor");
    return DiscreteMeasure(s * mu.masses_);
  }

 private:
  GridFunction masses_;
};

/// Total variation sum_j |a_j - b_j| of two nodal functionals.
inline double total_variation(const GridFunction& a, const GridFunction& b) {
  require_same_grid(a.grid(), b.grid(), "total_variation");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
  return s;
}

}  // namespace psuper
