#pragma once

#include <cmath>
#include <complex>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "psuper/grid.hpp"
#include "psuper/measure.hpp"
#include "psuper/operators.hpp"

namespace psuper {

// ---------------------------------------------------------------------------------------------
// Riesz measures
// ---------------------------------------------------------------------------------------------

/// Nonnegative part of the hat-tested operator plus the negative nodal values (<= 0) that were
/// split off; the remainder is a discretization diagnostic, not clipped noise.
struct RieszMeasure {
  DiscreteMeasure measure;
  GridFunction remainder;

  GridFunction signed_masses() const { return measure.masses() + remainder; }
};

inline RieszMeasure split_signed(const GridFunction& weak) {
  const Grid& g = weak.grid();
  std::vector<double> pos(g.size(), 0.0);
  std::vector<double> neg(g.size(), 0.0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    (weak[k] >= 0.0 ? pos[k] : neg[k]) = weak[k];
  }
  return {DiscreteMeasure(g, std::move(pos)), GridFunction(g, std::move(neg))};
}

/// mu(phi_j) = int |grad u|^{p-2} grad u . grad phi_j for every interior hat phi_j.
inline RieszMeasure riesz_measure(const GridFunction& u, const PParams& P, Scheme scheme = Scheme::simplex) {
  return split_signed(weak_p_laplacian(u, P, scheme));
}

/// Slicewise Riesz measure of d_t u - Delta_p u. Each level carries a spatial measure (per unit
/// time); level 0 is zero. The space-time mass of level k is tau times its total mass.
struct ParabolicRieszMeasure {
  std::vector<DiscreteMeasure> measures;
  SpaceTimeFunction remainder;
  double tau = 1.0;

  double space_time_mass() const {
    double s = 0.0;
    for (std::size_t k = 1; k < measures.size(); ++k) s += tau * measures[k].total_mass();
    return s;
  }

  /// Signed spatial masses per level (measure + remainder).
  SpaceTimeFunction signed_masses() const {
    std::vector<GridFunction> s;
    for (std::size_t k = 0; k < measures.size(); ++k) {
      s.push_back(measures[k].masses() + remainder.slice(static_cast<int>(k)));
    }
    return SpaceTimeFunction(remainder.grid(), std::move(s));
  }
};

inline ParabolicRieszMeasure riesz_measure_parabolic(const SpaceTimeFunction& U, const PParams& P,
                                                     Scheme scheme = Scheme::simplex) {
  const SpaceTimeFunction weak = parabolic_weak_residual(U, P, scheme);
  ParabolicRieszMeasure out;
  out.tau = U.grid().tau();
  std::vector<GridFunction> rem;
  for (int k = 0; k < U.grid().levels(); ++k) {
    RieszMeasure r = split_signed(weak.slice(k));
    out.measures.push_back(std::move(r.measure));
    rem.push_back(std::move(r.remainder));
  }
  out.remainder = SpaceTimeFunction(U.grid(), std::move(rem));
  return out;
}

// ---------------------------------------------------------------------------------------------
// Mollification
// ---------------------------------------------------------------------------------------------

struct MollifyInfo {
  /// Mass whose kernel stencil fell outside the grid.
  double lost_mass = 0.0;
  /// Some stencil reached a boundary node or beyond.
  bool leaked = false;
};

/// Standard bump exp(-1/(1 - |x/eps|^2)), normalized so that its lattice sum times the cell
/// volume is 1. eps below the spacing collapses to the center node.
class MollifierStencil {
 public:
  MollifierStencil(const Grid& g, double eps) {
    if (!(eps > 0.0)) throw InvalidArgument("mollify: eps must be > 0");
    const int d = g.dim();
    MultiIndex reach{0, 0, 0};
    for (int a = 0; a < d; ++a) reach[a] = static_cast<int>(std::floor(eps / g.spacing(a)));
    double sum = 0.0;
    MultiIndex o{0, 0, 0};
    for (o[0] = -reach[0]; o[0] <= reach[0]; ++o[0]) {
      for (o[1] = -reach[1]; o[1] <= reach[1]; ++o[1]) {
        for (o[2] = -reach[2]; o[2] <= reach[2]; ++o[2]) {
          double r2 = 0.0;
          for (int a = 0; a < d; ++a) r2 += std::pow(o[a] * g.spacing(a) / eps, 2);
          if (r2 >= 1.0) continue;
          const double w = std::exp(-1.0 / (1.0 - r2));
          offsets_.push_back(o);
          weights_.push_back(w);
          sum += w;
        }
      }
    }
    const double norm = 1.0 / (sum * g.cell_volume());
    for (double& w : weights_) w *= norm;
  }

  const std::vector<MultiIndex>& offsets() const noexcept { return offsets_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

 private:
  std::vector<MultiIndex> offsets_;
  std::vector<double> weights_;
};

namespace detail {

/// out_i += sum_j src_j K(x_i - x_j) for nonzero src_j.
inline std::vector<double> scatter(const Grid& g, std::span<const double> src, double eps, MollifyInfo* info) {
  const MollifierStencil st(g, eps);
  std::vector<double> out(g.size(), 0.0);
  MollifyInfo local;
  const double cv = g.cell_volume();
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double m = src[j];
    if (m == 0.0) continue;
    const MultiIndex c = g.multi_index(j);
    for (std::size_t s = 0; s < st.offsets().size(); ++s) {
      MultiIndex i = c;
      bool inside = true;
      bool boundary = false;
      for (int a = 0; a < g.dim(); ++a) {
        i[a] += st.offsets()[s][a];
        if (i[a] < 0 || i[a] >= g.nodes(a)) inside = false;
        if (i[a] <= 0 || i[a] >= g.nodes(a) - 1) boundary = true;
      }
      if (boundary) local.leaked = true;
      if (!inside) {
        local.lost_mass += m * st.weights()[s] * cv;
        continue;
      }
      out[g.index(i)] += m * st.weights()[s];
    }
  }
  if (info) *info = local;
  return out;
}

}  // namespace detail

/// Density of mu convolved with the standard mollifier of radius eps.
inline GridFunction mollify(const DiscreteMeasure& mu, double eps, MollifyInfo* info = nullptr) {
  return GridFunction(mu.grid(), detail::scatter(mu.grid(), mu.masses().values(), eps, info));
}

/// Convolution of a nodal function (treated as a density) with the same kernel.
inline GridFunction mollify_function(const GridFunction& f, double eps, MollifyInfo* info = nullptr) {
  const Grid& g = f.grid();
  std::vector<double> masses(f.values().begin(), f.values().end());
  for (double& m : masses) m *= g.cell_volume();
  return GridFunction(g, detail::scatter(g, masses, eps, info));
}

// ---------------------------------------------------------------------------------------------
// Negative Sobolev norms through the Bessel multiplier (1 + |xi|^2)^{-1/2}
// ---------------------------------------------------------------------------------------------

namespace detail {

inline std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

/// Bessel potential T_1 of a nodal density on the zero-padded periodic box. Returns the potential
/// on the padded lattice (same spacing, `padding` times as many nodes per axis).
inline std::vector<double> bessel_potential(const Grid& g, std::span<const double> density, int padding,
                                            std::array<int, kMaxDim>& padded_nodes) {
  const int d = g.dim();
  padded_nodes = {1, 1, 1};
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) {
    padded_nodes[a] = padding * g.nodes(a);
    total *= static_cast<std::size_t>(padded_nodes[a]);
  }
  const int last = padded_nodes[d - 1];
  const std::size_t half = total / static_cast<std::size_t>(last) * static_cast<std::size_t>(last / 2 + 1);
  double* real = fftw_alloc_real(total);
  fftw_complex* spec = fftw_alloc_complex(half);
  std::fill(real, real + total, 0.0);
  // Pad: node multi-index i of g maps to the same multi-index in the padded lattice.
  std::array<std::size_t, kMaxDim> pstride{1, 1, 1};
  for (int a = d - 2; a >= 0; --a) pstride[a] = pstride[a + 1] * static_cast<std::size_t>(padded_nodes[a + 1]);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const MultiIndex i = g.multi_index(k);
    std::size_t pk = 0;
    for (int a = 0; a < d; ++a) pk += static_cast<std::size_t>(i[a]) * pstride[a];
    real[pk] = density[k];
  }
  fftw_plan fwd;
  fftw_plan bwd;
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    fwd = fftw_plan_dft_r2c(d, padded_nodes.data(), real, spec, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_c2r(d, padded_nodes.data(), spec, real, FFTW_ESTIMATE);
  }
  fftw_execute(fwd);
  // Multiplier on the half-spectrum: axes 0..d-2 full, last axis 0..last/2.
  constexpr double kTwoPi = 6.283185307179586;
  std::array<int, kMaxDim> hdims = padded_nodes;
  hdims[d - 1] = last / 2 + 1;
  std::array<std::size_t, kMaxDim> hstride{1, 1, 1};
  for (int a = d - 2; a >= 0; --a) hstride[a] = hstride[a + 1] * static_cast<std::size_t>(hdims[a + 1]);
  const double scale = 1.0 / static_cast<double>(total);
  for (std::size_t k = 0; k < half; ++k) {
    std::size_t rem = k;
    double xi2 = 0.0;
    for (int a = 0; a < d; ++a) {
      int f = static_cast<int>(rem / hstride[a]);
      rem %= hstride[a];
      if (a < d - 1 && f > padded_nodes[a] / 2) f -= padded_nodes[a];
      const double xi = kTwoPi * f / (padded_nodes[a] * g.spacing(a));
      xi2 += xi * xi;
    }
    const double m = scale / std::sqrt(1.0 + xi2);
    spec[k][0] *= m;
    spec[k][1] *= m;
  }
  fftw_execute(bwd);
  std::vector<double> out(real, real + total);
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
  }
  fftw_free(real);
  fftw_free(spec);
  return out;
}

}  // namespace detail

inline constexpr int kDefaultPadding = 2;

/// ||T_1 nu||_{L^{p'}}: the Bessel-potential realization of the W^{-1,p'} norm of a signed nodal
/// functional (values are masses). The grid is zero-padded to `padding` times its size per axis
/// before the periodic transform.
inline double dual_norm(const GridFunction& nu, const PParams& P, int padding = kDefaultPadding) {
  const Grid& g = nu.grid();
  if (g.size() == 0) throw InvalidArgument("dual_norm: empty grid");
  if (padding < 1) throw InvalidArgument("dual_norm: padding factor must be >= 1");
  bool zero = true;
  std::vector<double> density(g.size());
  const double inv = 1.0 / g.cell_volume();
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!std::isfinite(nu[k])) throw InvalidArgument("dual_norm: non-finite functional value");
    density[k] = nu[k] * inv;
    zero = zero && nu[k] == 0.0;
  }
  if (zero) return 0.0;
  std::array<int, kMaxDim> pn{};
  const std::vector<double> pot = detail::bessel_potential(g, density, padding, pn);
  const double pc = P.conj();
  double s = 0.0;
  for (double v : pot) s += std::pow(std::abs(v), pc);
  return std::pow(s * g.cell_volume(), 1.0 / pc);
}

inline double dual_norm(const DiscreteMeasure& mu, const PParams& P, int padding = kDefaultPadding) {
  return dual_norm(mu.masses(), P, padding);
}

/// (sum_{k>=1} tau * dual_norm(nu_k)^{p'})^{1/p'}: spatial Bessel norm per level, then L^{p'} in time.
/// Level 0 carries no data and is skipped.
inline double parabolic_dual_norm(const SpaceTimeFunction& nu, const PParams& P, int padding = kDefaultPadding) {
  const double pc = P.conj();
  const double tau = nu.grid().tau();
  double s = 0.0;
  for (int k = 1; k < nu.grid().levels(); ++k) s += tau * std::pow(dual_norm(nu.slice(k), P, padding), pc);
  return std::pow(s, 1.0 / pc);
}

}  // namespace psuper
