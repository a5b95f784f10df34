#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "psuper/error.hpp"
#include "psuper/grid.hpp"

namespace psuper::exact {

inline double radius(const Point& x, int n) {
  double s = 0.0;
  for (int a = 0; a < n; ++a) s += x[a] * x[a];
  return std::sqrt(s);
}

/// Surface area of the unit sphere in R^n (2 for n = 1).
inline double sphere_area(int n) {
  switch (n) {
    case 1: return 2.0;
    case 2: return 2.0 * std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi;
    default: return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
  }
}

/// Radial exponent (p - n)/(p - 1) of the fundamental solution.
inline double fundamental_exponent(int n, const PParams& P) { return (P.p() - n) / (P.p() - 1.0); }

/// |x|^{(p-n)/(p-1)} for p != n, log|x| for p = n.
inline double fundamental_solution(const Point& x, int n, const PParams& P) {
  const double r = radius(x, n);
  if (r == 0.0) throw InvalidArgument("fundamental_solution: x = 0 is the pole");
  if (P.p() == n) return std::log(r);
  return std::pow(r, fundamental_exponent(n, P));
}

/// Sign making sign * fundamental_solution p-superharmonic: +1 for p < n, -1 for p >= n
/// (for p >= n the profile increases with |x|).
inline double superharmonic_sign(int n, const PParams& P) { return P.p() < n ? 1.0 : -1.0; }

/// The fundamental p-superharmonic function: superharmonic_sign * fundamental_solution, extended by
/// its limit at the pole (0 when p > n, +inf otherwise).
inline double fundamental_superharmonic(const Point& x, int n, const PParams& P) {
  if (radius(x, n) == 0.0) {
    return P.p() > n ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return superharmonic_sign(n, P) * fundamental_solution(x, n, P);
}

/// Riesz mass of fundamental_superharmonic: the radial flux |u'|^{p-1} r^{n-1} times the sphere
/// area, which is independent of r.
inline double flux_constant(int n, const PParams& P) {
  if (P.p() == n) return sphere_area(n);
  return std::pow(std::abs(fundamental_exponent(n, P)), P.p() - 1.0) * sphere_area(n);
}

inline double barenblatt_lambda(int n, const PParams& P) { return n * (P.p() - 2.0) + P.p(); }

/// B_p(x, t) with the free constant c; zero for t <= 0.
inline double barenblatt(const Point& x, double t, int n, const PParams& P, double c) {
  if (!(c > 0.0)) throw InvalidArgument("barenblatt: c must be > 0");
  if (t <= 0.0) return 0.0;
  const double p = P.p();
  const double lambda = barenblatt_lambda(n, P);
  const double k = (p - 2.0) / p * std::pow(lambda, 1.0 / (1.0 - p));
  const double xi = radius(x, n) / std::pow(t, 1.0 / lambda);
  const double core = c - k * std::pow(xi, p / (p - 1.0));
  if (core <= 0.0) return 0.0;
  return std::pow(t, -n / lambda) * std::pow(core, (p - 1.0) / (p - 2.0));
}

/// Radius of the support of B_p(., t).
inline double support_radius(double t, int n, const PParams& P, double c) {
  if (!(t > 0.0)) throw InvalidArgument("support_radius: t must be > 0");
  const double p = P.p();
  const double lambda = barenblatt_lambda(n, P);
  return std::pow(t, 1.0 / lambda) * std::pow(c * p * std::pow(lambda, 1.0 / (p - 1.0)) / (p - 2.0), (p - 1.0) / p);
}

/// int_{R^n} B_p(x, t) dx by adaptive Gauss-Kronrod on the radial profile.
inline double barenblatt_mass(double t, int n, const PParams& P, double c, double quad_tol = 1e-10) {
  if (t <= 0.0) return 0.0;
  const double R = support_radius(t, n, P, c);
  const Point e1{1.0, 0.0, 0.0};
  auto integrand = [&](double r) {
    Point x = e1;
    x[0] = r;
    return barenblatt(x, t, n, P, c) * std::pow(r, n - 1);
  };
  const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, R, 15, quad_tol);
  return sphere_area(n) * v;
}

/// The constant c with unit mass; mass is increasing in c, so bracket by doubling and refine with TOMS 748.
inline double barenblatt_normalize(int n, const PParams& P, double quad_tol = 1e-8) {
  if (n < 1 || n > 3) throw InvalidArgument("barenblatt_normalize: n must be 1, 2 or 3");
  const double inner_tol = std::min(1e-12, 1e-3 * quad_tol);
  auto excess = [&](double c) { return barenblatt_mass(1.0, n, P, c, inner_tol) - 1.0; };
  double lo = 1e-3;
  double hi = 1.0;
  int guard = 0;
  while (excess(lo) > 0.0) {
    lo *= 0.5;
    if (++guard > 200) throw RootNotBracketed("barenblatt_normalize: lower bracket not found");
  }
  guard = 0;
  while (excess(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 200) throw RootNotBracketed("barenblatt_normalize: upper bracket not found");
  }
  std::uintmax_t iters = 200;
  const auto tolerance = [&](double a, double b) {
    return std::abs(excess(0.5 * (a + b))) <= 0.1 * quad_tol || std::abs(b - a) <= 4 * std::numeric_limits<double>::epsilon() * b;
  };
  const auto [a, b] = boost::math::tools::toms748_solve(excess, lo, hi, tolerance, iters);
  const double c = 0.5 * (a + b);
  if (std::abs(excess(c)) > quad_tol) throw RootNotBracketed("barenblatt_normalize: tolerance not reached");
  return c;
}

struct CriticalExponents {
  double r_elliptic;
  double q_elliptic;
  double r_parabolic;
  double q_parabolic;
};

/// Exclusive upper bounds on the integrability of p-superharmonic / p-superparabolic functions and
/// their gradients.
inline CriticalExponents exponent_bounds(int n, const PParams& P) {
  if (n < 1) throw InvalidArgument("exponent_bounds: n must be >= 1");
  const double p = P.p();
  const double inf = std::numeric_limits<double>::infinity();
  CriticalExponents e{};
  e.r_elliptic = p < n ? n * (p - 1.0) / (n - p) : inf;
  e.q_elliptic = n == 1 ? inf : n * (p - 1.0) / (n - 1.0);
  e.r_parabolic = p - 1.0 + p / n;
  e.q_parabolic = p - 1.0 + 1.0 / (n + 1.0);
  return e;
}

}  // namespace psuper::exact
