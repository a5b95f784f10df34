#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "psuper/error.hpp"
#include "psuper/grid.hpp"
#include "psuper/operators.hpp"
#include "psuper/simplex.hpp"

namespace psuper {

struct SolverOptions {
  /// Max-norm of the (projected) energy gradient at interior nodes.
  double tol = 1e-10;
  /// Max-norm of the last Newton increment; the residual alone is loose where the gradient degenerates.
  double step_tol = 1e-10;
  int max_iter = 200;
  /// Nodes with u > psi + act_tol count as detached from the obstacle.
  double act_tol = 1e-8;
  /// Hessian-only regularization |g|^2 -> |g|^2 + delta^2.
  double hessian_delta = 1e-8;
  Scheme scheme = Scheme::simplex;
};

struct SolveStats {
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> energies;
};

/// Strictly convex nodal problem
///   J(u) = E_p(u) - <load, u> + 1/(2 tau) sum_j w_j (u_j - prev_j)^2
/// over interior nodes, boundary values fixed, optionally u >= lower.
struct ConvexProblem {
  Grid grid;
  PParams params{3.0};
  Scheme scheme = Scheme::simplex;
  std::vector<double> load;
  std::optional<std::vector<double>> prev;
  double tau = std::numeric_limits<double>::infinity();
  std::optional<std::vector<double>> lower;
};

namespace detail {

class NewtonSolver {
 public:
  NewtonSolver(const ConvexProblem& prob, const SolverOptions& opts) : prob_(prob), opts_(opts), g_(prob.grid) {
    dof_of_.assign(g_.size(), -1);
    for (std::size_t k = 0; k < g_.size(); ++k) {
      if (!g_.is_boundary(k)) {
        dof_of_[k] = static_cast<int>(nodes_.size());
        nodes_.push_back(k);
      }
    }
    if (prob_.load.size() != g_.size()) throw InvalidArgument("ConvexProblem: load size mismatch");
    if (prob_.prev && prob_.prev->size() != g_.size()) throw InvalidArgument("ConvexProblem: prev size mismatch");
    if (prob_.lower && prob_.lower->size() != g_.size()) throw InvalidArgument("ConvexProblem: lower size mismatch");
    if (prob_.prev && !(prob_.tau > 0.0)) throw InvalidArgument("ConvexProblem: tau must be > 0");
  }

  std::vector<double> solve(std::vector<double> u, SolveStats& stats) {
    if (u.size() != g_.size()) throw InvalidArgument("NewtonSolver: initial iterate size mismatch");
    if (prob_.lower) {
      for (std::size_t k : nodes_) u[k] = std::max(u[k], (*prob_.lower)[k]);
    }
    const std::size_t n = nodes_.size();
    stats.energies.clear();
    if (n == 0) {
      stats.energies.push_back(objective(u));
      return u;
    }
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    bool analyzed = false;
    double J = objective(u);
    std::vector<double> grad = gradient(u);
    stats.energies.push_back(J);
    double step = 0.0;
    double res = residual(u, grad);
    for (int it = 0; it <= opts_.max_iter; ++it) {
      stats.iterations = it;
      stats.residual = res;
      if (res <= opts_.tol && step <= opts_.step_tol) return u;
      if (it == opts_.max_iter) break;

      Eigen::SparseMatrix<double> H = hessian(u);
      Eigen::VectorXd diag = H.diagonal();
      // Active set: at the obstacle and pushed down by the gradient.
      std::vector<char> active(n, 0);
      if (prob_.lower) {
        double width = 0.0;
        for (std::size_t d = 0; d < n; ++d) {
          const std::size_t k = nodes_[d];
          const double trial = std::max((*prob_.lower)[k], u[k] - grad[k] / diag[static_cast<Eigen::Index>(d)]);
          width = std::max(width, std::abs(u[k] - trial));
        }
        const double eps = std::min(opts_.act_tol, width);
        for (std::size_t d = 0; d < n; ++d) {
          const std::size_t k = nodes_[d];
          if (u[k] - (*prob_.lower)[k] <= eps && grad[k] > 0.0) active[d] = 1;
        }
        decouple_active(H, active);
      }
      Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
      for (std::size_t d = 0; d < n; ++d) rhs[static_cast<Eigen::Index>(d)] = active[d] ? 0.0 : -grad[nodes_[d]];
      if (!analyzed) {
        ldlt.analyzePattern(H);
        analyzed = true;
      }
      ldlt.factorize(H);
      Eigen::VectorXd dir;
      if (ldlt.info() == Eigen::Success) dir = ldlt.solve(rhs);
      if (ldlt.info() != Eigen::Success || !dir.allFinite()) dir = rhs.cwiseQuotient(diag);
      for (std::size_t d = 0; d < n; ++d) {
        if (active[d]) dir[static_cast<Eigen::Index>(d)] = -grad[nodes_[d]] / diag[static_cast<Eigen::Index>(d)];
      }

      const std::vector<double> before(u);
      if (!line_search(u, J, grad, dir, res)) {
        // Newton direction stalled: projected, diagonally scaled gradient step.
        Eigen::VectorXd pg(static_cast<Eigen::Index>(n));
        for (std::size_t d = 0; d < n; ++d) pg[static_cast<Eigen::Index>(d)] = -grad[nodes_[d]] / diag[static_cast<Eigen::Index>(d)];
        if (!line_search(u, J, grad, pg, res)) {
          // Rounding floor reached after the residual target.
          if (res <= opts_.tol) return u;
          break;
        }
      }
      step = 0.0;
      for (std::size_t k : nodes_) step = std::max(step, std::abs(u[k] - before[k]));
      stats.energies.push_back(J);
    }
    throw NonConvergence(stats.iterations, stats.residual, "newton");
  }

  double objective(std::span<const double> u) const {
    double J = dirichlet_energy(g_, u, prob_.params, prob_.scheme);
    for (std::size_t k = 0; k < g_.size(); ++k) J -= prob_.load[k] * u[k];
    if (prob_.prev) {
      for (std::size_t k : nodes_) {
        const double d = u[k] - (*prob_.prev)[k];
        J += 0.5 * g_.node_weight(k) * d * d / prob_.tau;
      }
    }
    return J;
  }

  std::vector<double> gradient(std::span<const double> u) const {
    std::vector<double> grad = dirichlet_energy_gradient(g_, u, prob_.params, prob_.scheme);
    for (std::size_t k = 0; k < g_.size(); ++k) {
      grad[k] -= prob_.load[k];
      if (g_.is_boundary(k)) grad[k] = 0.0;
    }
    if (prob_.prev) {
      for (std::size_t k : nodes_) grad[k] += g_.node_weight(k) * (u[k] - (*prob_.prev)[k]) / prob_.tau;
    }
    return grad;
  }

  /// Max-norm of the projected gradient min(u - psi, grad) (plain gradient without obstacle).
  double residual(std::span<const double> u, std::span<const double> grad) const {
    double r = 0.0;
    for (std::size_t k : nodes_) {
      double v = grad[k];
      if (prob_.lower) v = std::min(u[k] - (*prob_.lower)[k], grad[k]);
      r = std::max(r, std::abs(v));
    }
    return r;
  }

 private:
  Eigen::SparseMatrix<double> hessian(std::span<const double> u) const {
    const double p = prob_.params.p();
    const double d2 = opts_.hessian_delta * opts_.hessian_delta;
    std::vector<Eigen::Triplet<double>> trip;
    auto emit = [&](std::size_t a, std::size_t b, double v) {
      const int da = dof_of_[a];
      const int db = dof_of_[b];
      if (da >= 0 && db >= 0) trip.emplace_back(da, db, v);
    };
    const int dim = g_.dim();
    if (prob_.scheme == Scheme::simplex) {
      const double vol = simplex_volume(g_);
      trip.reserve(g_.cell_count() * static_cast<std::size_t>(factorial(dim)) * 16);
      for_each_simplex(g_, g_.full(), [&](std::size_t, const KuhnSimplex& s) {
        const Point gv = simplex_gradient(g_, s, u);
        const double n2 = norm2(gv, dim) + d2;
        const double iso = vol * std::pow(n2, 0.5 * (p - 2.0));
        const double aniso = vol * (p - 2.0) * std::pow(n2, 0.5 * (p - 4.0));
        // c_a = d(grad)/d(u_a) for path vertex a, in axis coordinates.
        std::array<Point, kMaxDim + 1> c{};
        for (int k = 0; k < dim; ++k) {
          const int axis = s.axis_order[k];
          const double ih = 1.0 / g_.spacing(axis);
          c[k + 1][axis] += ih;
          c[k][axis] -= ih;
        }
        for (int a = 0; a <= dim; ++a) {
          for (int b = 0; b <= dim; ++b) {
            double dot = 0.0;
            double ga = 0.0;
            double gb = 0.0;
            for (int x = 0; x < dim; ++x) {
              dot += c[a][x] * c[b][x];
              ga += c[a][x] * gv[x];
              gb += c[b][x] * gv[x];
            }
            emit(s.path[a], s.path[b], iso * dot + aniso * ga * gb);
          }
        }
      });
    } else {
      detail::for_each_edge(g_, [&](std::size_t i, std::size_t j, int a, double w) {
        const double h = g_.spacing(a);
        const double d = (u[j] - u[i]) / h;
        const double v = w * (p - 1.0) * std::pow(d * d + d2, 0.5 * (p - 2.0)) / (h * h);
        emit(i, i, v);
        emit(j, j, v);
        emit(i, j, -v);
        emit(j, i, -v);
      });
    }
    if (prob_.prev) {
      for (std::size_t k : nodes_) emit(k, k, g_.node_weight(k) / prob_.tau);
    }
    Eigen::SparseMatrix<double> H(static_cast<Eigen::Index>(nodes_.size()), static_cast<Eigen::Index>(nodes_.size()));
    H.setFromTriplets(trip.begin(), trip.end());
    return H;
  }

  /// Zeroes couplings of active unknowns (pattern kept so the symbolic factorization is reused).
  static void decouple_active(Eigen::SparseMatrix<double>& H, const std::vector<char>& active) {
    for (Eigen::Index col = 0; col < H.outerSize(); ++col) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(H, col); it; ++it) {
        if (it.row() != it.col() && (active[static_cast<std::size_t>(it.row())] || active[static_cast<std::size_t>(it.col())])) {
          it.valueRef() = 0.0;
        }
      }
    }
  }

  /// Projected Armijo backtracking along u + alpha * dir. Updates u, J, grad, res on success.
  bool line_search(std::vector<double>& u, double& J, std::vector<double>& grad, const Eigen::VectorXd& dir,
                   double& res) const {
    constexpr double kArmijo = 1e-4;
    std::vector<double> trial(u);
    double alpha = 1.0;
    for (int bt = 0; bt < 60; ++bt, alpha *= 0.5) {
      double slope = 0.0;
      for (std::size_t d = 0; d < nodes_.size(); ++d) {
        const std::size_t k = nodes_[d];
        double v = u[k] + alpha * dir[static_cast<Eigen::Index>(d)];
        if (prob_.lower) v = std::max(v, (*prob_.lower)[k]);
        trial[k] = v;
        slope += grad[k] * (v - u[k]);
      }
      if (slope >= 0.0 && alpha < 1.0) continue;
      const double Jt = objective(trial);
      if (!std::isfinite(Jt)) continue;
      const bool armijo = Jt <= J + kArmijo * slope;
      // Near the minimizer energy differences drown in rounding; fall back to residual decrease.
      const bool flat = std::abs(Jt - J) <= 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(J));
      if (armijo || flat) {
        std::vector<double> gt = gradient(trial);
        const double rt = residual(trial, gt);
        if (armijo || rt < res) {
          u.swap(trial);
          J = Jt;
          grad.swap(gt);
          res = rt;
          return true;
        }
      }
    }
    return false;
  }

  const ConvexProblem& prob_;
  SolverOptions opts_;
  Grid g_;
  std::vector<int> dof_of_;
  std::vector<std::size_t> nodes_;
};

}  // namespace detail

/// Minimizes the convex problem from the initial iterate u0 (boundary entries are kept).
inline std::vector<double> minimize(const ConvexProblem& prob, std::vector<double> u0, const SolverOptions& opts,
                                    SolveStats* stats = nullptr) {
  SolveStats local;
  detail::NewtonSolver solver(prob, opts);
  auto u = solver.solve(std::move(u0), stats ? *stats : local);
  return u;
}

/// Energy gradient of the convex problem at u, boundary entries zero.
inline std::vector<double> problem_gradient(const ConvexProblem& prob, std::span<const double> u) {
  detail::NewtonSolver solver(prob, SolverOptions{});
  return solver.gradient(u);
}

}  // namespace psuper
