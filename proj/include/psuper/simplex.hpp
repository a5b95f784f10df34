#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <vector>

#include "psuper/grid.hpp"

namespace psuper {

/// Kuhn (Freudenthal) split of a cell: one simplex per axis permutation. The simplex for
/// permutation s walks from the cell origin v0 through v_{k+1} = v_k + e_{s[k]}.
struct KuhnSimplex {
  std::array<int, kMaxDim> axis_order{0, 1, 2};
  /// Node indices v0..v_dim along the path.
  std::array<std::size_t, kMaxDim + 1> path{};
};

inline std::vector<std::array<int, kMaxDim>> kuhn_permutations(int dim) {
  std::array<int, kMaxDim> perm{0, 1, 2};
  std::vector<std::array<int, kMaxDim>> out;
  do {
    out.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.begin() + dim));
  return out;
}

inline int factorial(int n) { return n <= 1 ? 1 : n * factorial(n - 1); }

inline double simplex_volume(const Grid& g) { return g.cell_volume() / factorial(g.dim()); }

/// Calls fn(cell_ordinal, KuhnSimplex) for every simplex of every cell inside the box. cell_ordinal
/// enumerates cells in row-major order over the full grid.
template <class Fn>
void for_each_simplex(const Grid& g, const IndexBox& box, Fn&& fn) {
  const auto perms = kuhn_permutations(g.dim());
  const int d = g.dim();
  std::array<std::size_t, kMaxDim> cstride{1, 1, 1};
  for (int a = d - 2; a >= 0; --a) cstride[a] = cstride[a + 1] * static_cast<std::size_t>(g.nodes(a + 1) - 1);
  g.for_each_cell(box, [&](const MultiIndex& c) {
    std::size_t cell = 0;
    for (int a = 0; a < d; ++a) cell += static_cast<std::size_t>(c[a]) * cstride[a];
    const std::size_t origin = g.index(c);
    for (const auto& perm : perms) {
      KuhnSimplex s;
      s.axis_order = perm;
      s.path[0] = origin;
      for (int k = 0; k < d; ++k) s.path[k + 1] = s.path[k] + g.stride(perm[k]);
      fn(cell, s);
    }
  });
}

/// Gradient of the affine interpolant on one Kuhn simplex.
inline Point simplex_gradient(const Grid& g, const KuhnSimplex& s, std::span<const double> u) {
  Point grad{0.0, 0.0, 0.0};
  for (int k = 0; k < g.dim(); ++k) {
    const int axis = s.axis_order[k];
    grad[axis] = (u[s.path[k + 1]] - u[s.path[k]]) / g.spacing(axis);
  }
  return grad;
}

inline double norm2(const Point& v, int dim) {
  double s = 0.0;
  for (int a = 0; a < dim; ++a) s += v[a] * v[a];
  return s;
}

}  // namespace psuper
