#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "psuper/error.hpp"

namespace psuper {

inline constexpr int kMaxDim = 3;

using Point = std::array<double, kMaxDim>;
using MultiIndex = std::array<int, kMaxDim>;

/// Exponent bundle for the p-Laplacian with p > 2.
class PParams {
 public:
  explicit PParams(double p) : p_(p) {
    if (!(p > 2.0) || !std::isfinite(p)) {
      throw InvalidArgument("PParams: exponent p must satisfy p > 2 (got " + std::to_string(p) + ")");
    }
    conj_ = p / (p - 1.0);
  }
  double p() const noexcept { return p_; }
  /// Conjugate exponent p' = p/(p-1).
  double conj() const noexcept { return conj_; }

 private:
  double p_;
  double conj_;
};

/// Axis-aligned box in physical coordinates; only the first dim entries are used.
struct Box {
  Point lo{};
  Point hi{};
};

/// Inclusive node-index range per axis.
struct IndexBox {
  MultiIndex lo{};
  MultiIndex hi{};

  bool contains(const MultiIndex& i, int dim) const {
    for (int a = 0; a < dim; ++a) {
      if (i[a] < lo[a] || i[a] > hi[a]) return false;
    }
    return true;
  }
};

/// Uniform Cartesian node grid on a box in dimension 1..3. Node index is row-major
/// (last axis fastest).
class Grid {
 public:
  Grid() = default;

  Grid(std::vector<std::pair<double, double>> extent, std::vector<int> nodes) {
    if (extent.empty() || extent.size() > static_cast<std::size_t>(kMaxDim) ||
        extent.size() != nodes.size()) {
      throw InvalidArgument("Grid: dimension must be 1, 2 or 3 with one node count per axis");
    }
    dim_ = static_cast<int>(extent.size());
    for (int a = 0; a < dim_; ++a) {
      lo_[a] = extent[a].first;
      hi_[a] = extent[a].second;
      m_[a] = nodes[a];
      if (m_[a] < 2) throw InvalidArgument("Grid: need at least 2 nodes per axis");
      if (!(hi_[a] > lo_[a]) || !std::isfinite(lo_[a]) || !std::isfinite(hi_[a])) {
        throw InvalidArgument("Grid: empty or non-finite extent");
      }
      h_[a] = (hi_[a] - lo_[a]) / (m_[a] - 1);
    }
    stride_[dim_ - 1] = 1;
    for (int a = dim_ - 2; a >= 0; --a) stride_[a] = stride_[a + 1] * static_cast<std::size_t>(m_[a + 1]);
    size_ = stride_[0] * static_cast<std::size_t>(m_[0]);
  }

  /// Cube [lo, hi]^dim with the same node count on every axis.
  static Grid cube(int dim, double lo, double hi, int nodes) {
    return Grid(std::vector<std::pair<double, double>>(static_cast<std::size_t>(dim), {lo, hi}),
                std::vector<int>(static_cast<std::size_t>(dim), nodes));
  }

  int dim() const noexcept { return dim_; }
  int nodes(int axis) const { return m_[axis]; }
  double lo(int axis) const { return lo_[axis]; }
  double hi(int axis) const { return hi_[axis]; }
  double spacing(int axis) const { return h_[axis]; }
  std::size_t size() const noexcept { return size_; }

  /// Coordinate of node i along an axis, computed from the extent alone.
  double coord(int axis, int i) const {
    if (i == m_[axis] - 1) return hi_[axis];
    return lo_[axis] + (hi_[axis] - lo_[axis]) * static_cast<double>(i) / (m_[axis] - 1);
  }

  MultiIndex multi_index(std::size_t idx) const {
    MultiIndex i{0, 0, 0};
    for (int a = 0; a < dim_; ++a) {
      i[a] = static_cast<int>(idx / stride_[a]);
      idx %= stride_[a];
    }
    return i;
  }

  std::size_t index(const MultiIndex& i) const {
    std::size_t idx = 0;
    for (int a = 0; a < dim_; ++a) idx += static_cast<std::size_t>(i[a]) * stride_[a];
    return idx;
  }

  std::size_t stride(int axis) const { return stride_[axis]; }

  Point point(std::size_t idx) const {
    const MultiIndex i = multi_index(idx);
    Point x{0.0, 0.0, 0.0};
    for (int a = 0; a < dim_; ++a) x[a] = coord(a, i[a]);
    return x;
  }

  bool is_boundary(const MultiIndex& i) const {
    for (int a = 0; a < dim_; ++a) {
      if (i[a] == 0 || i[a] == m_[a] - 1) return true;
    }
    return false;
  }
  bool is_boundary(std::size_t idx) const { return is_boundary(multi_index(idx)); }

  /// Product of the spacings; the volume of one cell and of an interior node's dual cell.
  double cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim_; ++a) v *= h_[a];
    return v;
  }

  /// Trapezoid (lumped mass) weight of a node; equals cell_volume() at interior nodes.
  double node_weight(const MultiIndex& i, const IndexBox& box) const {
    double w = 1.0;
    for (int a = 0; a < dim_; ++a) {
      if (i[a] < box.lo[a] || i[a] > box.hi[a]) return 0.0;
      w *= (i[a] == box.lo[a] || i[a] == box.hi[a]) ? 0.5 * h_[a] : h_[a];
    }
    return w;
  }
  double node_weight(std::size_t idx) const { return node_weight(multi_index(idx), full()); }

  std::size_t cell_count() const {
    std::size_t c = 1;
    for (int a = 0; a < dim_; ++a) c *= static_cast<std::size_t>(m_[a] - 1);
    return c;
  }

  IndexBox full() const {
    IndexBox b;
    for (int a = 0; a < dim_; ++a) b.hi[a] = m_[a] - 1;
    return b;
  }

  /// Smallest node box containing the physical box (snapped outward, clipped to the grid).
  IndexBox snap(const Box& box) const {
    IndexBox b;
    for (int a = 0; a < dim_; ++a) {
      if (box.lo[a] > box.hi[a]) throw InvalidArgument("Grid::snap: inverted box");
      if (box.lo[a] < lo_[a] - 1e-12 * h_[a] || box.hi[a] > hi_[a] + 1e-12 * h_[a]) {
        throw InvalidArgument("Grid::snap: subdomain is not contained in the grid extent");
      }
      const double tol = 1e-9;
      b.lo[a] = std::clamp(static_cast<int>(std::floor((box.lo[a] - lo_[a]) / h_[a] + tol)), 0, m_[a] - 1);
      b.hi[a] = std::clamp(static_cast<int>(std::ceil((box.hi[a] - lo_[a]) / h_[a] - tol)), 0, m_[a] - 1);
    }
    return b;
  }

  IndexBox resolve(const std::optional<Box>& sub) const { return sub ? snap(*sub) : full(); }

  /// The grid formed by the nodes of an index box; coordinates coincide with this grid's nodes.
  Grid subgrid(const IndexBox& b) const {
    std::vector<std::pair<double, double>> ext;
    std::vector<int> n;
    for (int a = 0; a < dim_; ++a) {
      if (b.hi[a] - b.lo[a] < 1) throw InvalidArgument("Grid::subgrid: need 2 nodes per axis");
      ext.emplace_back(coord(a, b.lo[a]), coord(a, b.hi[a]));
      n.push_back(b.hi[a] - b.lo[a] + 1);
    }
    return Grid(std::move(ext), std::move(n));
  }

  /// Same grid with spacing halved along every axis.
  Grid refined() const {
    std::vector<std::pair<double, double>> ext;
    std::vector<int> n;
    for (int a = 0; a < dim_; ++a) {
      ext.emplace_back(lo_[a], hi_[a]);
      n.push_back(2 * m_[a] - 1);
    }
    return Grid(std::move(ext), std::move(n));
  }

  friend bool operator==(const Grid& a, const Grid& b) {
    if (a.dim_ != b.dim_) return false;
    for (int k = 0; k < a.dim_; ++k) {
      if (a.m_[k] != b.m_[k] || a.lo_[k] != b.lo_[k] || a.hi_[k] != b.hi_[k]) return false;
    }
    return true;
  }

  /// Calls fn(node_index, multi_index) for every node inside the index box.
  template <class Fn>
  void for_each_node(const IndexBox& box, Fn&& fn) const {
    MultiIndex i{0, 0, 0};
    const int d = dim_;
    for (i[0] = box.lo[0]; i[0] <= (d > 0 ? box.hi[0] : 0); ++i[0]) {
      for (i[1] = box.lo[1]; i[1] <= (d > 1 ? box.hi[1] : 0); ++i[1]) {
        for (i[2] = box.lo[2]; i[2] <= (d > 2 ? box.hi[2] : 0); ++i[2]) {
          fn(index(i), i);
        }
      }
    }
  }

  /// Calls fn(cell_origin_multi_index) for every cell whose nodes all lie in the box.
  template <class Fn>
  void for_each_cell(const IndexBox& box, Fn&& fn) const {
    IndexBox cells = box;
    for (int a = 0; a < dim_; ++a) cells.hi[a] = box.hi[a] - 1;
    for (int a = 0; a < dim_; ++a) {
      if (cells.hi[a] < cells.lo[a]) return;
    }
    for_each_node(cells, [&](std::size_t, const MultiIndex& c) { fn(c); });
  }

 private:
  int dim_ = 0;
  Point lo_{};
  Point hi_{};
  Point h_{};
  MultiIndex m_{1, 1, 1};
  std::array<std::size_t, kMaxDim> stride_{1, 1, 1};
  std::size_t size_ = 0;
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) throw InvalidArgument(std::string(what) + ": grids differ");
}

/// Nodal scalar field on a grid.
class GridFunction {
 public:
  GridFunction() = default;

  explicit GridFunction(Grid grid, double fill = 0.0) : grid_(std::move(grid)), values_(grid_.size(), fill) {}

  GridFunction(Grid grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size()) throw InvalidArgument("GridFunction: value count does not match grid");
  }

  /// Samples fn(point) at every node.
  template <class Fn>
    requires std::is_invocable_r_v<double, Fn, const Point&>
  static GridFunction sample(const Grid& grid, Fn&& fn) {
    std::vector<double> v(grid.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = fn(grid.point(k));
    return GridFunction(grid, std::move(v));
  }

  const Grid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t k) const { return values_[k]; }
  std::size_t size() const noexcept { return values_.size(); }

  /// Copy with one value replaced.
  GridFunction with_value(std::size_t k, double v) const {
    GridFunction out = *this;
    out.values_.at(k) = v;
    return out;
  }

  friend GridFunction operator+(const GridFunction& a, const GridFunction& b) {
    return zip(a, b, std::plus<>{}, "GridFunction +");
  }
  friend GridFunction operator-(const GridFunction& a, const GridFunction& b) {
    return zip(a, b, std::minus<>{}, "GridFunction -");
  }
  friend GridFunction operator*(double s, const GridFunction& a) {
    std::vector<double> v(a.values_);
    for (double& x : v) x *= s;
    return GridFunction(a.grid_, std::move(v));
  }
  friend GridFunction operator+(const GridFunction& a, double beta) {
    std::vector<double> v(a.values_);
    for (double& x : v) x += beta;
    return GridFunction(a.grid_, std::move(v));
  }
  friend GridFunction min(const GridFunction& a, const GridFunction& b) {
    return zip(a, b, [](double x, double y) { return std::min(x, y); }, "min");
  }
  friend GridFunction max(const GridFunction& a, const GridFunction& b) {
    return zip(a, b, [](double x, double y) { return std::max(x, y); }, "max");
  }

  double max_abs() const {
    double m = 0.0;
    for (double x : values_) m = std::max(m, std::abs(x));
    return m;
  }

  /// Restriction to the nodes of an index box, living on grid().subgrid(box).
  GridFunction restrict_to(const IndexBox& box) const {
    const Grid sub = grid_.subgrid(box);
    std::vector<double> v(sub.size());
    grid_.for_each_node(box, [&](std::size_t idx, const MultiIndex& i) {
      MultiIndex j{0, 0, 0};
      for (int a = 0; a < grid_.dim(); ++a) j[a] = i[a] - box.lo[a];
      v[sub.index(j)] = values_[idx];
    });
    return GridFunction(sub, std::move(v));
  }

 private:
  template <class Op>
  static GridFunction zip(const GridFunction& a, const GridFunction& b, Op op, const char* what) {
    require_same_grid(a.grid_, b.grid_, what);
    std::vector<double> v(a.values_.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = op(a.values_[k], b.values_[k]);
    return GridFunction(a.grid_, std::move(v));
  }

  Grid grid_;
  std::vector<double> values_;
};

/// Uniform space-time discretization of Omega x (t0, t1); level k sits at t0 + k*tau.
class SpaceTimeGrid {
 public:
  SpaceTimeGrid() = default;
  SpaceTimeGrid(Grid spatial, double t0, double t1, int steps) : spatial_(std::move(spatial)), t0_(t0), t1_(t1), steps_(steps) {
    if (!(t1 > t0)) throw InvalidArgument("SpaceTimeGrid: need t0 < t1");
    if (steps < 1) throw InvalidArgument("SpaceTimeGrid: need at least one step");
  }

  const Grid& spatial() const noexcept { return spatial_; }
  double t0() const noexcept { return t0_; }
  double t1() const noexcept { return t1_; }
  int steps() const noexcept { return steps_; }
  int levels() const noexcept { return steps_ + 1; }
  double tau() const noexcept { return (t1_ - t0_) / steps_; }
  double time(int k) const {
    if (k == steps_) return t1_;
    return t0_ + (t1_ - t0_) * static_cast<double>(k) / steps_;
  }

  /// Spacing and step both halved.
  SpaceTimeGrid refined() const { return SpaceTimeGrid(spatial_.refined(), t0_, t1_, 2 * steps_); }

  friend bool operator==(const SpaceTimeGrid& a, const SpaceTimeGrid& b) {
    return a.spatial_ == b.spatial_ && a.t0_ == b.t0_ && a.t1_ == b.t1_ && a.steps_ == b.steps_;
  }

 private:
  Grid spatial_;
  double t0_ = 0.0;
  double t1_ = 1.0;
  int steps_ = 1;
};

/// Space-time box: spatial box plus a time window, snapped outward to levels.
struct SpaceTimeBox {
  Box space;
  double t_lo = 0.0;
  double t_hi = 0.0;
};

struct LevelRange {
  int lo = 0;
  int hi = 0;
};

inline LevelRange snap_levels(const SpaceTimeGrid& g, double t_lo, double t_hi) {
  if (t_lo > t_hi) throw InvalidArgument("snap_levels: inverted time window");
  const double tol = 1e-9;
  LevelRange r;
  r.lo = std::clamp(static_cast<int>(std::floor((t_lo - g.t0()) / g.tau() + tol)), 0, g.steps());
  r.hi = std::clamp(static_cast<int>(std::ceil((t_hi - g.t0()) / g.tau() - tol)), 0, g.steps());
  return r;
}

/// One GridFunction per time level 0..steps, all on the same spatial grid.
class SpaceTimeFunction {
 public:
  SpaceTimeFunction() = default;

  SpaceTimeFunction(SpaceTimeGrid grid, std::vector<GridFunction> slices) : grid_(std::move(grid)), slices_(std::move(slices)) {
    if (slices_.size() != static_cast<std::size_t>(grid_.levels())) {
      throw InvalidArgument("SpaceTimeFunction: need one slice per time level");
    }
    for (const auto& s : slices_) require_same_grid(s.grid(), grid_.spatial(), "SpaceTimeFunction");
  }

  explicit SpaceTimeFunction(const SpaceTimeGrid& grid, double fill = 0.0)
      : SpaceTimeFunction(grid, std::vector<GridFunction>(static_cast<std::size_t>(grid.levels()),
                                                          GridFunction(grid.spatial(), fill))) {}

  template <class Fn>
    requires std::is_invocable_r_v<double, Fn, const Point&, double>
  static SpaceTimeFunction sample(const SpaceTimeGrid& grid, Fn&& fn) {
    std::vector<GridFunction> slices;
    slices.reserve(static_cast<std::size_t>(grid.levels()));
    for (int k = 0; k < grid.levels(); ++k) {
      const double t = grid.time(k);
      slices.push_back(GridFunction::sample(grid.spatial(), [&](const Point& x) { return fn(x, t); }));
    }
    return SpaceTimeFunction(grid, std::move(slices));
  }

  const SpaceTimeGrid& grid() const noexcept { return grid_; }
  const GridFunction& slice(int k) const { return slices_.at(static_cast<std::size_t>(k)); }
  const std::vector<GridFunction>& slices() const noexcept { return slices_; }

  friend SpaceTimeFunction operator-(const SpaceTimeFunction& a, const SpaceTimeFunction& b) {
    if (!(a.grid_ == b.grid_)) throw InvalidArgument("SpaceTimeFunction -: grids differ");
    std::vector<GridFunction> s;
    for (std::size_t k = 0; k < a.slices_.size(); ++k) s.push_back(a.slices_[k] - b.slices_[k]);
    return SpaceTimeFunction(a.grid_, std::move(s));
  }
  friend SpaceTimeFunction min(const SpaceTimeFunction& a, const SpaceTimeFunction& b) {
    if (!(a.grid_ == b.grid_)) throw InvalidArgument("SpaceTimeFunction min: grids differ");
    std::vector<GridFunction> s;
    for (std::size_t k = 0; k < a.slices_.size(); ++k) s.push_back(min(a.slices_[k], b.slices_[k]));
    return SpaceTimeFunction(a.grid_, std::move(s));
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& s : slices_) m = std::max(m, s.max_abs());
    return m;
  }

 private:
  SpaceTimeGrid grid_;
  std::vector<GridFunction> slices_;
};

}  // namespace psuper
