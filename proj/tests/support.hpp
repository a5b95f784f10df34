#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "psuper/grid.hpp"
#include "psuper/measure.hpp"

namespace psuper::testing {

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline GridFunction random_function(const Grid& g, std::mt19937_64& gen, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(g.size());
  for (double& x : v) x = d(gen);
  return GridFunction(g, std::move(v));
}

/// Nonnegative random data on the interior nodes.
inline DiscreteMeasure positive_data(const Grid& g, std::mt19937_64& gen, double scale) {
  return DiscreteMeasure::from_density(random_function(g, gen, 0.0, scale)).interior();
}

inline double max_diff(const GridFunction& a, const GridFunction& b) { return (a - b).max_abs(); }

inline Box box2(double lo, double hi) { return Box{{lo, lo, 0.0}, {hi, hi, 0.0}}; }
inline Box box1(double lo, double hi) { return Box{{lo, 0.0, 0.0}, {hi, 0.0, 0.0}}; }

}  // namespace psuper::testing
