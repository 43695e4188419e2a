#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>

#include "ffwave/errors.hpp"

namespace ffwave {

/// Local Lagrange stencil of at most 8 consecutive nodes around a point:
/// value and first-derivative weights of the interpolating polynomial.
struct Stencil {
  int first = 0;  ///< index of the first node in the stencil
  int width = 0;
  std::array<double, 8> value{};
  std::array<double, 8> derivative{};
};

/// First index of a run of `width` consecutive nodes that brackets x as
/// centrally as possible (odd widths are centred on the nearest node). Near
/// the ends the run is shifted inwards (one-sided stencil).
inline int stencil_start(std::span<const double> nodes, double x, int width) {
  const int n = static_cast<int>(nodes.size());
  if (width > n) throw ShapeError("stencil wider than the node set");
  const int upper = static_cast<int>(std::upper_bound(nodes.begin(), nodes.end(), x) - nodes.begin());
  int start = upper - width / 2;
  if (width % 2 == 1) {
    int nearest = upper;
    if (upper == n || (upper > 0 && x - nodes[upper - 1] <= nodes[upper] - x)) nearest = upper - 1;
    start = nearest - width / 2;
  }
  return std::clamp(start, 0, n - width);
}

/// Lagrange weights on nodes[first, first + width) evaluated at x.
/// Barycentric form for values; exact node hits return a unit vector.
inline Stencil lagrange_stencil(std::span<const double> nodes, int first, int width, double x) {
  if (width < 2 || width > 8) throw ShapeError("stencil width must be in [2, 8]");
  Stencil s;
  s.first = first;
  s.width = width;
  const double* xs = nodes.data() + first;

  std::array<double, 8> bary{};
  for (int m = 0; m < width; ++m) {
    double prod = 1.0;
    for (int r = 0; r < width; ++r)
      if (r != m) prod *= xs[m] - xs[r];
    bary[m] = 1.0 / prod;
  }

  int hit = -1;
  for (int m = 0; m < width; ++m)
    if (x == xs[m]) hit = m;

  if (hit >= 0) {
    s.value[hit] = 1.0;
    // l_m'(x_k) = bary_m / bary_k / (x_k - x_m) for m != k; diagonal from row sum zero.
    double diag = 0.0;
    for (int m = 0; m < width; ++m) {
      if (m == hit) continue;
      s.derivative[m] = bary[m] / bary[hit] / (xs[hit] - xs[m]);
      diag -= s.derivative[m];
    }
    s.derivative[hit] = diag;
    return s;
  }

  double ell = 1.0;  // node polynomial at x
  double inv_sum = 0.0;
  for (int m = 0; m < width; ++m) {
    ell *= x - xs[m];
    inv_sum += 1.0 / (x - xs[m]);
  }
  for (int m = 0; m < width; ++m) {
    const double lm = ell * bary[m] / (x - xs[m]);
    s.value[m] = lm;
    // d/dx [ell(x) bary_m / (x - x_m)] = l_m(x) * (sum_{r != m} 1/(x - x_r))
    s.derivative[m] = lm * (inv_sum - 1.0 / (x - xs[m]));
  }
  return s;
}

/// Stencil of `width` nodes around x with value and derivative weights.
inline Stencil local_stencil(std::span<const double> nodes, double x, int width) {
  return lagrange_stencil(nodes, stencil_start(nodes, x, width), width, x);
}

}  // namespace ffwave
