#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ffwave/errors.hpp"
#include "ffwave/interpolation.hpp"

namespace ffwave {

enum class QuadratureScheme { composite_midpoint, gauss_legendre };

inline std::string_view to_string(QuadratureScheme s) {
  return s == QuadratureScheme::gauss_legendre ? "gauss-legendre" : "composite-midpoint";
}

inline QuadratureScheme scheme_from_string(std::string_view s) {
  if (s == "gauss-legendre") return QuadratureScheme::gauss_legendre;
  if (s == "composite-midpoint") return QuadratureScheme::composite_midpoint;
  throw ConfigError("unknown quadrature scheme '" + std::string(s) +
                    "' (expected gauss-legendre or composite-midpoint)");
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
inline void gauss_legendre_unit(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0, p1 = z;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    {
      // Recompute derivative at the converged root.
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
}

/// Quadrature discretization of the energy interval [a, b].
class EnergyGrid {
 public:
  EnergyGrid(double a, double b, std::vector<double> nodes, std::vector<double> weights,
             QuadratureScheme scheme)
      : a_(a), b_(b), nodes_(std::move(nodes)), weights_(std::move(weights)), scheme_(scheme) {}

  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  double length() const noexcept { return b_ - a_; }
  int size() const noexcept { return static_cast<int>(nodes_.size()); }
  QuadratureScheme scheme() const noexcept { return scheme_; }

  std::span<const double> nodes() const noexcept { return nodes_; }
  std::span<const double> weights() const noexcept { return weights_; }
  double node(int i) const { return nodes_[i]; }
  double weight(int i) const { return weights_[i]; }

  /// Index of the node closest to lambda.
  int nearest_node(double lambda) const {
    const int start = stencil_start(nodes_, lambda, 1);
    return start;
  }

  /// Index of the node equal to lambda, or -1.
  int node_index(double lambda) const {
    const int k = nearest_node(lambda);
    return nodes_[k] == lambda ? k : -1;
  }

  /// Largest gap between consecutive nodes (including the end gaps).
  double max_spacing() const {
    double h = std::max(nodes_.front() - a_, b_ - nodes_.back());
    for (std::size_t i = 1; i < nodes_.size(); ++i) h = std::max(h, nodes_[i] - nodes_[i - 1]);
    return h;
  }

  /// Local spacing around node i.
  double spacing_at(int i) const {
    const int n = size();
    const double left = i > 0 ? nodes_[i] - nodes_[i - 1] : nodes_[i] - a_;
    const double right = i + 1 < n ? nodes_[i + 1] - nodes_[i] : b_ - nodes_[i];
    return std::max(left, right);
  }

 private:
  double a_, b_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
  QuadratureScheme scheme_;
};

using GridPtr = std::shared_ptr<const EnergyGrid>;

/// Builds the quadrature grid on [a, b] with `count` nodes.
inline GridPtr build_grid(double a, double b, int count, QuadratureScheme scheme) {
  if (!(b > a)) throw ConfigError("grid requires b > a");
  if (count < 8) throw ConfigError("grid requires at least 8 nodes");
  std::vector<double> nodes(count), weights(count);
  const double len = b - a;
  if (scheme == QuadratureScheme::composite_midpoint) {
    const double h = len / count;
    for (int k = 0; k < count; ++k) {
      nodes[k] = a + (k + 0.5) * h;
      weights[k] = h;
    }
  } else {
    std::vector<double> x, w;
    gauss_legendre_unit(count, x, w);
    for (int k = 0; k < count; ++k) {
      nodes[k] = 0.5 * (a + b) + 0.5 * len * x[k];
      weights[k] = 0.5 * len * w[k];
    }
  }
  return std::make_shared<const EnergyGrid>(a, b, std::move(nodes), std::move(weights), scheme);
}

/// Uniform grid on [-L, L) for the rescaled energy variable x.
class LineGrid {
 public:
  LineGrid(double half_width, int count) : half_width_(half_width), count_(count) {
    if (!(half_width > 0.0)) throw ConfigError("line grid half width must be positive");
    if (count <= 0 || count % 2 != 0) throw ConfigError("line grid count must be a positive even integer");
    spacing_ = 2.0 * half_width / count;
    nodes_.resize(count);
    for (int k = 0; k < count; ++k) nodes_[k] = -half_width + k * spacing_;
  }

  double half_width() const noexcept { return half_width_; }
  int size() const noexcept { return count_; }
  double spacing() const noexcept { return spacing_; }
  std::span<const double> nodes() const noexcept { return nodes_; }
  double node(int k) const { return nodes_[k]; }

 private:
  double half_width_;
  int count_;
  double spacing_;
  std::vector<double> nodes_;
};

using LinePtr = std::shared_ptr<const LineGrid>;

inline LinePtr build_line_grid(double half_width = 8.0, int count = 512) {
  return std::make_shared<const LineGrid>(half_width, count);
}

/// x = (1/2) ln((lambda - a)/(b - lambda)); strictly increasing on (a, b).
inline double rescale_energy(double lambda, double a, double b) {
  if (!(lambda > a && lambda < b)) throw DomainError("rescale_energy: lambda outside (a, b)");
  return 0.5 * std::log((lambda - a) / (b - lambda));
}

/// Inverse of rescale_energy: (a + b e^{2x}) / (1 + e^{2x}).
inline double energy_from_line(double x, double a, double b) {
  return a + 0.5 * (b - a) * (1.0 + std::tanh(x));
}

/// A C^d-valued function sampled on the nodes of a grid (node-major storage:
/// component c of node i lives at index i*dim + c).
template <class Grid>
struct GridFunction {
  std::shared_ptr<const Grid> grid;
  int dim = 1;
  Eigen::VectorXcd values;

  GridFunction() = default;
  GridFunction(std::shared_ptr<const Grid> g, int d)
      : grid(std::move(g)), dim(d), values(Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(grid->size()) * d)) {}
  GridFunction(std::shared_ptr<const Grid> g, int d, Eigen::VectorXcd v)
      : grid(std::move(g)), dim(d), values(std::move(v)) {
    if (values.size() != static_cast<Eigen::Index>(grid->size()) * d)
      throw ShapeError("grid function length does not match node count times dimension");
  }

  auto node_value(int i) { return values.segment(static_cast<Eigen::Index>(i) * dim, dim); }
  auto node_value(int i) const { return values.segment(static_cast<Eigen::Index>(i) * dim, dim); }
};

using EnergyFunction = GridFunction<EnergyGrid>;
using LineFunction = GridFunction<LineGrid>;

/// Squared L2 norm of a node-major vector under the energy quadrature.
inline double weighted_norm2(const EnergyGrid& grid, int dim, const Eigen::VectorXcd& v) {
  double s = 0.0;
  for (int i = 0; i < grid.size(); ++i) s += grid.weight(i) * v.segment(static_cast<Eigen::Index>(i) * dim, dim).squaredNorm();
  return s;
}

inline double weighted_norm(const EnergyGrid& grid, int dim, const Eigen::VectorXcd& v) {
  return std::sqrt(weighted_norm2(grid, dim, v));
}

inline std::complex<double> weighted_inner(const EnergyGrid& grid, int dim, const Eigen::VectorXcd& u,
                                           const Eigen::VectorXcd& v) {
  std::complex<double> s = 0.0;
  for (int i = 0; i < grid.size(); ++i) {
    const auto off = static_cast<Eigen::Index>(i) * dim;
    s += grid.weight(i) * u.segment(off, dim).dot(v.segment(off, dim));
  }
  return s;
}

inline double line_norm(const LineGrid& line, const Eigen::VectorXcd& v) {
  return std::sqrt(line.spacing() * v.squaredNorm());
}

inline double norm(const EnergyFunction& f) { return weighted_norm(*f.grid, f.dim, f.values); }
inline double norm(const LineFunction& f) { return line_norm(*f.grid, f.values); }

/// Interpolates a node-major energy vector at an arbitrary lambda in [a, b]
/// with the 4-point local Lagrange stencil (one-sided near the ends).
inline Eigen::VectorXcd interpolate_energy(const EnergyGrid& grid, int dim, const Eigen::VectorXcd& v,
                                           double lambda) {
  const Stencil s = local_stencil(grid.nodes(), lambda, 4);
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(dim);
  for (int m = 0; m < s.width; ++m)
    out += s.value[m] * v.segment(static_cast<Eigen::Index>(s.first + m) * dim, dim);
  return out;
}

/// [U f](x) = sqrt((b-a)/2) sech(x) f(lambda(x)).
inline LineFunction apply_U(const EnergyFunction& f, const LinePtr& target) {
  const EnergyGrid& g = *f.grid;
  LineFunction out(target, f.dim);
  const double scale = std::sqrt(0.5 * g.length());
  for (int k = 0; k < target->size(); ++k) {
    const double x = target->node(k);
    const double lambda = energy_from_line(x, g.a(), g.b());
    if (!(lambda > g.a() && lambda < g.b())) continue;
    out.node_value(k) = scale / std::cosh(x) * interpolate_energy(g, f.dim, f.values, lambda);
  }
  return out;
}

/// Interpolates a line vector at x, treating the function as zero outside
/// the grid window.
inline Eigen::VectorXcd interpolate_line(const LineGrid& line, int dim, const Eigen::VectorXcd& v, double x) {
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(dim);
  const double h = line.spacing();
  const double t = (x + line.half_width()) / h;
  const int base = static_cast<int>(std::floor(t));
  if (base < -2 || base > line.size()) return out;
  // Four points base-1 .. base+2 with zero padding outside [0, N).
  std::array<double, 4> xs{};
  for (int m = 0; m < 4; ++m) xs[m] = -line.half_width() + (base - 1 + m) * h;
  const Stencil s = lagrange_stencil(xs, 0, 4, x);
  for (int m = 0; m < 4; ++m) {
    const int k = base - 1 + m;
    if (k < 0 || k >= line.size()) continue;
    out += s.value[m] * v.segment(static_cast<Eigen::Index>(k) * dim, dim);
  }
  return out;
}

/// [U^{-1} phi](lambda) = sqrt((b-a)/2) / sqrt((lambda-a)(b-lambda)) phi(x(lambda)).
inline EnergyFunction apply_Uinv(const LineFunction& phi, const GridPtr& target) {
  const EnergyGrid& g = *target;
  EnergyFunction out(target, phi.dim);
  const double scale = std::sqrt(0.5 * g.length());
  for (int i = 0; i < g.size(); ++i) {
    const double lambda = g.node(i);
    const double x = rescale_energy(lambda, g.a(), g.b());
    if (x < -phi.grid->half_width() || x > phi.grid->half_width()) continue;
    out.node_value(i) = scale / std::sqrt((lambda - g.a()) * (g.b() - lambda)) *
                        interpolate_line(*phi.grid, phi.dim, phi.values, x);
  }
  return out;
}

/// The conjugated free Hamiltonian U H0 U^{-1}: multiplication by this function.
inline double conjugated_h0(double x, double a, double b) { return energy_from_line(x, a, b); }

}  // namespace ffwave
