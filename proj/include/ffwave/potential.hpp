#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ffwave/energy_grid.hpp"
#include "ffwave/errors.hpp"
#include "ffwave/parallel.hpp"

namespace ffwave {

using cplx = std::complex<double>;

enum class ProfileShape { sin_bump, poly_bump, cusp };

inline std::string_view to_string(ProfileShape s) {
  switch (s) {
    case ProfileShape::sin_bump: return "sin-bump";
    case ProfileShape::poly_bump: return "poly-bump";
    case ProfileShape::cusp: return "cusp";
  }
  return "?";
}

inline ProfileShape profile_shape_from_string(std::string_view s) {
  if (s == "sin-bump") return ProfileShape::sin_bump;
  if (s == "poly-bump") return ProfileShape::poly_bump;
  if (s == "cusp") return ProfileShape::cusp;
  throw ConfigError("unknown profile '" + std::string(s) + "' (expected sin-bump, poly-bump or cusp)");
}

/// A C^d-valued function on [a, b] of the form
///   scale * e(s)^power * direction,  s = (lambda - a)/(b - a),
/// with envelope e = sin(pi s) (sin-bump) or 4 s (1 - s) (poly-bump).
/// The cusp shape is sin(pi s) * |lambda - center|^exponent.
struct Profile {
  ProfileShape shape = ProfileShape::sin_bump;
  double a = 0.0, b = 1.0;
  double power = 2.0;
  double scale = 1.0;
  double center = 0.5;
  double exponent = 0.6;
  Eigen::VectorXcd direction = Eigen::VectorXcd::Ones(1);

  int dim() const { return static_cast<int>(direction.size()); }

  bool differentiable() const { return shape != ProfileShape::cusp && power >= 1.0; }

  /// Scalar envelope value and lambda-derivative.
  std::pair<double, double> scalar(double lambda) const {
    const double len = b - a;
    const double s = (lambda - a) / len;
    double e = 0.0, de = 0.0;
    switch (shape) {
      case ProfileShape::sin_bump:
        e = std::sin(std::numbers::pi * s);
        de = std::numbers::pi * std::cos(std::numbers::pi * s) / len;
        break;
      case ProfileShape::poly_bump:
        e = 4.0 * s * (1.0 - s);
        de = 4.0 * (1.0 - 2.0 * s) / len;
        break;
      case ProfileShape::cusp: {
        const double r = std::abs(lambda - center);
        const double base = std::sin(std::numbers::pi * s);
        const double pw = std::pow(r, exponent);
        e = base * pw;
        const double dbase = std::numbers::pi * std::cos(std::numbers::pi * s) / len;
        const double dpw = r > 0.0 ? exponent * pw / r * (lambda > center ? 1.0 : -1.0) : 0.0;
        return {scale * e, scale * (dbase * pw + base * dpw)};
      }
    }
    if (e <= 0.0) return {0.0, 0.0};
    const double val = std::pow(e, power);
    const double dval = power * std::pow(e, power - 1.0) * de;
    return {scale * val, scale * dval};
  }

  Eigen::VectorXcd value(double lambda) const { return scalar(lambda).first * direction; }
  Eigen::VectorXcd derivative(double lambda) const { return scalar(lambda).second * direction; }
};

inline Profile make_profile(ProfileShape shape, double a, double b, double power, Eigen::VectorXcd direction,
                            double scale = 1.0) {
  if (!(b > a)) throw ConfigError("profile interval requires b > a");
  if (direction.size() == 0) throw ConfigError("profile direction must be non-empty");
  if (power <= 0.0) throw ConfigError("profile power must be positive");
  Profile p;
  p.shape = shape;
  p.a = a;
  p.b = b;
  p.power = power;
  p.scale = scale;
  p.direction = std::move(direction);
  return p;
}

inline Eigen::VectorXcd unit_vector(int d, int k) {
  Eigen::VectorXcd e = Eigen::VectorXcd::Zero(d);
  e(k) = 1.0;
  return e;
}

/// High-order reference quadrature on [a, b] (Gauss-Legendre, fixed order).
class ReferenceQuadrature {
 public:
  explicit ReferenceQuadrature(double a, double b, int order = 400) : a_(a), b_(b) {
    gauss_legendre_unit(order, x_, w_);
    for (std::size_t k = 0; k < x_.size(); ++k) {
      x_[k] = 0.5 * (a + b) + 0.5 * (b - a) * x_[k];
      w_[k] *= 0.5 * (b - a);
    }
  }
  template <class F>
  auto integrate(F&& f) const {
    auto sum = f(x_[0]) * w_[0];
    for (std::size_t k = 1; k < x_.size(); ++k) sum += f(x_[k]) * w_[k];
    return sum;
  }
  std::span<const double> nodes() const { return x_; }
  std::span<const double> weights() const { return w_; }

 private:
  double a_, b_;
  std::vector<double> x_, w_;
};

/// Rescales a profile so that its L2 norm on [a, b] is 1.
inline Profile normalized(Profile p) {
  ReferenceQuadrature q(p.a, p.b);
  const double n2 = q.integrate([&](double l) { return p.value(l).squaredNorm(); });
  if (!(n2 > 0.0)) throw ConfigError("cannot normalize a vanishing profile");
  p.scale /= std::sqrt(n2);
  return p;
}

/// Operator-valued kernel v(lambda, mu) with values in d x d matrices.
/// Kernels with a factor form v = G(lambda) C G(mu)^* expose it so that
/// tabulation and solvers can exploit the low rank.
class OperatorKernel {
 public:
  using MatrixFn = std::function<Eigen::MatrixXcd(double, double)>;
  using FactorFn = std::function<Eigen::MatrixXcd(double)>;

  struct FactorForm {
    FactorFn factors;            // d x r
    FactorFn factors_dlambda;    // d x r, empty when not differentiable
    Eigen::MatrixXcd coefficients;  // r x r Hermitian
  };

  std::string family = "custom";
  int dim = 1;
  double a = 0.0, b = 1.0;
  double holder_exponent = 1.0;
  bool differentiable = false;
  bool identically_zero = false;

  MatrixFn value_fn;
  MatrixFn dlambda_fn;
  std::optional<FactorForm> factor_form;

  void check_domain(double lambda, double mu) const {
    const double tol = 1e-14 * (b - a);
    if (lambda < a - tol || lambda > b + tol || mu < a - tol || mu > b + tol)
      throw DomainError("kernel evaluated outside [a, b] x [a, b]");
  }

  Eigen::MatrixXcd eval(double lambda, double mu) const {
    check_domain(lambda, mu);
    if (identically_zero) return Eigen::MatrixXcd::Zero(dim, dim);
    if (factor_form) {
      const auto& f = *factor_form;
      return f.factors(lambda) * f.coefficients * f.factors(mu).adjoint();
    }
    return value_fn(lambda, mu);
  }

  Eigen::MatrixXcd eval_dlambda(double lambda, double mu) const {
    if (!differentiable) throw UnsupportedCheck("kernel '" + family + "' has no lambda-derivative");
    check_domain(lambda, mu);
    if (identically_zero) return Eigen::MatrixXcd::Zero(dim, dim);
    if (factor_form) {
      const auto& f = *factor_form;
      return f.factors_dlambda(lambda) * f.coefficients * f.factors(mu).adjoint();
    }
    return dlambda_fn(lambda, mu);
  }

  int factor_rank() const { return factor_form ? static_cast<int>(factor_form->coefficients.rows()) : -1; }
};

using KernelPtr = std::shared_ptr<const OperatorKernel>;

inline Eigen::MatrixXcd evaluate_factors(const std::vector<Profile>& profiles, double lambda, bool derivative) {
  const int d = profiles.front().dim();
  Eigen::MatrixXcd G(d, static_cast<Eigen::Index>(profiles.size()));
  for (std::size_t k = 0; k < profiles.size(); ++k)
    G.col(static_cast<Eigen::Index>(k)) = derivative ? profiles[k].derivative(lambda) : profiles[k].value(lambda);
  return G;
}

/// The zero kernel on [a, b] with internal dimension d.
inline KernelPtr build_zero_kernel(double a, double b, int d) {
  auto k = std::make_shared<OperatorKernel>();
  k->family = "free";
  k->dim = d;
  k->a = a;
  k->b = b;
  k->differentiable = true;
  k->identically_zero = true;
  return k;
}

/// v(lambda, mu) = sum_kl c_kl |g_k(lambda)><g_l(mu)|.
inline KernelPtr build_separable_kernel(std::vector<Profile> profiles, const Eigen::MatrixXcd& coefficients) {
  if (profiles.empty()) throw ConfigError("separable kernel needs at least one profile");
  const auto r = static_cast<Eigen::Index>(profiles.size());
  if (coefficients.rows() != r || coefficients.cols() != r)
    throw ConfigError("coefficient matrix must be " + std::to_string(r) + "x" + std::to_string(r));
  if ((coefficients - coefficients.adjoint()).cwiseAbs().maxCoeff() > 0.0)
    throw ConfigError("coefficient matrix must be symmetric (Hermitian)");
  const int d = profiles.front().dim();
  const double a = profiles.front().a, b = profiles.front().b;
  bool differentiable = true;
  double alpha = 1.0;
  for (const auto& p : profiles) {
    if (p.dim() != d) throw ConfigError("all profiles must share the internal dimension");
    if (p.a != a || p.b != b) throw ConfigError("all profiles must share the interval");
    if (!p.differentiable()) differentiable = false;
    if (p.shape == ProfileShape::cusp) alpha = std::min(alpha, p.exponent);
    else if (p.power < 1.0) alpha = std::min(alpha, p.power);
  }
  auto k = std::make_shared<OperatorKernel>();
  k->family = "separable";
  k->dim = d;
  k->a = a;
  k->b = b;
  k->holder_exponent = alpha;
  k->differentiable = differentiable;
  k->identically_zero = coefficients.cwiseAbs().maxCoeff() == 0.0;
  OperatorKernel::FactorForm form;
  form.coefficients = coefficients;
  form.factors = [profiles](double l) { return evaluate_factors(profiles, l, false); };
  if (differentiable) form.factors_dlambda = [profiles](double l) { return evaluate_factors(profiles, l, true); };
  k->factor_form = std::move(form);
  return k;
}

/// Kernel from a closed-form callable (no factor structure).
inline KernelPtr build_general_kernel(double a, double b, int d, OperatorKernel::MatrixFn value,
                                      OperatorKernel::MatrixFn dlambda = {}, double holder_exponent = 1.0) {
  if (!(b > a)) throw ConfigError("kernel interval requires b > a");
  auto k = std::make_shared<OperatorKernel>();
  k->dim = d;
  k->a = a;
  k->b = b;
  k->value_fn = std::move(value);
  k->dlambda_fn = std::move(dlambda);
  k->differentiable = static_cast<bool>(k->dlambda_fn);
  k->holder_exponent = holder_exponent;
  return k;
}

/// A potential with an eigenvalue embedded in the continuum by construction.
struct EmbeddedScenario {
  KernelPtr kernel;
  double eigenvalue = 0.0;
  Profile eigenfunction;
  double coupling = 0.0;
  double construction_residual = 0.0;  // max |[Vf](lambda) - g(lambda)| on reference nodes

  Eigen::VectorXcd f(double lambda) const { return eigenfunction.value(lambda); }
  Eigen::VectorXcd g(double lambda) const { return (eigenvalue - lambda) * eigenfunction.value(lambda); }

  /// f sampled on a grid (node-major).
  Eigen::VectorXcd sample(const EnergyGrid& grid) const {
    const int d = eigenfunction.dim();
    Eigen::VectorXcd out(static_cast<Eigen::Index>(grid.size()) * d);
    for (int i = 0; i < grid.size(); ++i) out.segment(static_cast<Eigen::Index>(i) * d, d) = f(grid.node(i));
    return out;
  }
};

/// v = |g><f| + |f><g| + c |f><f| with g = (lambda_n - lambda) f and
/// c = -<g, f>, so that V f = g and (H0 + V) f = lambda_n f.
inline EmbeddedScenario build_embedded_ev_kernel(double lambda_n, const Profile& f) {
  const double a = f.a, b = f.b;
  if (!(lambda_n > a && lambda_n < b)) throw ConfigError("embedded eigenvalue must lie strictly inside (a, b)");
  if (!f.differentiable() || f.power < 2.0)
    throw ConfigError("embedded eigenfunction profile must vanish to second order at a and b");
  ReferenceQuadrature q(a, b);
  const double norm2 = q.integrate([&](double l) { return f.value(l).squaredNorm(); });
  if (std::abs(norm2 - 1.0) > 1e-10)
    throw ConfigError("embedded eigenfunction profile is not normalized (norm^2 = " + std::to_string(norm2) + ")");
  const double gf = q.integrate([&](double l) { return (lambda_n - l) * f.value(l).squaredNorm(); });
  const double c = -gf;

  auto k = std::make_shared<OperatorKernel>();
  k->family = "embedded";
  k->dim = f.dim();
  k->a = a;
  k->b = b;
  k->holder_exponent = 1.0;
  k->differentiable = true;
  OperatorKernel::FactorForm form;
  form.coefficients = Eigen::MatrixXcd(2, 2);
  form.coefficients << 0.0, 1.0, 1.0, c;
  form.factors = [f, lambda_n](double l) {
    Eigen::MatrixXcd G(f.dim(), 2);
    const Eigen::VectorXcd fv = f.value(l);
    G.col(0) = (lambda_n - l) * fv;
    G.col(1) = fv;
    return G;
  };
  form.factors_dlambda = [f, lambda_n](double l) {
    Eigen::MatrixXcd G(f.dim(), 2);
    const Eigen::VectorXcd df = f.derivative(l);
    G.col(0) = -f.value(l) + (lambda_n - l) * df;
    G.col(1) = df;
    return G;
  };
  k->factor_form = std::move(form);

  EmbeddedScenario sc;
  sc.kernel = k;
  sc.eigenvalue = lambda_n;
  sc.eigenfunction = f;
  sc.coupling = c;

  // Verify V f = g by quadrature at a spread of evaluation points.
  double residual = 0.0;
  for (int m = 1; m < 64; ++m) {
    const double l = a + (b - a) * m / 64.0;
    Eigen::VectorXcd vf = Eigen::VectorXcd::Zero(f.dim());
    for (std::size_t j = 0; j < q.nodes().size(); ++j)
      vf += q.weights()[j] * (k->eval(l, q.nodes()[j]) * f.value(q.nodes()[j]));
    residual = std::max(residual, (vf - sc.g(l)).norm());
  }
  sc.construction_residual = residual;
  if (residual > 1e-10)
    throw ConfigError("embedded construction failed: |Vf - g| = " + std::to_string(residual));
  return sc;
}

/// Default embedded scenario: lambda_n = a + 0.3 (b - a), f = N sin^2(pi s) e_1.
inline EmbeddedScenario default_embedded_scenario(double a, double b, int d = 1, double position = 0.3) {
  Profile f = normalized(make_profile(ProfileShape::sin_bump, a, b, 2.0, unit_vector(d, 0)));
  return build_embedded_ev_kernel(a + position * (b - a), f);
}

/// v(lambda, mu) evaluated with domain checking.
inline Eigen::MatrixXcd eval_kernel(const OperatorKernel& kernel, double lambda, double mu) {
  return kernel.eval(lambda, mu);
}

/// Kernel values on all node pairs: block (i, j) = v(lambda_i, lambda_j),
/// unweighted, in an (N d) x (N d) matrix.
struct KernelTable {
  KernelPtr kernel;
  GridPtr grid;
  int dim = 1;
  Eigen::MatrixXcd values;
  Eigen::MatrixXcd dlambda;  // empty unless the kernel is differentiable
  // Factor samples G(lambda_i) stacked (N d) x r and coefficients, when available.
  Eigen::MatrixXcd factors;
  Eigen::MatrixXcd coefficients;

  int size() const { return grid->size() * dim; }
  auto block(int i, int j) const { return values.block(static_cast<Eigen::Index>(i) * dim, static_cast<Eigen::Index>(j) * dim, dim, dim); }
  bool has_factors() const { return factors.size() > 0; }
};

inline Eigen::MatrixXcd sample_factors(const OperatorKernel::FactorFn& fn, const EnergyGrid& grid, int d, int r) {
  Eigen::MatrixXcd out(static_cast<Eigen::Index>(grid.size()) * d, r);
  for (int i = 0; i < grid.size(); ++i) out.block(static_cast<Eigen::Index>(i) * d, 0, d, r) = fn(grid.node(i));
  return out;
}

inline KernelTable tabulate(const KernelPtr& kernel, const GridPtr& grid) {
  if (grid->a() != kernel->a || grid->b() != kernel->b) throw ShapeError("kernel and grid intervals differ");
  KernelTable t;
  t.kernel = kernel;
  t.grid = grid;
  t.dim = kernel->dim;
  const int d = kernel->dim, n = grid->size();
  const Eigen::Index nd = static_cast<Eigen::Index>(n) * d;
  if (kernel->identically_zero) {
    t.values = Eigen::MatrixXcd::Zero(nd, nd);
    if (kernel->differentiable) t.dlambda = Eigen::MatrixXcd::Zero(nd, nd);
    return t;
  }
  if (kernel->factor_form) {
    const auto& f = *kernel->factor_form;
    const int r = static_cast<int>(f.coefficients.rows());
    t.factors = sample_factors(f.factors, *grid, d, r);
    t.coefficients = f.coefficients;
    t.values = t.factors * f.coefficients * t.factors.adjoint();
    if (kernel->differentiable) t.dlambda = sample_factors(f.factors_dlambda, *grid, d, r) * f.coefficients * t.factors.adjoint();
    return t;
  }
  t.values.resize(nd, nd);
  if (kernel->differentiable) t.dlambda.resize(nd, nd);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t jj) {
    const int j = static_cast<int>(jj);
    for (int i = 0; i < n; ++i) {
      t.values.block(static_cast<Eigen::Index>(i) * d, static_cast<Eigen::Index>(j) * d, d, d) = kernel->eval(grid->node(i), grid->node(j));
      if (kernel->differentiable)
        t.dlambda.block(static_cast<Eigen::Index>(i) * d, static_cast<Eigen::Index>(j) * d, d, d) =
            kernel->eval_dlambda(grid->node(i), grid->node(j));
    }
  });
  return t;
}

/// Column of kernel blocks v(lambda_i, mu) for an arbitrary mu: (N d) x d.
inline Eigen::MatrixXcd kernel_column(const OperatorKernel& kernel, const EnergyGrid& grid, double mu) {
  const int d = kernel.dim;
  Eigen::MatrixXcd out(static_cast<Eigen::Index>(grid.size()) * d, d);
  for (int i = 0; i < grid.size(); ++i) out.block(static_cast<Eigen::Index>(i) * d, 0, d, d) = kernel.eval(grid.node(i), mu);
  return out;
}

struct HolderEstimate {
  double exponent = 1.0;
  double fit_residual = 0.0;  // RMS deviation of the log-log fit
  bool no_data = false;       // kernel vanished on every sample
  int scales = 0;
};

/// Least-squares slope of log(y) against log(x).
inline std::pair<double, double> loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double lx = std::log(x[k]), ly = std::log(y[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double icpt = (sy - slope * sx) / n;
  double res = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double e = std::log(y[k]) - (icpt + slope * std::log(x[k]));
    res += e * e;
  }
  return {slope, std::sqrt(res / n)};
}

/// Fits the Hölder exponent of v from random nearby pairs. For each
/// log-spaced separation delta the worst increment over the samples is
/// taken, and the slope of log(worst) against log(delta) is returned,
/// clipped to (0, 1].
inline HolderEstimate estimate_holder(const OperatorKernel& kernel, int sample_count, unsigned seed = 12345) {
  if (sample_count < 100) throw PreconditionError("estimate_holder needs sample_count >= 100");
  HolderEstimate est;
  const double len = kernel.b - kernel.a;
  constexpr int n_scales = 9;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  struct Sample {
    double l, m, theta;
  };
  std::vector<Sample> samples(sample_count);
  for (auto& s : samples) s = {kernel.a + len * uni(rng), kernel.a + len * uni(rng), 2.0 * std::numbers::pi * uni(rng)};

  std::vector<double> deltas, worst;
  double overall = 0.0;
  for (int k = 0; k < n_scales; ++k) {
    const double delta = len * std::pow(10.0, -3.0 + 2.0 * k / (n_scales - 1));
    double w = 0.0;
    for (const auto& s : samples) {
      const double cl = std::cos(s.theta), cm = std::sin(s.theta);
      const double nrm = std::abs(cl) + std::abs(cm);
      const double dl = delta * cl / nrm, dm = delta * cm / nrm;
      const double l2 = std::clamp(s.l + dl, kernel.a, kernel.b);
      const double m2 = std::clamp(s.m + dm, kernel.a, kernel.b);
      const double sep = std::abs(l2 - s.l) + std::abs(m2 - s.m);
      if (sep < 0.999 * delta) continue;  // clipped at the boundary
      w = std::max(w, (kernel.eval(l2, m2) - kernel.eval(s.l, s.m)).norm());
    }
    overall = std::max(overall, w);
    if (w > 0.0) {
      deltas.push_back(delta);
      worst.push_back(w);
    }
  }
  if (overall == 0.0 || deltas.size() < 2) {
    est.no_data = true;
    est.exponent = 1.0;
    return est;
  }
  auto [slope, res] = loglog_fit(deltas, worst);
  est.exponent = std::clamp(slope, 1e-6, 1.0);
  est.fit_residual = res;
  est.scales = static_cast<int>(deltas.size());
  return est;
}

}  // namespace ffwave
