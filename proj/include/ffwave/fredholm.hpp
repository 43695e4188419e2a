#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ffwave/energy_grid.hpp"
#include "ffwave/errors.hpp"
#include "ffwave/interpolation.hpp"
#include "ffwave/parallel.hpp"
#include "ffwave/potential.hpp"
#include "ffwave/spectral.hpp"

namespace ffwave {

enum class Side { plus, minus };

inline std::string_view to_string(Side s) { return s == Side::plus ? "plus" : "minus"; }
inline double side_sign(Side s) { return s == Side::plus ? 1.0 : -1.0; }

/// A spectral parameter: either a boundary value mu +- i0 or an off-axis z.
struct BoundaryPoint {
  std::optional<double> energy;
  Side side = Side::plus;
  std::optional<cplx> offaxis;

  static BoundaryPoint on_axis(double mu, Side s) {
    BoundaryPoint p;
    p.energy = mu;
    p.side = s;
    return p;
  }
  static BoundaryPoint off_axis(cplx z) {
    if (z.imag() == 0.0) throw DomainError("off-axis point needs a nonzero imaginary part");
    BoundaryPoint p;
    p.offaxis = z;
    p.side = z.imag() > 0 ? Side::plus : Side::minus;
    return p;
  }
  bool is_boundary() const { return energy.has_value(); }
  double real() const { return energy ? *energy : offaxis->real(); }
  double imag() const { return energy ? 0.0 : offaxis->imag(); }
};

/// How the Cauchy integral against the quadrature is discretized off the axis.
enum class CauchyRule {
  subtracted,  ///< second-order subtraction with analytic integrals (default)
  plain        ///< plain Nystrom weights w_m / (nu_m - z)
};

constexpr int kCauchyStencil = 5;

/// Weights c_m with  int_a^b phi(nu) / (nu - z) dnu ~ sum_m c_m phi(nu_m).
///
/// The subtracted rule removes phi(x) + phi'(x)(nu - x) at x = Re z (both
/// taken from a local Lagrange stencil) and integrates the subtracted
/// terms exactly; on the axis this is the principal value plus the
/// +-i pi delta contribution.
inline Eigen::VectorXcd cauchy_weights(const EnergyGrid& grid, const BoundaryPoint& pt,
                                       CauchyRule rule = CauchyRule::subtracted) {
  const int n = grid.size();
  const double a = grid.a(), b = grid.b();
  const double x = pt.real();
  Eigen::VectorXcd c(n);
  if (pt.is_boundary() && !(x > a && x < b)) throw DomainError("boundary point outside (a, b)");

  if (!pt.is_boundary() && rule == CauchyRule::plain) {
    const cplx z = *pt.offaxis;
    for (int m = 0; m < n; ++m) c(m) = grid.weight(m) / (grid.node(m) - z);
    return c;
  }

  const cplx z = pt.is_boundary() ? cplx(x, 0.0) : *pt.offaxis;
  cplx lg;
  cplx shift_term = 0.0;  // (z - x) Lg, zero on the axis
  if (pt.is_boundary()) {
    lg = cplx(std::log((b - x) / (x - a)), side_sign(pt.side) * std::numbers::pi);
  } else {
    lg = std::log(cplx(b) - z) - std::log(cplx(a) - z);
    shift_term = (z - x) * lg;
  }
  const Stencil st = local_stencil(grid.nodes(), x, kCauchyStencil);

  cplx s0 = 0.0, s1 = 0.0;
  for (int m = 0; m < n; ++m) {
    const double nu = grid.node(m);
    if (nu == x) {
      c(m) = 0.0;
      continue;
    }
    const cplx r = grid.weight(m) / (nu - z);
    c(m) = r;
    s0 += r;
    s1 += r * (nu - x);
  }
  const cplx value_coef = lg - s0;
  const cplx deriv_coef = (b - a) + shift_term - s1;
  for (int k = 0; k < st.width; ++k) {
    c(st.first + k) += st.value[k] * value_coef + st.derivative[k] * deriv_coef;
  }
  return c;
}

/// A(z) = -V R0(z) as a dense matrix on node values (plain coordinates):
/// [A f](lambda_i) = -sum_m c_m v(lambda_i, nu_m) f(nu_m).
inline Eigen::MatrixXcd assemble_A(const KernelTable& table, const BoundaryPoint& pt,
                                   CauchyRule rule = CauchyRule::subtracted) {
  const Eigen::VectorXcd c = cauchy_weights(*table.grid, pt, rule);
  const int d = table.dim;
  Eigen::VectorXcd ce(table.size());
  for (int m = 0; m < table.grid->size(); ++m) ce.segment(static_cast<Eigen::Index>(m) * d, d).setConstant(c(m));
  return -(table.values * ce.asDiagonal());
}

struct BoundaryAssembly {
  Eigen::MatrixXcd A;
  bool near_boundary = false;
  std::string warning;
};

/// A(mu +- i0) with the near-endpoint accuracy flag.
inline BoundaryAssembly assemble_A_boundary(const KernelTable& table, double mu, Side side) {
  BoundaryAssembly out;
  out.A = assemble_A(table, BoundaryPoint::on_axis(mu, side));
  const EnergyGrid& g = *table.grid;
  const double h = g.max_spacing();
  if (mu - g.a() < h || g.b() - mu < h) {
    out.near_boundary = true;
    std::ostringstream os;
    os << "mu = " << mu << " lies within one grid spacing of the interval end";
    out.warning = os.str();
  }
  return out;
}

/// Solves (I + K D) X = B for diagonal D = diag(c (x) I_d), either densely or
/// through the factor form K = F C F^* (Woodbury).
class FredholmSolver {
 public:
  static constexpr double kConditionLimit = 1e8;

  explicit FredholmSolver(const KernelTable& table, double rank_tol = 1e-13) : table_(&table) {
    const Eigen::Index n = table.size();
    if (table.kernel && table.kernel->identically_zero) {
      zero_ = true;
      return;
    }
    if (table.has_factors()) {
      F_ = table.factors;
      C_ = table.coefficients;
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(table.values);
      const Eigen::VectorXd ev = es.eigenvalues();
      const double top = ev.cwiseAbs().maxCoeff();
      std::vector<Eigen::Index> keep;
      for (Eigen::Index k = 0; k < ev.size(); ++k)
        if (std::abs(ev(k)) > rank_tol * top) keep.push_back(k);
      if (top == 0.0) {
        zero_ = true;
        return;
      }
      if (static_cast<Eigen::Index>(keep.size()) * 3 <= n) {
        F_.resize(n, static_cast<Eigen::Index>(keep.size()));
        C_ = Eigen::MatrixXcd::Zero(F_.cols(), F_.cols());
        for (std::size_t k = 0; k < keep.size(); ++k) {
          F_.col(static_cast<Eigen::Index>(k)) = es.eigenvectors().col(keep[k]);
          C_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = ev(keep[k]);
        }
      }
    }
    low_rank_ = F_.size() > 0;
  }

  bool low_rank() const { return low_rank_; }
  Eigen::Index rank() const { return low_rank_ ? F_.cols() : table_->size(); }

  struct Result {
    Eigen::MatrixXcd X;
    double condition = 1.0;  // estimate for the system actually factorized
  };

  /// Expands per-node Cauchy weights to per-component.
  Eigen::VectorXcd expand(const Eigen::VectorXcd& c) const {
    const int d = table_->dim;
    Eigen::VectorXcd ce(table_->size());
    for (Eigen::Index m = 0; m < c.size(); ++m) ce.segment(m * d, d).setConstant(c(m));
    return ce;
  }

  Result solve(const Eigen::VectorXcd& c, const Eigen::MatrixXcd& B, bool check = true) const {
    Result r;
    if (zero_) {
      r.X = B;
      return r;
    }
    const Eigen::VectorXcd ce = expand(c);
    if (low_rank_) {
      // (I + F C F^* D)^{-1} = I - F C (I + F^* D F C)^{-1} F^* D
      const Eigen::MatrixXcd DF = ce.asDiagonal() * F_;
      Eigen::MatrixXcd cap = F_.adjoint() * DF * C_;
      cap.diagonal().array() += 1.0;
      Eigen::PartialPivLU<Eigen::MatrixXcd> lu(cap);
      const double rc = lu.rcond();
      r.condition = rc > 0 ? 1.0 / rc : INFINITY;
      if (check && !(r.condition <= kConditionLimit))
        throw ConditioningError("Fredholm system is near-singular; use solve_projected", r.condition);
      const Eigen::MatrixXcd y = F_.adjoint() * (ce.asDiagonal() * B);
      r.X = B - F_ * (C_ * lu.solve(y));
      return r;
    }
    Eigen::MatrixXcd M = table_->values * ce.asDiagonal();
    M.diagonal().array() += 1.0;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
    const double rc = lu.rcond();
    r.condition = rc > 0 ? 1.0 / rc : INFINITY;
    if (check && !(r.condition <= kConditionLimit))
      throw ConditioningError("Fredholm system is near-singular; use solve_projected", r.condition);
    r.X = lu.solve(B);
    return r;
  }

 private:
  const KernelTable* table_;
  bool zero_ = false;
  bool low_rank_ = false;
  Eigen::MatrixXcd F_, C_;
};

/// Column { t(lambda_i, mu, z) }_i as an (N d) x d matrix.
inline Eigen::MatrixXcd solve_T_column(const KernelTable& table, const FredholmSolver& solver,
                                       const BoundaryPoint& pt, CauchyRule rule = CauchyRule::subtracted) {
  const EnergyGrid& g = *table.grid;
  const int d = table.dim;
  const double mu = pt.real();
  Eigen::MatrixXcd rhs;
  const int j = g.node_index(mu);
  if (j >= 0)
    rhs = table.values.middleCols(static_cast<Eigen::Index>(j) * d, d);
  else
    rhs = kernel_column(*table.kernel, g, mu);
  return solver.solve(cauchy_weights(g, pt, rule), rhs).X;
}

inline Eigen::MatrixXcd solve_T_column(const KernelTable& table, const BoundaryPoint& pt,
                                       CauchyRule rule = CauchyRule::subtracted) {
  FredholmSolver solver(table);
  return solve_T_column(table, solver, pt, rule);
}

/// Tabulated t(lambda_i, mu_j, mu_j + offset) with offset = +-i0 (boundary
/// values) or +- i eps (off-axis columns).
struct TKernel {
  GridPtr grid;
  int dim = 1;
  Side side = Side::plus;
  double epsilon = 0.0;  // 0 for boundary values
  CauchyRule rule = CauchyRule::subtracted;
  Eigen::MatrixXcd blocks;                      // (N d) x (N d)
  std::vector<Eigen::MatrixXcd> diag_derivative;  // d/dlambda t(lambda, mu_j) at lambda = mu_j
  std::vector<std::string> warnings;
  double max_condition = 1.0;

  auto block(int i, int j) const {
    return blocks.block(static_cast<Eigen::Index>(i) * dim, static_cast<Eigen::Index>(j) * dim, dim, dim);
  }
  int size() const { return grid->size(); }
};

struct TKernelOptions {
  unsigned threads = default_thread_count();
  CauchyRule rule = CauchyRule::subtracted;
  double epsilon = 0.0;  // > 0 builds columns at mu_j +- i eps
};

/// Centered finite-difference derivative in lambda of column j at lambda = mu_j.
inline Eigen::MatrixXcd column_derivative_at_node(const EnergyGrid& g, int d, const Eigen::MatrixXcd& column, int j) {
  const Stencil st = local_stencil(g.nodes(), g.node(j), kCauchyStencil);
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(d, d);
  for (int k = 0; k < st.width; ++k) out += st.derivative[k] * column.middleRows(static_cast<Eigen::Index>(st.first + k) * d, d);
  return out;
}

inline TKernel build_T_kernel(const KernelTable& table, Side side, const TKernelOptions& opt = {}) {
  const EnergyGrid& g = *table.grid;
  const int d = table.dim, n = g.size();
  TKernel tk;
  tk.grid = table.grid;
  tk.dim = d;
  tk.side = side;
  tk.epsilon = opt.epsilon;
  tk.rule = opt.rule;
  tk.blocks = Eigen::MatrixXcd::Zero(table.size(), table.size());
  tk.diag_derivative.assign(n, Eigen::MatrixXcd::Zero(d, d));
  FredholmSolver solver(table);
  std::vector<std::string> failures(n);
  std::vector<double> conditions(n, 1.0);

  parallel_for(static_cast<std::size_t>(n), [&](std::size_t jj) {
    const int j = static_cast<int>(jj);
    const double mu = g.node(j);
    const BoundaryPoint pt = opt.epsilon > 0.0
                                 ? BoundaryPoint::off_axis(cplx(mu, side_sign(side) * opt.epsilon))
                                 : BoundaryPoint::on_axis(mu, side);
    try {
      const auto res = solver.solve(cauchy_weights(g, pt, opt.rule),
                                    table.values.middleCols(static_cast<Eigen::Index>(j) * d, d));
      tk.blocks.middleCols(static_cast<Eigen::Index>(j) * d, d) = res.X;
      conditions[j] = res.condition;
    } catch (const ConditioningError& e) {
      std::ostringstream os;
      os << "mu = " << mu << ": " << e.what();
      failures[j] = os.str();
    }
  }, opt.threads);

  std::string agg;
  for (int j = 0; j < n; ++j)
    if (!failures[j].empty()) agg += failures[j] + "\n";
  if (!agg.empty()) throw Error("T-kernel columns failed:\n" + agg);

  for (int j = 0; j < n; ++j) {
    tk.max_condition = std::max(tk.max_condition, conditions[j]);
    tk.diag_derivative[j] = column_derivative_at_node(g, d, tk.blocks.middleCols(static_cast<Eigen::Index>(j) * d, d), j);
  }
  const double h = g.max_spacing();
  for (int j = 0; j < n; ++j) {
    const double mu = g.node(j);
    if (mu - g.a() < h || g.b() - mu < h) {
      std::ostringstream os;
      os << "column mu = " << mu << " lies within one grid spacing of the interval end";
      tk.warnings.push_back(os.str());
    }
  }
  return tk;
}

/// Full kernel of T(z) at one fixed z: (I - A(z))^{-1} V on all columns.
inline Eigen::MatrixXcd solve_T_full(const KernelTable& table, const BoundaryPoint& pt,
                                     CauchyRule rule = CauchyRule::subtracted) {
  FredholmSolver solver(table);
  return solver.solve(cauchy_weights(*table.grid, pt, rule), table.values).X;
}

/// Condition number (2-norm, by SVD) of I - A(z) in symmetrized coordinates.
inline double fredholm_condition(const KernelTable& table, const BoundaryPoint& pt,
                                 CauchyRule rule = CauchyRule::subtracted) {
  const Eigen::VectorXd sw = expanded_weights(*table.grid, table.dim).cwiseSqrt();
  Eigen::MatrixXcd M = -assemble_A(table, pt, rule);
  M.diagonal().array() += 1.0;
  const Eigen::MatrixXcd Ms = sw.asDiagonal() * M * sw.cwiseInverse().asDiagonal();
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(Ms);
  const auto& s = svd.singularValues();
  return s(s.size() - 1) > 0 ? s(0) / s(s.size() - 1) : INFINITY;
}

struct ProjectedSolution {
  Eigen::VectorXcd solution;  // plain coordinates, in the range of P
  double condition = 1.0;     // of the restricted operator
};

/// Solves P (I - A(z)) P x = rhs on the range of P, where P removes the
/// weighted span of `eigenvectors`.
inline ProjectedSolution solve_projected(const KernelTable& table, const BoundaryPoint& pt,
                                         const std::vector<Eigen::VectorXcd>& eigenvectors,
                                         const Eigen::VectorXcd& rhs, CauchyRule rule = CauchyRule::subtracted) {
  const EnergyGrid& g = *table.grid;
  const int d = table.dim;
  const Eigen::Index n = table.size();
  if (rhs.size() != n) throw ShapeError("solve_projected: rhs length mismatch");
  const Eigen::VectorXd sw = expanded_weights(g, d).cwiseSqrt();

  const Eigen::Index k = static_cast<Eigen::Index>(eigenvectors.size());
  Eigen::MatrixXcd Q;
  if (k == 0) {
    Q = Eigen::MatrixXcd::Identity(n, n);
  } else {
    Eigen::MatrixXcd U(n, k);
    for (Eigen::Index c = 0; c < k; ++c) U.col(c) = sw.asDiagonal() * eigenvectors[c];
    const Eigen::MatrixXcd full = Eigen::HouseholderQR<Eigen::MatrixXcd>(U).householderQ();
    Q = full.rightCols(n - k);
  }
  const Eigen::VectorXcd rs = sw.asDiagonal() * rhs;
  const Eigen::VectorXcd in_range = Q * (Q.adjoint() * rs);
  if ((rs - in_range).norm() > 1e-8 * rs.norm())
    throw PreconditionError("solve_projected: right-hand side is not in the range of P");

  Eigen::MatrixXcd M = -assemble_A(table, pt, rule);
  M.diagonal().array() += 1.0;
  const Eigen::MatrixXcd Ms = sw.asDiagonal() * M * sw.cwiseInverse().asDiagonal();
  const Eigen::MatrixXcd R = Q.adjoint() * Ms * Q;
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(R, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  ProjectedSolution out;
  out.condition = s(s.size() - 1) > 0 ? s(0) / s(s.size() - 1) : INFINITY;
  const Eigen::VectorXcd y = svd.solve(Q.adjoint() * rs);
  out.solution = sw.cwiseInverse().asDiagonal() * (Q * y);
  return out;
}

}  // namespace ffwave
