#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ffwave/fredholm.hpp"
#include "ffwave/potential.hpp"
#include "ffwave/spectral.hpp"

namespace ffwave {

/// PV int_a^b phi(nu) / (nu - mu) dnu by adaptive Gauss-Kronrod on the
/// subtracted integrand plus phi(mu) ln((b - mu) / (mu - a)).
inline double pv_integral(const std::function<double(double)>& phi, double a, double b, double mu,
                          double tol = 1e-12, unsigned depth = 12) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double pm = phi(mu);
  auto f = [&](double nu) {
    const double h = nu - mu;
    return h == 0.0 ? 0.0 : (phi(nu) - pm) / h;
  };
  return GK::integrate(f, a, mu, depth, tol) + GK::integrate(f, mu, b, depth, tol) + pm * std::log((b - mu) / (mu - a));
}

/// int |g|^2 / (nu - mu - i0) = PV + i pi |g(mu)|^2 for a scalar profile.
inline cplx boundary_integral(const Profile& g, double mu, double tol = 1e-12) {
  auto g2 = [&](double nu) {
    const double v = std::abs(g.scalar(nu).first);
    return v * v;
  };
  return {pv_integral(g2, g.a, g.b, mu, tol), std::numbers::pi * g2(mu)};
}

/// Closed-form boundary value for v = c g(lambda) g(mu)-bar at d = 1:
/// t(lambda, mu, mu + i0) = c g(lambda) g(mu)-bar / (1 + c I(mu + i0)).
inline cplx rank_one_t(const Profile& g, double c, double lambda, double mu, cplx I_mu) {
  return c * g.scalar(lambda).first * std::conj(cplx(g.scalar(mu).first)) / (1.0 + c * I_mu);
}

/// t(lambda_i, mu_j, mu_j + i eps) through the discrete resolvent of H:
/// V - V R(mu_j + i eps) V with R = (H - z)^{-1} assembled densely.
inline Eigen::MatrixXcd direct_T_offaxis(const KernelTable& table, double epsilon) {
  const EnergyGrid& g = *table.grid;
  const int d = table.dim, n = g.size();
  const DenseOperator H = assemble_H(table, Weighting::plain);
  const Eigen::VectorXd w = expanded_weights(g, d);
  const Eigen::MatrixXcd KW = table.values * w.asDiagonal();
  Eigen::MatrixXcd out(table.size(), table.size());
  for (int j = 0; j < n; ++j) {
    const DenseOperator R = resolvent_direct(H, cplx(g.node(j), epsilon));
    const auto cols = table.values.middleCols(static_cast<Eigen::Index>(j) * d, d);
    out.middleCols(static_cast<Eigen::Index>(j) * d, d) = cols - KW * (R.entries * cols);
  }
  return out;
}

/// Same quantity through the Fredholm path (1 - A)^{-1} V at mu_j + i eps.
inline Eigen::MatrixXcd fredholm_T_offaxis(const KernelTable& table, double epsilon,
                                           CauchyRule rule = CauchyRule::plain) {
  const EnergyGrid& g = *table.grid;
  const int d = table.dim, n = g.size();
  FredholmSolver solver(table);
  Eigen::MatrixXcd out(table.size(), table.size());
  for (int j = 0; j < n; ++j)
    out.middleCols(static_cast<Eigen::Index>(j) * d, d) =
        solve_T_column(table, solver, BoundaryPoint::off_axis(cplx(g.node(j), epsilon)), rule);
  return out;
}

}  // namespace ffwave
