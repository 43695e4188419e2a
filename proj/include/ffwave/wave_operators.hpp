#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "ffwave/energy_grid.hpp"
#include "ffwave/fredholm.hpp"
#include "ffwave/scattering.hpp"
#include "ffwave/spectral.hpp"

namespace ffwave {

/// Kronecker expansion of a scalar N x N matrix to (N d) x (N d).
inline Eigen::MatrixXcd expand_scalar_operator(const Eigen::MatrixXcd& m, int d) {
  if (d == 1) return m;
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(m.rows() * d, m.cols() * d);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (m(i, j) != cplx(0.0))
        for (int c = 0; c < d; ++c) out(i * d + c, j * d + c) = m(i, j);
  return out;
}

/// Weighted adjoint W^{-1} M^* W of a plain-coordinate matrix.
inline Eigen::MatrixXcd weighted_adjoint(const Eigen::MatrixXcd& m, const EnergyGrid& grid, int d) {
  const Eigen::VectorXd w = expanded_weights(grid, d);
  return w.cwiseInverse().asDiagonal() * m.adjoint() * w.asDiagonal();
}

/// Stationary W_-:
///   [(W_- - 1) f](lambda_i) = int t(lambda_i, mu, mu + i0) f(mu) / (mu - (lambda_i - i0)) dmu
/// with the subtracted Cauchy rule. The derivative of mu -> t(lambda_i, mu) f(mu)
/// at mu = lambda_i is taken as d/dmu [t(mu, mu) f(mu)] - (d/dlambda t)(lambda_i, lambda_i) f(lambda_i).
inline DenseOperator assemble_Wminus_stationary(const TKernel& tk) {
  if (tk.side != Side::plus || tk.epsilon != 0.0) throw PreconditionError("W_- needs the plus-side boundary T-kernel");
  const EnergyGrid& g = *tk.grid;
  const int n = g.size(), d = tk.dim;
  const Eigen::Index nd = static_cast<Eigen::Index>(n) * d;
  DenseOperator W{tk.grid, d, Weighting::plain, Eigen::MatrixXcd::Identity(nd, nd)};
  for (int i = 0; i < n; ++i) {
    const double x = g.node(i);
    const Stencil st = local_stencil(g.nodes(), x, kCauchyStencil);
    // Value part: principal value and delta term with the exact derivative weight removed.
    Eigen::VectorXcd c = cauchy_weights(g, BoundaryPoint::on_axis(x, Side::minus));
    const double wi = g.weight(i);
    for (int k = 0; k < st.width; ++k) c(st.first + k) -= wi * st.derivative[k];
    const auto ri = static_cast<Eigen::Index>(i) * d;
    for (int m = 0; m < n; ++m) {
      const auto cm = static_cast<Eigen::Index>(m) * d;
      W.entries.block(ri, cm, d, d) += c(m) * tk.block(i, m);
    }
    for (int k = 0; k < st.width; ++k) {
      const int m = st.first + k;
      const auto cm = static_cast<Eigen::Index>(m) * d;
      W.entries.block(ri, cm, d, d) += wi * st.derivative[k] * tk.block(m, m);
    }
    W.entries.block(ri, ri, d, d) -= wi * tk.diag_derivative[i];
  }
  return W;
}

struct RegularizationSchedule {
  std::vector<double> epsilons;
  std::vector<double> taus;

  void validate() const {
    if (epsilons.empty() || epsilons.size() != taus.size())
      throw ConfigError("regularization schedule needs matching non-empty epsilon and tau lists");
    for (std::size_t k = 0; k < epsilons.size(); ++k) {
      if (!(epsilons[k] > 0.0) || !(taus[k] > 0.0)) throw ConfigError("regularization parameters must be positive");
      if (k > 0 && !(epsilons[k] < epsilons[k - 1] && taus[k] < taus[k - 1]))
        throw ConfigError("regularization schedule must be strictly descending");
    }
  }
  static RegularizationSchedule shared(std::vector<double> values) { return {values, values}; }
};

/// 1 - T_-(eps, tau) for each schedule entry, with
///   [T_-(eps, tau) f](lambda) = int t(lambda, mu, mu + i eps) f(mu) / (lambda - mu - i tau) dmu.
inline std::vector<DenseOperator> regularized_Wminus(const KernelTable& table, const RegularizationSchedule& sched,
                                                     unsigned threads = default_thread_count()) {
  sched.validate();
  for (std::size_t k = 0; k < sched.epsilons.size(); ++k)
    if (sched.epsilons[k] < 1e-3 || sched.taus[k] < 1e-3)
      throw PreconditionError("regularized_Wminus: epsilon and tau must be at least 1e-3");
  const EnergyGrid& g = *table.grid;
  const int n = g.size(), d = table.dim;
  const Eigen::Index nd = table.size();
  std::vector<DenseOperator> out;
  for (std::size_t k = 0; k < sched.epsilons.size(); ++k) {
    TKernelOptions opt;
    opt.epsilon = sched.epsilons[k];
    opt.threads = threads;
    const TKernel tk = build_T_kernel(table, Side::plus, opt);
    DenseOperator W{table.grid, d, Weighting::plain, Eigen::MatrixXcd::Identity(nd, nd)};
    for (int i = 0; i < n; ++i) {
      // 1/(lambda - mu - i tau) = -1/(mu - (lambda - i tau))
      const Eigen::VectorXcd c = cauchy_weights(g, BoundaryPoint::off_axis(cplx(g.node(i), -sched.taus[k])));
      const auto ri = static_cast<Eigen::Index>(i) * d;
      for (int m = 0; m < n; ++m)
        W.entries.block(ri, static_cast<Eigen::Index>(m) * d, d, d) += c(m) * tk.block(i, m);
    }
    out.push_back(std::move(W));
  }
  return out;
}

/// Polynomial extrapolation to zero regularization through the last
/// `order + 1` members (order 1 is linear Richardson).
inline Eigen::VectorXcd richardson_limit(const std::vector<Eigen::VectorXcd>& values, const std::vector<double>& params,
                                         int order = 2) {
  const int n = static_cast<int>(values.size());
  if (n == 0 || params.size() != values.size()) throw ShapeError("richardson_limit: mismatched inputs");
  const int m = std::min(order + 1, n);
  const int first = n - m;
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(values.back().size());
  for (int k = first; k < n; ++k) {
    double l = 1.0;
    for (int r = first; r < n; ++r)
      if (r != k) l *= params[r] / (params[r] - params[k]);
    out += l * values[k];
  }
  return out;
}

struct KOperator {
  DenseOperator K;           // plain coordinates
  double hs_norm = 0.0;      // sqrt(sum w_i w_j |k(lambda_i, mu_j)|_F^2)
  std::vector<double> singular_values;  // descending, symmetrized coordinates
};

/// K with off-diagonal blocks -w_j [t(lambda_i, mu_j) - t(mu_j, mu_j)] / (lambda_i - mu_j)
/// and diagonal blocks -w_i d/dlambda t(lambda, lambda_i) at lambda = lambda_i.
inline KOperator assemble_K(const TKernel& tk) {
  const EnergyGrid& g = *tk.grid;
  const int n = g.size(), d = tk.dim;
  const Eigen::Index nd = static_cast<Eigen::Index>(n) * d;
  KOperator out;
  out.K = DenseOperator{tk.grid, d, Weighting::plain, Eigen::MatrixXcd::Zero(nd, nd)};
  for (int j = 0; j < n; ++j) {
    const double wj = g.weight(j), mu = g.node(j);
    const auto cj = static_cast<Eigen::Index>(j) * d;
    for (int i = 0; i < n; ++i) {
      const auto ri = static_cast<Eigen::Index>(i) * d;
      if (i == j)
        out.K.entries.block(ri, cj, d, d) = -wj * tk.diag_derivative[j];
      else
        out.K.entries.block(ri, cj, d, d) = -wj * (tk.block(i, j) - tk.block(j, j)) / (g.node(i) - mu);
    }
  }
  const Eigen::MatrixXcd Ks = to_weighting(out.K, Weighting::symmetrized).entries;
  out.hs_norm = Ks.norm();
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(Ks);
  for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k) out.singular_values.push_back(svd.singularValues()(k));
  return out;
}

/// [T f](lambda) = (1/2 pi i) int f(mu) / (lambda - mu - i0) dmu, i.e. the
/// principal value over 2 pi i plus f/2.
inline DenseOperator cauchy_T(const GridPtr& grid, int d = 1) {
  const int n = grid->size();
  Eigen::MatrixXcd T(n, n);
  const cplx factor = -1.0 / cplx(0.0, 2.0 * std::numbers::pi);
  for (int i = 0; i < n; ++i)
    T.row(i) = factor * cauchy_weights(*grid, BoundaryPoint::on_axis(grid->node(i), Side::minus)).transpose();
  return DenseOperator{grid, d, Weighting::plain, expand_scalar_operator(T, d)};
}

/// tanh(pi D / 2) with D = -i d/dx on the line grid. The multiplier route
/// uses the DFT on a zero-padded copy of the grid (padding 1 is the purely
/// periodic grid with frequencies pi k / L).
class TanhMultiplier {
 public:
  explicit TanhMultiplier(LinePtr line, int padding = 4) : line_(std::move(line)), padding_(padding) {
    if (padding < 1) throw ConfigError("tanh multiplier padding must be at least 1");
    const int M = line_->size() * padding_;
    const double h = line_->spacing();
    symbol_.resize(M);
    for (int k = 0; k < M; ++k) {
      const int kk = k <= M / 2 ? k : k - M;
      const double xi = 2.0 * std::numbers::pi * kk / (M * h);
      symbol_[k] = (padding_ == 1 && k == M / 2) ? 0.0 : std::tanh(0.5 * std::numbers::pi * xi);
    }
  }

  const LineGrid& line() const { return *line_; }
  int padding() const { return padding_; }

  /// Fourier-multiplier application to a scalar line vector.
  Eigen::VectorXcd apply_scalar(const Eigen::VectorXcd& phi) const {
    const int nx = line_->size(), M = nx * padding_, off = (M - nx) / 2;
    std::vector<cplx> buf(M, 0.0), spec;
    for (int k = 0; k < nx; ++k) buf[off + k] = phi(k);
    Eigen::FFT<double> fft;
    fft.fwd(spec, buf);
    for (int k = 0; k < M; ++k) spec[k] *= symbol_[k];
    fft.inv(buf, spec);
    Eigen::VectorXcd out(nx);
    for (int k = 0; k < nx; ++k) out(k) = buf[off + k];
    return out;
  }

  /// Principal-value convolution (i/pi) PV int phi(y) / sinh(x - y) dy by the
  /// alternating-point rule (only odd index offsets contribute, weight 2h).
  Eigen::VectorXcd convolve_scalar(const Eigen::VectorXcd& phi) const {
    const int nx = line_->size();
    const double h = line_->spacing();
    const cplx pref(0.0, 2.0 * h / std::numbers::pi);
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(nx);
    for (int i = 0; i < nx; ++i) {
      cplx s = 0.0;
      for (int j = (i % 2 == 0 ? 1 : 0); j < nx; j += 2) s += phi(j) / std::sinh(h * (i - j));
      out(i) = pref * s;
    }
    return out;
  }

  Eigen::VectorXcd apply(const Eigen::VectorXcd& phi, int d = 1) const { return componentwise(phi, d, false); }
  Eigen::VectorXcd convolve(const Eigen::VectorXcd& phi, int d = 1) const { return componentwise(phi, d, true); }

  /// Dense matrix of the multiplier route (scalar).
  Eigen::MatrixXcd dense() const {
    const int nx = line_->size();
    Eigen::MatrixXcd m(nx, nx);
    for (int k = 0; k < nx; ++k) m.col(k) = apply_scalar(Eigen::VectorXcd::Unit(nx, k));
    return m;
  }

 private:
  Eigen::VectorXcd componentwise(const Eigen::VectorXcd& phi, int d, bool conv) const {
    const int nx = line_->size();
    if (phi.size() != static_cast<Eigen::Index>(nx) * d) throw ShapeError("tanh multiplier: length mismatch");
    Eigen::VectorXcd out(phi.size());
    Eigen::VectorXcd comp(nx);
    for (int c = 0; c < d; ++c) {
      for (int k = 0; k < nx; ++k) comp(k) = phi(static_cast<Eigen::Index>(k) * d + c);
      const Eigen::VectorXcd r = conv ? convolve_scalar(comp) : apply_scalar(comp);
      for (int k = 0; k < nx; ++k) out(static_cast<Eigen::Index>(k) * d + c) = r(k);
    }
    return out;
  }

  LinePtr line_;
  int padding_;
  std::vector<double> symbol_;
};

/// Smooth bumps exp(-((lambda - c)/sigma)^2), cut at 4.5 sigma, with centres
/// keeping the support a margin away from a, b and the excluded energies.
struct TestPanel {
  std::vector<double> centres;
  double sigma = 0.0;
  double cutoff = 4.5;
  std::vector<Eigen::VectorXcd> functions;  // node-major, plain values
};

struct PanelSettings {
  int count = 5;
  double sigma_fraction = 0.04;
  double margin_fraction = 0.05;
  double cutoff = 4.5;
};

inline TestPanel build_test_panel(const GridPtr& grid, int d, const std::vector<double>& excluded,
                                  const PanelSettings& ps = {}) {
  const EnergyGrid& g = *grid;
  const double len = g.length();
  TestPanel panel;
  panel.sigma = ps.sigma_fraction * len;
  panel.cutoff = ps.cutoff;
  const double reach = ps.cutoff * panel.sigma + ps.margin_fraction * len;
  std::vector<double> allowed;
  constexpr int kCandidates = 2000;
  for (int k = 0; k <= kCandidates; ++k) {
    const double c = g.a() + reach + (len - 2.0 * reach) * k / kCandidates;
    bool ok = true;
    for (double e : excluded)
      if (std::abs(c - e) < reach) ok = false;
    if (ok) allowed.push_back(c);
  }
  if (static_cast<int>(allowed.size()) < ps.count) throw ConfigError("no room for the test panel away from excluded energies");
  for (int k = 0; k < ps.count; ++k) {
    const std::size_t idx = ps.count == 1 ? allowed.size() / 2 : k * (allowed.size() - 1) / (ps.count - 1);
    panel.centres.push_back(allowed[idx]);
  }
  for (int k = 0; k < ps.count; ++k) {
    Eigen::VectorXcd f = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(g.size()) * d);
    const double c = panel.centres[k];
    for (int i = 0; i < g.size(); ++i) {
      const double u = (g.node(i) - c) / panel.sigma;
      if (std::abs(u) <= ps.cutoff) f(static_cast<Eigen::Index>(i) * d + (k % d)) = std::exp(-u * u);
    }
    panel.functions.push_back(std::move(f));
  }
  return panel;
}

/// U applied to a node-major energy vector.
inline Eigen::VectorXcd U_vector(const GridPtr& grid, int d, const Eigen::VectorXcd& f, const LinePtr& line) {
  return apply_U(EnergyFunction(grid, d, f), line).values;
}

struct FormulaCheck {
  double residual = 0.0;               // max over the panel of |lhs - rhs| / |U f|
  std::vector<double> per_function;
};

/// Compares U (W_- - 1) f with (1/2)(1 - tanh(pi D/2)) (S~ - 1) U f + U K f
/// on the panel.
inline FormulaCheck verify_main_formula(const DenseOperator& Wminus, const LineMultiplier& S_tilde, const KOperator& K,
                                       const TanhMultiplier& tanh_op, const TestPanel& panel) {
  const GridPtr& grid = Wminus.grid;
  const int d = Wminus.dim;
  const LinePtr line = S_tilde.line;
  FormulaCheck fc;
  for (const auto& f : panel.functions) {
    const Eigen::VectorXcd Wf = Wminus.entries * f - f;
    const Eigen::VectorXcd lhs = U_vector(grid, d, Wf, line);
    const Eigen::VectorXcd phi = U_vector(grid, d, f, line);
    const Eigen::VectorXcd q = S_tilde.apply(phi) - phi;
    const Eigen::VectorXcd rhs = 0.5 * (q - tanh_op.apply(q, d)) + U_vector(grid, d, K.K.entries * f, line);
    const double r = line_norm(*line, lhs - rhs) / line_norm(*line, phi);
    fc.per_function.push_back(r);
    fc.residual = std::max(fc.residual, r);
  }
  return fc;
}

/// U (W_+ - 1) f against (1/2)(1 + tanh(pi D/2)) (S~^* - 1) U f + U K S^* f.
inline FormulaCheck verify_corollary(const DenseOperator& Wplus, const ScatteringData& sd, const LineMultiplier& S_tilde,
                                     const KOperator& K, const TanhMultiplier& tanh_op, const TestPanel& panel) {
  const GridPtr& grid = Wplus.grid;
  const int d = Wplus.dim;
  const LinePtr line = S_tilde.line;
  const LineMultiplier Sadj = S_tilde.adjoint();
  const Eigen::MatrixXcd Sstar = s_multiplication(sd, true);
  FormulaCheck fc;
  for (const auto& f : panel.functions) {
    const Eigen::VectorXcd lhs = U_vector(grid, d, Wplus.entries * f - f, line);
    const Eigen::VectorXcd phi = U_vector(grid, d, f, line);
    const Eigen::VectorXcd q = Sadj.apply(phi) - phi;
    const Eigen::VectorXcd rhs = 0.5 * (q + tanh_op.apply(q, d)) + U_vector(grid, d, K.K.entries * (Sstar * f), line);
    const double r = line_norm(*line, lhs - rhs) / line_norm(*line, phi);
    fc.per_function.push_back(r);
    fc.residual = std::max(fc.residual, r);
  }
  return fc;
}

/// max over the panel of |(U T U^{-1} - (1/2)(1 - tanh)) U f| / |U f|, with U T U^{-1} U f = U T f.
inline double cauchy_conjugation_residual(const DenseOperator& T, const TanhMultiplier& tanh_op, const TestPanel& panel,
                                          const LinePtr& line) {
  double worst = 0.0;
  for (const auto& f : panel.functions) {
    const Eigen::VectorXcd lhs = U_vector(T.grid, T.dim, T.entries * f, line);
    const Eigen::VectorXcd phi = U_vector(T.grid, T.dim, f, line);
    const Eigen::VectorXcd rhs = 0.5 * (phi - tanh_op.apply(phi, T.dim));
    worst = std::max(worst, line_norm(*line, lhs - rhs) / line_norm(*line, phi));
  }
  return worst;
}

/// max over the panel of max|multiplier - convolution| / max|U f|.
inline double tanh_cross_check(const TanhMultiplier& tanh_op, const GridPtr& grid, int d, const TestPanel& panel) {
  double worst = 0.0;
  const LinePtr line = std::make_shared<const LineGrid>(tanh_op.line());
  for (const auto& f : panel.functions) {
    const Eigen::VectorXcd phi = U_vector(grid, d, f, line);
    const double diff = (tanh_op.apply(phi, d) - tanh_op.convolve(phi, d)).cwiseAbs().maxCoeff();
    worst = std::max(worst, diff / phi.cwiseAbs().maxCoeff());
  }
  return worst;
}

/// W_+ = W_- S^*.
inline DenseOperator assemble_Wplus(const DenseOperator& Wminus, const ScatteringData& sd) {
  return DenseOperator{Wminus.grid, Wminus.dim, Weighting::plain, Wminus.entries * s_multiplication(sd, true)};
}

struct IdentityChecks {
  double isometry = 0.0;      // max | |W_- f| / |f| - 1 |
  double intertwining = 0.0;  // max |(H W_- - W_- H0) f| / |f|
  double s_identity = 0.0;    // max |(W_+^* W_- - S) f| / |f|
};

inline IdentityChecks check_wave_identities(const DenseOperator& Wminus, const DenseOperator& Wplus,
                                            const DenseOperator& H, const ScatteringData& sd, const TestPanel& panel) {
  const EnergyGrid& g = *Wminus.grid;
  const int d = Wminus.dim;
  const Eigen::VectorXd x = expanded_nodes(g, d);
  const Eigen::MatrixXcd WpAdj = weighted_adjoint(Wplus.entries, g, d);
  const Eigen::MatrixXcd S = s_multiplication(sd);
  IdentityChecks ic;
  for (const auto& f : panel.functions) {
    const double nf = weighted_norm(g, d, f);
    const Eigen::VectorXcd Wf = Wminus.entries * f;
    ic.isometry = std::max(ic.isometry, std::abs(weighted_norm(g, d, Wf) / nf - 1.0));
    const Eigen::VectorXcd xf = x.cwiseProduct(f);
    ic.intertwining = std::max(ic.intertwining, weighted_norm(g, d, H.entries * Wf - Wminus.entries * xf) / nf);
    ic.s_identity = std::max(ic.s_identity, weighted_norm(g, d, WpAdj * Wf - S * f) / nf);
  }
  return ic;
}

struct CompletenessReport {
  double isometry_defect = 0.0;   // max |(W_-^* W_- - 1) f| / |f|
  double range_defect = 0.0;      // max |(W_- W_-^* - (1 - P_p)) f| / |f|
  double plus_isometry_defect = 0.0;
  int eigenprojections = 0;
  Eigen::VectorXcd defect_top_vector;  // top singular vector of 1 - W_- W_-^* (plain coordinates)
  double defect_top_value = 0.0;
};

/// Isometry and range checks; P_p projects onto the certified discrete and
/// embedded eigenvectors.
inline CompletenessReport verify_completeness(const DenseOperator& Wminus, const DenseOperator& Wplus,
                                              const SpectralData& spec, const TestPanel& panel) {
  const EnergyGrid& g = *Wminus.grid;
  const int d = Wminus.dim;
  const Eigen::Index n = Wminus.size();
  const Eigen::VectorXd w = expanded_weights(g, d);
  const Eigen::MatrixXcd Wadj = weighted_adjoint(Wminus.entries, g, d);
  const Eigen::MatrixXcd WpAdj = weighted_adjoint(Wplus.entries, g, d);
  Eigen::MatrixXcd Pp = Eigen::MatrixXcd::Zero(n, n);
  std::vector<int> idx = spec.discrete_set();
  idx.insert(idx.end(), spec.embedded_set.begin(), spec.embedded_set.end());
  for (int k : idx) {
    const Eigen::VectorXcd f = spec.eigenvectors.col(k);
    Pp += f * (w.asDiagonal() * f).adjoint();
  }
  CompletenessReport r;
  r.eigenprojections = static_cast<int>(idx.size());
  const Eigen::MatrixXcd range_gap = Wminus.entries * Wadj - (Eigen::MatrixXcd::Identity(n, n) - Pp);
  for (const auto& f : panel.functions) {
    const double nf = weighted_norm(g, d, f);
    r.isometry_defect = std::max(r.isometry_defect, weighted_norm(g, d, Wadj * (Wminus.entries * f) - f) / nf);
    r.plus_isometry_defect = std::max(r.plus_isometry_defect, weighted_norm(g, d, WpAdj * (Wplus.entries * f) - f) / nf);
    r.range_defect = std::max(r.range_defect, weighted_norm(g, d, range_gap * f) / nf);
  }
  // Top singular vector of the defect 1 - W_- W_-^* in symmetrized coordinates.
  const Eigen::VectorXd sw = w.cwiseSqrt();
  Eigen::MatrixXcd defect = Eigen::MatrixXcd::Identity(n, n) - Wminus.entries * Wadj;
  defect = sw.asDiagonal() * defect * sw.cwiseInverse().asDiagonal();
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(defect, Eigen::ComputeThinU);
  r.defect_top_value = svd.singularValues()(0);
  r.defect_top_vector = sw.cwiseInverse().asDiagonal() * svd.matrixU().col(0);
  return r;
}

/// |<u, v>_w| / (|u|_w |v|_w).
inline double weighted_overlap(const EnergyGrid& g, int d, const Eigen::VectorXcd& u, const Eigen::VectorXcd& v) {
  return std::abs(weighted_inner(g, d, u, v)) / (weighted_norm(g, d, u) * weighted_norm(g, d, v));
}

struct DecompositionIdentity {
  double max_entry_error = 0.0;  // |W_- - 1 - T (S - 1) - K|_max
};

/// Discrete check of W_- - 1 = T (S - 1) + K.
inline DecompositionIdentity check_discrete_decomposition(const DenseOperator& Wminus, const DenseOperator& T,
                                                          const ScatteringData& sd, const KOperator& K) {
  const Eigen::Index n = Wminus.size();
  const Eigen::MatrixXcd S = s_multiplication(sd);
  const Eigen::MatrixXcd lhs = Wminus.entries - Eigen::MatrixXcd::Identity(n, n);
  const Eigen::MatrixXcd rhs = T.entries * (S - Eigen::MatrixXcd::Identity(n, n)) + K.K.entries;
  return {(lhs - rhs).cwiseAbs().maxCoeff()};
}

/// Everything needed for the operator checks at one resolution.
struct WaveOperatorBundle {
  DenseOperator Wminus, Wplus, Ttilde;
  KOperator K;
  double hs_norm_K = 0.0;
  std::vector<double> singular_values_K;
  double decomposition_residual = 0.0;
};

}  // namespace ffwave
