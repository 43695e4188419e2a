#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "ffwave/energy_grid.hpp"
#include "ffwave/fredholm.hpp"
#include "ffwave/interpolation.hpp"

namespace ffwave {

struct ScatteringData {
  GridPtr grid;
  int dim = 1;
  std::vector<Eigen::MatrixXcd> matrices;
  std::vector<double> unitarity_defects;
  std::vector<double> continuity_moduli;  // |s(lambda_{i+1}) - s(lambda_i)|

  int size() const { return static_cast<int>(matrices.size()); }
};

inline double unitarity_defect(const Eigen::MatrixXcd& s) {
  return (s * s.adjoint() - Eigen::MatrixXcd::Identity(s.rows(), s.cols())).norm();
}

inline void fill_diagnostics(ScatteringData& sd) {
  const int n = sd.size();
  sd.unitarity_defects.resize(n);
  for (int i = 0; i < n; ++i) sd.unitarity_defects[i] = unitarity_defect(sd.matrices[i]);
  sd.continuity_moduli.resize(std::max(0, n - 1));
  for (int i = 0; i + 1 < n; ++i) sd.continuity_moduli[i] = (sd.matrices[i + 1] - sd.matrices[i]).norm();
}

/// s(lambda) = I - 2 pi i t(lambda, lambda, lambda + i0).
inline ScatteringData scattering_matrix(const TKernel& tk) {
  if (tk.side != Side::plus || tk.epsilon != 0.0)
    throw PreconditionError("scattering_matrix needs the boundary T-kernel on the plus side");
  ScatteringData sd;
  sd.grid = tk.grid;
  sd.dim = tk.dim;
  const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(tk.dim, tk.dim);
  const cplx two_pi_i(0.0, 2.0 * std::numbers::pi);
  for (int i = 0; i < tk.size(); ++i) sd.matrices.push_back(I - two_pi_i * tk.block(i, i));
  fill_diagnostics(sd);
  return sd;
}

/// I + 2 pi i t(lambda, lambda, lambda - i0), which equals s(lambda)^* because
/// t(lambda, lambda, z-bar) = t(lambda, lambda, z)^*.
inline std::vector<Eigen::MatrixXcd> minus_side_adjoints(const TKernel& tk) {
  if (tk.side != Side::minus || tk.epsilon != 0.0) throw PreconditionError("expected the minus-side boundary T-kernel");
  const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(tk.dim, tk.dim);
  const cplx two_pi_i(0.0, 2.0 * std::numbers::pi);
  std::vector<Eigen::MatrixXcd> out;
  for (int i = 0; i < tk.size(); ++i) out.push_back(I + two_pi_i * tk.block(i, i));
  return out;
}

struct UnitarityReport {
  double max_defect = 0.0;
  int argmax = -1;
  double max_inverse_defect = 0.0;  // |s^{-1} - s^*|
  std::vector<double> singular_values_s_minus_1;  // at the argmax node
};

inline UnitarityReport check_unitarity(const ScatteringData& sd) {
  UnitarityReport r;
  for (int i = 0; i < sd.size(); ++i) {
    const double dft = unitarity_defect(sd.matrices[i]);
    if (dft > r.max_defect || r.argmax < 0) {
      r.max_defect = dft;
      r.argmax = i;
    }
    const Eigen::MatrixXcd inv = sd.matrices[i].fullPivLu().inverse();
    r.max_inverse_defect = std::max(r.max_inverse_defect, (inv - sd.matrices[i].adjoint()).norm());
  }
  if (r.argmax >= 0) {
    const Eigen::MatrixXcd m = sd.matrices[r.argmax] - Eigen::MatrixXcd::Identity(sd.dim, sd.dim);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k) r.singular_values_s_minus_1.push_back(svd.singularValues()(k));
  }
  return r;
}

/// max_i |(I + 2 pi i t(lambda_i, lambda_i, lambda_i - i0)) - s(lambda_i)^*|.
inline double side_consistency(const ScatteringData& plus, const TKernel& minus) {
  const auto sm = minus_side_adjoints(minus);
  double worst = 0.0;
  for (int i = 0; i < plus.size(); ++i) worst = std::max(worst, (sm[i] - plus.matrices[i].adjoint()).norm());
  return worst;
}

struct ContinuityFit {
  double exponent = 1.0;
  double constant = 0.0;
  double max_modulus = 0.0;  // stride-1 modulus in the window
  bool flat = false;         // s constant in the window
  int points = 0;
};

/// Hölder fit of the moduli of continuity on nodes in [lo, hi] using strides
/// 1 to 4: omega(k) = max |s_{i+k} - s_i|, paired with the gap of the maximizing pair.
inline ContinuityFit fit_continuity(const ScatteringData& sd, double lo, double hi) {
  const EnergyGrid& g = *sd.grid;
  ContinuityFit fit;
  std::vector<double> gaps, omegas;
  for (int stride : {1, 2, 3, 4}) {
    double om = 0.0, gap = 0.0;
    int used = 0;
    for (int i = 0; i + stride < sd.size(); ++i) {
      if (g.node(i) < lo || g.node(i + stride) > hi) continue;
      const double v = (sd.matrices[i + stride] - sd.matrices[i]).norm();
      if (v > om) {
        om = v;
        gap = g.node(i + stride) - g.node(i);
      }
      ++used;
    }
    if (used == 0) continue;
    if (stride == 1) fit.max_modulus = om;
    if (om > 0.0) {
      gaps.push_back(gap);
      omegas.push_back(om);
    }
  }
  fit.points = static_cast<int>(gaps.size());
  if (gaps.size() < 2) {
    fit.flat = true;
    return fit;
  }
  auto [slope, res] = loglog_fit(gaps, omegas);
  (void)res;
  fit.exponent = slope;
  fit.constant = omegas.front() / std::pow(gaps.front(), slope);
  return fit;
}

struct ContinuityReport {
  ContinuityFit global;
  std::vector<double> centres;
  std::vector<ContinuityFit> local;  // one per embedded eigenvalue
  double window = 0.0;
};

inline ContinuityReport check_continuity(const ScatteringData& sd, const std::vector<double>& embedded,
                                         double window_fraction = 0.05) {
  const EnergyGrid& g = *sd.grid;
  ContinuityReport r;
  r.window = window_fraction * g.length();
  r.global = fit_continuity(sd, g.a(), g.b());
  for (double c : embedded) {
    r.centres.push_back(c);
    r.local.push_back(fit_continuity(sd, c - 0.5 * r.window, c + 0.5 * r.window));
  }
  return r;
}

/// Multiplication operator on the line grid: one d x d block per x-node.
struct LineMultiplier {
  LinePtr line;
  int dim = 1;
  std::vector<Eigen::MatrixXcd> blocks;

  Eigen::VectorXcd apply(const Eigen::VectorXcd& phi) const {
    Eigen::VectorXcd out(phi.size());
    for (int k = 0; k < line->size(); ++k)
      out.segment(static_cast<Eigen::Index>(k) * dim, dim) = blocks[k] * phi.segment(static_cast<Eigen::Index>(k) * dim, dim);
    return out;
  }
  LineMultiplier adjoint() const {
    LineMultiplier m = *this;
    for (auto& b : m.blocks) b = b.adjoint().eval();
    return m;
  }
  double max_unitarity_defect() const {
    double w = 0.0;
    for (const auto& b : blocks) w = std::max(w, unitarity_defect(b));
    return w;
  }
};

/// Entrywise 4-point interpolation of s at an arbitrary lambda.
inline Eigen::MatrixXcd interpolate_s(const ScatteringData& sd, double lambda) {
  const Stencil st = local_stencil(sd.grid->nodes(), lambda, 4);
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(sd.dim, sd.dim);
  for (int m = 0; m < st.width; ++m) out += st.value[m] * sd.matrices[st.first + m];
  return out;
}

/// S~: x -> s(lambda(x)) on the line grid.
inline LineMultiplier assemble_S_tilde(const ScatteringData& sd, const LinePtr& line) {
  LineMultiplier m;
  m.line = line;
  m.dim = sd.dim;
  const EnergyGrid& g = *sd.grid;
  for (int k = 0; k < line->size(); ++k) {
    const double lambda = energy_from_line(line->node(k), g.a(), g.b());
    // Beyond the outermost nodes s is held at its end value.
    const double l = std::clamp(lambda, g.node(0), g.node(g.size() - 1));
    m.blocks.push_back(interpolate_s(sd, l));
  }
  return m;
}

/// Block-diagonal multiplication by s on the energy grid (plain coordinates).
inline Eigen::MatrixXcd s_multiplication(const ScatteringData& sd, bool adjoint = false) {
  const int d = sd.dim;
  const Eigen::Index n = static_cast<Eigen::Index>(sd.size()) * d;
  Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < sd.size(); ++i)
    S.block(static_cast<Eigen::Index>(i) * d, static_cast<Eigen::Index>(i) * d, d, d) =
        adjoint ? Eigen::MatrixXcd(sd.matrices[i].adjoint()) : sd.matrices[i];
  return S;
}

}  // namespace ffwave
