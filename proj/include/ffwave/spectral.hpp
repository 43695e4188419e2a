#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ffwave/energy_grid.hpp"
#include "ffwave/errors.hpp"
#include "ffwave/potential.hpp"

namespace ffwave {

enum class Weighting { plain, symmetrized };

/// Dense matrix representing an operator on grid functions. In the plain
/// weighting entries act on node values directly; the symmetrized form is
/// W^{1/2} M W^{-1/2} with W = diag(w_i I_d).
struct DenseOperator {
  GridPtr grid;
  int dim = 1;
  Weighting weighting = Weighting::plain;
  Eigen::MatrixXcd entries;

  Eigen::Index size() const { return entries.rows(); }
};

/// Quadrature weights repeated d times (node-major).
inline Eigen::VectorXd expanded_weights(const EnergyGrid& grid, int d) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(grid.size()) * d);
  for (int i = 0; i < grid.size(); ++i) w.segment(static_cast<Eigen::Index>(i) * d, d).setConstant(grid.weight(i));
  return w;
}

inline Eigen::VectorXd expanded_nodes(const EnergyGrid& grid, int d) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(grid.size()) * d);
  for (int i = 0; i < grid.size(); ++i) x.segment(static_cast<Eigen::Index>(i) * d, d).setConstant(grid.node(i));
  return x;
}

inline DenseOperator to_weighting(const DenseOperator& op, Weighting target) {
  if (op.weighting == target) return op;
  const Eigen::VectorXd sw = expanded_weights(*op.grid, op.dim).cwiseSqrt();
  DenseOperator out = op;
  out.weighting = target;
  if (target == Weighting::symmetrized)
    out.entries = sw.asDiagonal() * op.entries * sw.cwiseInverse().asDiagonal();
  else
    out.entries = sw.cwiseInverse().asDiagonal() * op.entries * sw.asDiagonal();
  return out;
}

inline DenseOperator assemble_H0(const GridPtr& grid, int d, Weighting weighting = Weighting::plain) {
  DenseOperator op{grid, d, weighting, {}};
  op.entries = expanded_nodes(*grid, d).cast<cplx>().asDiagonal();
  return op;
}

/// Nystrom blocks v(lambda_i, lambda_j) w_j (plain) or the symmetrized form.
inline DenseOperator assemble_V(const KernelTable& table, Weighting weighting = Weighting::plain) {
  DenseOperator op{table.grid, table.dim, weighting, {}};
  const Eigen::VectorXd w = expanded_weights(*table.grid, table.dim);
  if (weighting == Weighting::plain) {
    op.entries = table.values * w.asDiagonal();
  } else {
    const Eigen::VectorXd sw = w.cwiseSqrt();
    op.entries = sw.asDiagonal() * table.values * sw.asDiagonal();
  }
  return op;
}

inline DenseOperator assemble_H(const KernelTable& table, Weighting weighting = Weighting::plain) {
  DenseOperator op = assemble_V(table, weighting);
  op.entries.diagonal() += expanded_nodes(*table.grid, table.dim).cast<cplx>();
  return op;
}

inline double hermitian_defect(const Eigen::MatrixXcd& m) {
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

enum class EigenClass { discrete_below, discrete_above, embedded_candidate, continuum_artifact };

inline std::string_view to_string(EigenClass c) {
  switch (c) {
    case EigenClass::discrete_below: return "discrete-below";
    case EigenClass::discrete_above: return "discrete-above";
    case EigenClass::embedded_candidate: return "embedded-candidate";
    case EigenClass::continuum_artifact: return "continuum-artifact";
  }
  return "?";
}

struct SpectralData {
  GridPtr grid;
  int dim = 1;
  Eigen::VectorXd eigenvalues;      // ascending
  Eigen::MatrixXcd eigenvectors;    // plain coordinates, weighted-orthonormal columns
  std::vector<EigenClass> classes;
  std::vector<double> residuals;     // |(H - lambda) u| in the weighted norm
  std::vector<double> localization;  // weighted mass fraction near the nearest node
  std::vector<int> embedded_set;

  int count(EigenClass c) const { return static_cast<int>(std::count(classes.begin(), classes.end(), c)); }
  std::vector<int> discrete_set() const {
    std::vector<int> out;
    for (std::size_t k = 0; k < classes.size(); ++k)
      if (classes[k] == EigenClass::discrete_below || classes[k] == EigenClass::discrete_above)
        out.push_back(static_cast<int>(k));
    return out;
  }
};

struct ClassifierSettings {
  double tol_embed = 1e-6;
  double localization_threshold = 0.5;
  int localization_radius = 3;  // grid spacings
};

/// Hermitian eigendecomposition of a symmetrized H with classification of
/// every eigenvalue.
inline SpectralData eigendecompose(const DenseOperator& H, const ClassifierSettings& settings = {}) {
  if (H.weighting != Weighting::symmetrized) throw PreconditionError("eigendecompose expects a symmetrized operator");
  const double scale = std::max(1.0, H.entries.cwiseAbs().maxCoeff());
  if (hermitian_defect(H.entries) > 1e-12 * scale) throw PreconditionError("eigendecompose: operator is not Hermitian");
  const EnergyGrid& grid = *H.grid;
  const int d = H.dim;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H.entries);
  if (es.info() != Eigen::Success) throw Error("Hermitian eigensolver did not converge");

  SpectralData sd;
  sd.grid = H.grid;
  sd.dim = d;
  sd.eigenvalues = es.eigenvalues();
  const Eigen::VectorXd sw = expanded_weights(grid, d).cwiseSqrt();
  sd.eigenvectors = sw.cwiseInverse().asDiagonal() * es.eigenvectors();
  const Eigen::Index n = sd.eigenvalues.size();
  sd.classes.resize(n);
  sd.residuals.resize(n);
  sd.localization.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double lam = sd.eigenvalues(k);
    const Eigen::VectorXcd u = es.eigenvectors().col(k);
    sd.residuals[k] = (H.entries * u - lam * u).norm();
    const int centre = grid.nearest_node(std::clamp(lam, grid.a(), grid.b()));
    double near = 0.0;
    for (int i = std::max(0, centre - settings.localization_radius);
         i <= std::min(grid.size() - 1, centre + settings.localization_radius); ++i)
      near += u.segment(static_cast<Eigen::Index>(i) * d, d).squaredNorm();
    sd.localization[k] = near / u.squaredNorm();
    if (lam < grid.a()) sd.classes[k] = EigenClass::discrete_below;
    else if (lam > grid.b()) sd.classes[k] = EigenClass::discrete_above;
    else if (sd.residuals[k] <= settings.tol_embed && sd.localization[k] < settings.localization_threshold) {
      sd.classes[k] = EigenClass::embedded_candidate;
      sd.embedded_set.push_back(static_cast<int>(k));
    } else {
      sd.classes[k] = EigenClass::continuum_artifact;
    }
  }
  return sd;
}

/// P = I - sum_n |f_n><f_n| over the certified embedded eigenvectors, in the
/// weighted inner product.
inline DenseOperator projection_P(const SpectralData& spec, Weighting weighting = Weighting::plain) {
  const Eigen::Index n = spec.eigenvectors.rows();
  const Eigen::VectorXd w = expanded_weights(*spec.grid, spec.dim);
  DenseOperator P{spec.grid, spec.dim, Weighting::plain, Eigen::MatrixXcd::Identity(n, n)};
  for (int k : spec.embedded_set) {
    const Eigen::VectorXcd f = spec.eigenvectors.col(k);
    P.entries -= f * (w.asDiagonal() * f).adjoint();
  }
  return to_weighting(P, weighting);
}

/// Projection onto the weighted orthocomplement of arbitrary vectors (plain coordinates).
inline DenseOperator projection_from_vectors(const GridPtr& grid, int d, const std::vector<Eigen::VectorXcd>& fs,
                                             Weighting weighting = Weighting::plain) {
  const Eigen::Index n = static_cast<Eigen::Index>(grid->size()) * d;
  const Eigen::VectorXd sw = expanded_weights(*grid, d).cwiseSqrt();
  Eigen::MatrixXcd U(n, static_cast<Eigen::Index>(fs.size()));
  for (std::size_t k = 0; k < fs.size(); ++k) U.col(static_cast<Eigen::Index>(k)) = sw.asDiagonal() * fs[k];
  Eigen::MatrixXcd Qf = Eigen::HouseholderQR<Eigen::MatrixXcd>(U).householderQ() * Eigen::MatrixXcd::Identity(n, U.cols());
  DenseOperator P{grid, d, Weighting::symmetrized, Eigen::MatrixXcd::Identity(n, n) - Qf * Qf.adjoint()};
  return to_weighting(P, weighting);
}

struct ResolventOptions {
  double eps_min = 1e-8;
  bool allow_near_axis = false;
  double residual_tol = 1e-9;
};

/// R(z) = (H - z)^{-1} by LU with partial pivoting, in the weighting of H.
inline DenseOperator resolvent_direct(const DenseOperator& H, cplx z, const ResolventOptions& opt = {}) {
  const EnergyGrid& g = *H.grid;
  if (!opt.allow_near_axis && std::abs(z.imag()) < opt.eps_min && z.real() >= g.a() && z.real() <= g.b())
    throw PreconditionError("resolvent_direct: z within eps_min of the spectral interval");
  const Eigen::Index n = H.size();
  Eigen::MatrixXcd M = H.entries;
  M.diagonal().array() -= z;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
  const double rc = lu.rcond();
  if (!(rc > 1e-14)) throw ConditioningError("resolvent_direct: singular system", rc > 0 ? 1.0 / rc : INFINITY);
  DenseOperator R{H.grid, H.dim, H.weighting, lu.solve(Eigen::MatrixXcd::Identity(n, n))};
  const double res = (M * R.entries - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
  if (!(res <= opt.residual_tol)) throw ConditioningError("resolvent_direct: residual " + std::to_string(res), 1.0 / rc);
  return R;
}

struct RegularityReport {
  double vf_at_eigenvalue = 0.0;         // |[V f_n](lambda_n)|
  double derivative_identity = 0.0;      // |f_n(lambda_n) + [V' f_n](lambda_n)|
  double resolvent_identity_closed = 0.0;  // closed-form cancellation, both sides
  double resolvent_identity_quadrature = 0.0;
  double eigen_residual = 0.0;           // |(H - lambda_n) f_n| / |f_n| on the grid
};

/// Checks the eigenfunction identities at an embedded eigenvalue.
inline RegularityReport check_eigenfunction_regularity(const EmbeddedScenario& sc, const GridPtr& grid) {
  const OperatorKernel& k = *sc.kernel;
  if (!k.differentiable) throw UnsupportedCheck("eigenfunction regularity needs a differentiable kernel");
  const int d = k.dim;
  const double ln = sc.eigenvalue;
  RegularityReport r;
  Eigen::VectorXcd vf = Eigen::VectorXcd::Zero(d), dvf = Eigen::VectorXcd::Zero(d);
  for (int j = 0; j < grid->size(); ++j) {
    const double mu = grid->node(j);
    const Eigen::VectorXcd fj = sc.f(mu);
    vf += grid->weight(j) * (k.eval(ln, mu) * fj);
    dvf += grid->weight(j) * (k.eval_dlambda(ln, mu) * fj);
  }
  r.vf_at_eigenvalue = vf.norm();
  r.derivative_identity = (sc.f(ln) + dvf).norm();

  // f + R0(lambda_n +- i0) V f with V f = (lambda_n - lambda) f: the quotient cancels.
  double closed = 0.0, quad2 = 0.0, fnorm2 = 0.0;
  for (int i = 0; i < grid->size(); ++i) {
    const double l = grid->node(i);
    const Eigen::VectorXcd fi = sc.f(l);
    fnorm2 += grid->weight(i) * fi.squaredNorm();
    if (l == ln) continue;
    const Eigen::VectorXcd quotient = -fi;  // g(l) / (l - lambda_n) with g = (lambda_n - l) f
    closed = std::max(closed, (fi + quotient).norm());
    Eigen::VectorXcd vfi = Eigen::VectorXcd::Zero(d);
    for (int j = 0; j < grid->size(); ++j) vfi += grid->weight(j) * (k.eval(l, grid->node(j)) * sc.f(grid->node(j)));
    quad2 += grid->weight(i) * (fi + vfi / (l - ln)).squaredNorm();
  }
  r.resolvent_identity_closed = closed;
  r.resolvent_identity_quadrature = std::sqrt(quad2 / fnorm2);

  const KernelTable t = tabulate(sc.kernel, grid);
  const DenseOperator H = assemble_H(t);
  const Eigen::VectorXcd f = sc.sample(*grid);
  r.eigen_residual = weighted_norm(*grid, d, H.entries * f - ln * f) / weighted_norm(*grid, d, f);
  return r;
}

}  // namespace ffwave
