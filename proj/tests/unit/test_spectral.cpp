#include <cmath>

#include <boost/math/tools/roots.hpp>
#include <gtest/gtest.h>

#include "ffwave/scenario.hpp"
#include "ffwave/spectral.hpp"
#include "oracles.hpp"

using namespace ffwave;

namespace {

KernelTable sin2_table(int n, double c, double a = 0.0, double b = 1.0) {
  Eigen::MatrixXcd C(1, 1);
  C(0, 0) = c;
  const KernelPtr k = build_separable_kernel({make_profile(ProfileShape::sin_bump, a, b, 2.0, unit_vector(1, 0))}, C);
  return tabulate(k, build_grid(a, b, n, QuadratureScheme::gauss_legendre));
}

}  // namespace

TEST(Assembly, H0IsDiagonalOfNodes) {
  const GridPtr g = build_grid(0.0, 1.0, 8, QuadratureScheme::composite_midpoint);
  const DenseOperator H0 = assemble_H0(g, 1);
  Eigen::MatrixXcd expected = Eigen::MatrixXcd::Zero(8, 8);
  for (int k = 0; k < 8; ++k) expected(k, k) = (2.0 * k + 1.0) / 16.0;
  EXPECT_EQ((H0.entries - expected).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Assembly, WeightingsAreSimilar) {
  const KernelTable t = sin2_table(24, 0.7);
  const DenseOperator Hp = assemble_H(t, Weighting::plain);
  const DenseOperator Hs = assemble_H(t, Weighting::symmetrized);
  EXPECT_LT(hermitian_defect(Hs.entries), 1e-15);
  EXPECT_LT((to_weighting(Hp, Weighting::symmetrized).entries - Hs.entries).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((to_weighting(Hs, Weighting::plain).entries - Hp.entries).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Eigendecompose, FreeCaseGivesNodesAndNoEmbedded) {
  const KernelTable t = tabulate(build_zero_kernel(0.0, 1.0, 2), build_grid(0.0, 1.0, 40, QuadratureScheme::gauss_legendre));
  const SpectralData sd = eigendecompose(assemble_H(t, Weighting::symmetrized));
  Eigen::VectorXd nodes = expanded_nodes(*t.grid, 2);
  std::sort(nodes.data(), nodes.data() + nodes.size());
  EXPECT_LT((sd.eigenvalues - nodes).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_TRUE(sd.embedded_set.empty());
  EXPECT_TRUE(sd.discrete_set().empty());
  EXPECT_LT(eigenvector_gram_defect(sd), 1e-13);
}

TEST(Eigendecompose, RejectsPlainOrNonHermitian) {
  const KernelTable t = sin2_table(16, 0.5);
  EXPECT_THROW(eigendecompose(assemble_H(t, Weighting::plain)), PreconditionError);
  DenseOperator H = assemble_H(t, Weighting::symmetrized);
  H.entries(0, 3) += cplx(0.0, 1e-3);
  EXPECT_THROW(eigendecompose(H), PreconditionError);
}

TEST(Eigendecompose, EmbeddedEigenvalueIsCertified) {
  const EmbeddedScenario sc = default_embedded_scenario(0.0, 1.0);
  const KernelTable t = tabulate(sc.kernel, build_grid(0.0, 1.0, 201, QuadratureScheme::gauss_legendre));
  const SpectralData sd = eigendecompose(assemble_H(t, Weighting::symmetrized));
  ASSERT_EQ(sd.embedded_set.size(), 1u);
  const int k = sd.embedded_set.front();
  EXPECT_NEAR(sd.eigenvalues(k), 0.3, 1e-6);
  EXPECT_GT(sd.localization[k], 0.0);
  EXPECT_LT(sd.localization[k], 0.5);
  EXPECT_LT(eigenvector_gram_defect(sd), 1e-10);
  EXPECT_EQ(spectral_bound_violation(sd, t), 0.0);
  // Continuum artifacts sit near nodes.
  EXPECT_EQ(sd.count(EigenClass::continuum_artifact), 200);
}

TEST(Eigendecompose, BoundStateMatchesSecularEquation) {
  // Rank one v = c g g: E < a solves 1 + c int g^2 / (nu - E) = 0.
  const double c = -3.0;
  boost::math::quadrature::tanh_sinh<double> ts;
  auto secular = [&](double E) {
    return 1.0 + c * ts.integrate([&](double nu) {
             const double g = oracle::sin2(nu, 0.0, 1.0);
             return g * g / (nu - E);
           }, 0.0, 1.0);
  };
  boost::math::tools::eps_tolerance<double> tol(50);
  std::uintmax_t it = 200;
  const auto [lo, hi] = boost::math::tools::bisect(secular, -5.0, -1e-6, tol, it);
  const double E = 0.5 * (lo + hi);

  const KernelTable t = sin2_table(201, c);
  const SpectralData sd = eigendecompose(assemble_H(t, Weighting::symmetrized));
  ASSERT_EQ(sd.count(EigenClass::discrete_below), 1);
  EXPECT_NEAR(sd.eigenvalues(0), E, 1e-9);
  EXPECT_TRUE(sd.embedded_set.empty());
  EXPECT_EQ(spectral_bound_violation(sd, t), 0.0);
}

TEST(Projection, IdentityWithoutEmbeddedAndIdempotentWith) {
  const KernelTable t = sin2_table(32, 0.5);
  const SpectralData sd = eigendecompose(assemble_H(t, Weighting::symmetrized));
  const DenseOperator P = projection_P(sd);
  EXPECT_EQ((P.entries - Eigen::MatrixXcd::Identity(32, 32)).cwiseAbs().maxCoeff(), 0.0);

  const EmbeddedScenario sc = default_embedded_scenario(0.0, 1.0);
  const KernelTable te = tabulate(sc.kernel, build_grid(0.0, 1.0, 101, QuadratureScheme::gauss_legendre));
  const SpectralData se = eigendecompose(assemble_H(te, Weighting::symmetrized));
  const DenseOperator Pe = projection_P(se, Weighting::symmetrized);
  EXPECT_LT((Pe.entries * Pe.entries - Pe.entries).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(hermitian_defect(Pe.entries), 1e-12);
  const Eigen::VectorXcd fn = se.eigenvectors.col(se.embedded_set.front());
  EXPECT_LT(projection_P(se).entries.operator*(fn).norm(), 1e-10);
}

TEST(Resolvent, DirectInverseAndGuards) {
  const KernelTable t = sin2_table(24, 0.5);
  const DenseOperator H = assemble_H(t, Weighting::plain);
  const cplx z(0.4, 0.05);
  const DenseOperator R = resolvent_direct(H, z);
  Eigen::MatrixXcd M = H.entries;
  M.diagonal().array() -= z;
  EXPECT_LT((M * R.entries - Eigen::MatrixXcd::Identity(24, 24)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(resolvent_direct(H, cplx(0.4, 0.0)), PreconditionError);
  EXPECT_NO_THROW(resolvent_direct(H, cplx(1.5, 0.0)));

  const GridPtr g = build_grid(0.0, 1.0, 8, QuadratureScheme::composite_midpoint);
  ResolventOptions opt;
  opt.allow_near_axis = true;
  EXPECT_THROW(resolvent_direct(assemble_H0(g, 1), cplx(g->node(2), 0.0), opt), ConditioningError);
}

TEST(Regularity, EigenfunctionIdentities) {
  const EmbeddedScenario sc = default_embedded_scenario(0.0, 1.0);
  const RegularityReport r = check_eigenfunction_regularity(sc, build_grid(0.0, 1.0, 201, QuadratureScheme::gauss_legendre));
  EXPECT_LE(r.vf_at_eigenvalue, 1e-10);
  EXPECT_LE(r.derivative_identity, 1e-6);
  EXPECT_LE(r.resolvent_identity_closed, 1e-12);
  EXPECT_LE(r.resolvent_identity_quadrature, 1e-6);
  EXPECT_LE(r.eigen_residual, 1e-10);
}
