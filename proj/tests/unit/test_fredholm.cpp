#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "ffwave/oracles.hpp"
#include "ffwave/scenario.hpp"
#include "oracles.hpp"

using namespace ffwave;

namespace {

KernelPtr sin2_kernel(double c, double a = 0.0, double b = 1.0) {
  Eigen::MatrixXcd C(1, 1);
  C(0, 0) = c;
  return build_separable_kernel({make_profile(ProfileShape::sin_bump, a, b, 2.0, unit_vector(1, 0))}, C);
}

GridPtr gl(int n, double a = 0.0, double b = 1.0) { return build_grid(a, b, n, QuadratureScheme::gauss_legendre); }

}  // namespace

TEST(CauchyWeights, PrincipalValueOfConstant) {
  const GridPtr g = gl(101, -1.0, 2.0);
  for (double mu : {-0.6, 0.37, 1.8}) {
    const double pv = std::log((2.0 - mu) / (mu + 1.0));
    const cplx sp = cauchy_weights(*g, BoundaryPoint::on_axis(mu, Side::plus)).sum();
    const cplx sm = cauchy_weights(*g, BoundaryPoint::on_axis(mu, Side::minus)).sum();
    EXPECT_NEAR(std::abs(sp - cplx(pv, std::numbers::pi)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(sm - cplx(pv, -std::numbers::pi)), 0.0, 1e-12);
  }
}

TEST(CauchyWeights, QuadraticOnAndOffAxis) {
  const GridPtr g = gl(101);
  auto apply = [&](const BoundaryPoint& pt, CauchyRule rule) {
    const Eigen::VectorXcd c = cauchy_weights(*g, pt, rule);
    cplx s = 0.0;
    for (int m = 0; m < g->size(); ++m) s += c(m) * g->node(m) * g->node(m);
    return s;
  };
  for (double mu : {0.11, 0.5, 0.83}) {
    const cplx expect(oracle::pv_nu2(mu), std::numbers::pi * mu * mu);
    EXPECT_LT(std::abs(apply(BoundaryPoint::on_axis(mu, Side::plus), CauchyRule::subtracted) - expect), 1e-11);
  }
  // Near the axis the remainder varies on the scale Im z, so the subtracted rule
  // is not exact but still far ahead of the plain one.
  for (cplx z : {cplx(0.4, 1e-2), cplx(0.7, -1e-3)}) {
    const double sub = std::abs(apply(BoundaryPoint::off_axis(z), CauchyRule::subtracted) - oracle::cauchy_nu2(z));
    const double plain = std::abs(apply(BoundaryPoint::off_axis(z), CauchyRule::plain) - oracle::cauchy_nu2(z));
    EXPECT_LT(sub, 1e-4);
    EXPECT_LT(sub, 1e-2 * plain);
  }
  EXPECT_LT(std::abs(apply(BoundaryPoint::off_axis(cplx(0.2, 0.3)), CauchyRule::subtracted) - oracle::cauchy_nu2(cplx(0.2, 0.3))),
            1e-12);
  // The plain rule is only accurate well away from the axis.
  EXPECT_LT(std::abs(apply(BoundaryPoint::off_axis(cplx(0.2, 0.3)), CauchyRule::plain) - oracle::cauchy_nu2(cplx(0.2, 0.3))), 1e-12);
}

TEST(CauchyWeights, RejectsBoundaryPointsOutside) {
  const GridPtr g = gl(16);
  EXPECT_THROW(cauchy_weights(*g, BoundaryPoint::on_axis(1.2, Side::plus)), DomainError);
  EXPECT_THROW(BoundaryPoint::off_axis(cplx(0.5, 0.0)), DomainError);
}

TEST(TKernel, VanishesForZeroPotential) {
  const KernelTable t = tabulate(build_zero_kernel(0.0, 1.0, 2), gl(41));
  const TKernel tk = build_T_kernel(t, Side::plus);
  EXPECT_EQ(tk.blocks.cwiseAbs().maxCoeff(), 0.0);
}

TEST(TKernel, ClosedFormRankOne) {
  const double c = 0.5;
  const KernelTable t = tabulate(sin2_kernel(c), gl(201));
  const TKernel tk = build_T_kernel(t, Side::plus);
  auto g = [](double x) { return oracle::sin2(x, 0.0, 1.0); };
  double worst = 0.0;
  for (int j = 0; j < 201; j += 10) {
    const double mu = t.grid->node(j);
    const cplx I = oracle::boundary_I(g, 0.0, 1.0, mu);
    for (int i = 0; i < 201; i += 7) {
      const cplx exact = c * g(t.grid->node(i)) * g(mu) / (1.0 + c * I);
      worst = std::max(worst, std::abs(tk.block(i, j)(0, 0) - exact));
    }
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(TKernel, FredholmMatchesDirectResolvent) {
  const KernelTable t = tabulate(sin2_kernel(0.5), gl(41));
  for (double eps : {1e-2, 1e-3}) {
    const Eigen::MatrixXcd direct = direct_T_offaxis(t, eps);
    const Eigen::MatrixXcd fred = fredholm_T_offaxis(t, eps);
    EXPECT_LE((direct - fred).cwiseAbs().maxCoeff(), 1e-8) << "eps = " << eps;
  }
  const EmbeddedScenario sc = default_embedded_scenario(0.0, 1.0);
  const KernelTable te = tabulate(sc.kernel, gl(41));
  EXPECT_LE((direct_T_offaxis(te, 1e-2) - fredholm_T_offaxis(te, 1e-2)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(TKernel, DenseAndLowRankPathsAgree) {
  const KernelTable t = tabulate(sin2_kernel(0.5), gl(41));
  KernelTable dense = t;
  dense.factors.resize(0, 0);
  dense.coefficients.resize(0, 0);
  dense.kernel = nullptr;
  const BoundaryPoint pt = BoundaryPoint::on_axis(0.43, Side::plus);
  FredholmSolver lr(t), full(dense, 0.0);
  EXPECT_TRUE(lr.low_rank());
  EXPECT_FALSE(full.low_rank());
  const Eigen::VectorXcd c = cauchy_weights(*t.grid, pt);
  EXPECT_LT((lr.solve(c, t.values).X - full.solve(c, t.values).X).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(TKernel, HermitianRelationBetweenSides) {
  Eigen::VectorXcd d2(2);
  d2 << 0.6, 0.8;
  Eigen::MatrixXcd C(2, 2);
  C << 0.4, 0.1, 0.1, -0.3;
  const KernelPtr k = build_separable_kernel({make_profile(ProfileShape::sin_bump, -1.0, 2.0, 2.0, unit_vector(2, 0)),
                                              make_profile(ProfileShape::poly_bump, -1.0, 2.0, 2.0, d2)},
                                             C);
  const KernelTable t = tabulate(k, gl(61, -1.0, 2.0));
  for (double mu : {-0.3, 0.9, 1.5}) {
    const Eigen::MatrixXcd tp = solve_T_full(t, BoundaryPoint::on_axis(mu, Side::plus));
    const Eigen::MatrixXcd tm = solve_T_full(t, BoundaryPoint::on_axis(mu, Side::minus));
    EXPECT_LT((tp.adjoint() - tm).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(TKernel, ParallelBuildIsBitwiseSerial) {
  const KernelTable t = tabulate(sin2_kernel(0.5), gl(101));
  TKernelOptions serial, par;
  serial.threads = 1;
  par.threads = 4;
  const TKernel a = build_T_kernel(t, Side::plus, serial);
  const TKernel b = build_T_kernel(t, Side::plus, par);
  EXPECT_TRUE(a.blocks == b.blocks);
}

TEST(TKernel, EndpointColumnsAreFlagged) {
  const TKernel tk = build_T_kernel(tabulate(sin2_kernel(0.5), gl(41)), Side::plus);
  EXPECT_GE(tk.warnings.size(), 2u);
  EXPECT_GE(tk.max_condition, 1.0);
}

TEST(TKernel, HolderExponentOfBoundaryValues) {
  const TKernel tk = build_T_kernel(tabulate(sin2_kernel(0.5), gl(201)), Side::plus);
  const ContinuityFit fit = fit_t_kernel_holder(tk, {}, 0.0);
  EXPECT_GE(fit.exponent, 0.9);
}

TEST(EmbeddedSolve, UnprojectedSystemIsSingular) {
  const EmbeddedScenario sc = default_embedded_scenario(0.0, 1.0);
  const KernelTable t = tabulate(sc.kernel, gl(201));
  for (Side s : {Side::plus, Side::minus}) {
    const BoundaryPoint pt = BoundaryPoint::on_axis(0.3, s);
    EXPECT_THROW(solve_T_column(t, pt), ConditioningError);
    EXPECT_GE(fredholm_condition(t, pt), 1e8);
  }
}

TEST(EmbeddedSolve, ProjectedSystemIsWellConditioned) {
  const EmbeddedScenario sc = default_embedded_scenario(0.0, 1.0);
  const KernelTable t = tabulate(sc.kernel, gl(201));
  const SpectralData sd = eigendecompose(assemble_H(t, Weighting::symmetrized));
  ASSERT_EQ(sd.embedded_set.size(), 1u);
  const std::vector<Eigen::VectorXcd> fs = {sd.eigenvectors.col(sd.embedded_set.front())};
  const Eigen::VectorXcd rhs = projection_P(sd).entries * t.values.col(100);
  for (Side s : {Side::plus, Side::minus}) {
    const ProjectedSolution ps = solve_projected(t, BoundaryPoint::on_axis(0.3, s), fs, rhs);
    EXPECT_LE(ps.condition, 1e4);
    EXPECT_TRUE(ps.solution.allFinite());
  }
  EXPECT_THROW(solve_projected(t, BoundaryPoint::on_axis(0.3, Side::plus), fs, fs.front()), PreconditionError);
}

TEST(EmbeddedSolve, EmptyProjectionMatchesFredholm) {
  const KernelTable t = tabulate(sin2_kernel(0.5), gl(101));
  const BoundaryPoint pt = BoundaryPoint::on_axis(t.grid->node(40), Side::plus);
  const Eigen::VectorXcd rhs = t.values.col(40);
  const ProjectedSolution ps = solve_projected(t, pt, {}, rhs);
  const Eigen::MatrixXcd col = solve_T_column(t, pt);
  EXPECT_LT((ps.solution - col.col(0)).cwiseAbs().maxCoeff(), 1e-12);
}
