#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "ffwave/energy_grid.hpp"
#include "ffwave/errors.hpp"

using namespace ffwave;

TEST(EnergyGrid, MidpointRuleNodesAndWeights) {
  const GridPtr g = build_grid(0.0, 1.0, 8, QuadratureScheme::composite_midpoint);
  ASSERT_EQ(g->size(), 8);
  for (int k = 0; k < 8; ++k) {
    EXPECT_DOUBLE_EQ(g->node(k), (2.0 * k + 1.0) / 16.0);
    EXPECT_DOUBLE_EQ(g->weight(k), 1.0 / 8.0);
  }
}

TEST(EnergyGrid, GaussLegendreIntegratesPolynomialsExactly) {
  const GridPtr g = build_grid(-1.0, 2.0, 10, QuadratureScheme::gauss_legendre);
  double sw = 0.0;
  for (int i = 0; i < g->size(); ++i) sw += g->weight(i);
  EXPECT_NEAR(sw, 3.0, 1e-14);
  // Degree 19 = 2n - 1 is integrated exactly.
  double q = 0.0;
  for (int i = 0; i < g->size(); ++i) q += g->weight(i) * std::pow(g->node(i), 19);
  const double exact = (std::pow(2.0, 20) - 1.0) / 20.0;
  EXPECT_NEAR(q / exact, 1.0, 1e-12);
}

TEST(EnergyGrid, NodesStrictlyInsideAndAscending) {
  const GridPtr g = build_grid(0.0, 1.0, 201, QuadratureScheme::gauss_legendre);
  EXPECT_GT(g->node(0), 0.0);
  EXPECT_LT(g->node(200), 1.0);
  for (int i = 1; i < g->size(); ++i) EXPECT_LT(g->node(i - 1), g->node(i));
}

TEST(EnergyGrid, RejectsBadParameters) {
  EXPECT_THROW(build_grid(0.0, 1.0, 7, QuadratureScheme::gauss_legendre), ConfigError);
  EXPECT_THROW(build_grid(1.0, 1.0, 16, QuadratureScheme::gauss_legendre), ConfigError);
  EXPECT_THROW(build_grid(2.0, 1.0, 16, QuadratureScheme::composite_midpoint), ConfigError);
  EXPECT_THROW(scheme_from_string("simpson"), ConfigError);
  EXPECT_EQ(scheme_from_string("composite-midpoint"), QuadratureScheme::composite_midpoint);
}

TEST(EnergyGrid, NodeLookup) {
  const GridPtr g = build_grid(0.0, 1.0, 8, QuadratureScheme::composite_midpoint);
  EXPECT_EQ(g->nearest_node(0.2), 1);  // node 1 is 3/16
  EXPECT_EQ(g->nearest_node(0.26), 2);
  EXPECT_EQ(g->nearest_node(2.0), 7);
  EXPECT_EQ(g->node_index(3.0 / 16.0), 1);
  EXPECT_EQ(g->node_index(0.2), -1);
}

TEST(EnergyGrid, WeightedNormOfConstant) {
  const GridPtr g = build_grid(0.0, 2.0, 32, QuadratureScheme::gauss_legendre);
  Eigen::VectorXcd one = Eigen::VectorXcd::Ones(2 * g->size());
  // d = 2 components each equal to one: |f|^2 = 2 (b - a).
  EXPECT_NEAR(weighted_norm(*g, 2, one), 2.0, 1e-13);
}

TEST(LineGrid, NodesAndSpacing) {
  const LinePtr l = build_line_grid(8.0, 512);
  ASSERT_EQ(l->size(), 512);
  EXPECT_DOUBLE_EQ(l->node(0), -8.0);
  EXPECT_NEAR(l->spacing(), 16.0 / 512.0, 1e-15);
  EXPECT_THROW(build_line_grid(8.0, 511), ConfigError);
}

TEST(Rescaling, RoundTripAndMidpoint) {
  const double a = -1.0, b = 3.0;
  EXPECT_NEAR(energy_from_line(0.0, a, b), 1.0, 1e-15);
  for (double lam : {-0.9, 0.0, 1.7, 2.95}) EXPECT_NEAR(energy_from_line(rescale_energy(lam, a, b), a, b), lam, 1e-12);
  EXPECT_THROW(rescale_energy(a, a, b), DomainError);
  EXPECT_THROW(rescale_energy(3.5, a, b), DomainError);
}

TEST(Rescaling, UPreservesNorm) {
  const GridPtr g = build_grid(0.0, 1.0, 201, QuadratureScheme::gauss_legendre);
  const LinePtr l = build_line_grid(8.0, 512);
  EnergyFunction f(g, 1);
  for (int i = 0; i < g->size(); ++i) {
    const double u = (g->node(i) - 0.4) / 0.08;
    f.node_value(i)(0) = std::exp(-u * u);
  }
  const LineFunction phi = apply_U(f, l);
  EXPECT_NEAR(norm(phi) / norm(f), 1.0, 1e-4);
  const EnergyFunction back = apply_Uinv(phi, g);
  EXPECT_LT(weighted_norm(*g, 1, back.values - f.values) / norm(f), 1e-3);
}

TEST(Rescaling, ConjugatedH0IsTheEnergyMap) {
  EXPECT_NEAR(conjugated_h0(0.0, 0.0, 1.0), 0.5, 1e-15);
  EXPECT_NEAR(conjugated_h0(40.0, 0.0, 1.0), 1.0, 1e-15);
}

TEST(Interpolation, ExactForCubics) {
  const GridPtr g = build_grid(0.0, 1.0, 40, QuadratureScheme::gauss_legendre);
  Eigen::VectorXcd v(g->size());
  auto p = [](double x) { return 1.0 - 2.0 * x + 3.0 * x * x * x; };
  for (int i = 0; i < g->size(); ++i) v(i) = p(g->node(i));
  for (double x : {0.013, 0.25, 0.5, 0.77, 0.99}) EXPECT_NEAR(interpolate_energy(*g, 1, v, x)(0).real(), p(x), 1e-12);
}
