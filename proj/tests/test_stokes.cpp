#include <gtest/gtest.h>

#include <cmath>

#include "roughwall/boundary.hpp"
#include "roughwall/stokes.hpp"

using namespace roughwall;
using namespace roughwall::stokes;

namespace {

GridParams fine(double h) {
  GridParams g;
  g.h = h;
  g.max_step = 1;
  g.blend = 2;
  return g;
}

const CellSolution& sinusoid_cell() {
  static const CellSolution s = solve_cell(
      {boundary::sample_periodic_boundary(boundary::PeriodicShape::Sinusoid, 4, 0.5, 0, 64), 32, fine(1.0 / 16)}, 1e-10);
  return s;
}

}  // namespace

TEST(Stokes, FlatWallGivesUniformFlow) {
  const auto s = solve_cell({boundary::flat_boundary(-0.3, 4, 0.25), 16, fine(0.25)});
  for (double v : s.field.u) EXPECT_NEAR(v, 0.3, 1e-8);
  for (double v : s.field.w) EXPECT_NEAR(v, 0.0, 1e-8);
  EXPECT_NEAR(s.alpha, 0.3, 1e-8);
}

TEST(Stokes, CellInvariants) {
  const auto& s = sinusoid_cell();
  EXPECT_LT(s.residual, 1e-10);
  EXPECT_LT(s.field.max_divergence(), 1e-9);
  EXPECT_NEAR(s.dirichlet_energy, s.boundary_work, 1e-6 * s.dirichlet_energy);
  EXPECT_NEAR(s.alpha, s.trace_mean, 1e-4);
  EXPECT_LT(wall_residual(s), 5e-3);
  // the slip constant lies between the wall values
  EXPECT_GT(s.alpha, 0.25);
  EXPECT_LT(s.alpha, 0.75);
}

TEST(Stokes, ReconstructionRoutesAgree) {
  const auto& s = sinusoid_cell();
  for (double y : {1.0, 2.0, 4.0}) {
    const auto a = reconstruct_above(s, y);
    const auto q = reconstruct_above_quadrature(s, y);
    const auto g = s.field.velocity_at(0, y);
    EXPECT_NEAR(a[0], q[0], 5e-5);
    EXPECT_NEAR(a[1], q[1], 5e-5);
    EXPECT_NEAR(a[0], g[0], 2e-3);
    EXPECT_NEAR(a[1], g[1], 2e-3);
  }
  const auto far = reconstruct_above(s, 30);
  EXPECT_NEAR(far[0], s.trace_mean, 1e-8);
}

TEST(Stokes, TraceMomentsOnPeriodicCell) {
  const auto& s = sinusoid_cell();
  const auto m = trace_moments(s, s.trace_mean);
  // a full period of v - mean integrates to zero
  EXPECT_NEAR(m.V.back()[0], 0.0, 1e-10);
  EXPECT_EQ(m.X.size(), 4u);
}

TEST(Stokes, FlatChannelIsPoiseuilleAtSecondOrder) {
  const auto b = boundary::flat_boundary(-0.5, 1, 0.25);
  std::vector<double> errs;
  for (double h : {1.0 / 8, 1.0 / 16, 1.0 / 32}) {
    ChannelOptions o;
    o.flat_step = h;
    const auto c = solve_channel(b, 0, 0.1, ChannelMode::Stokes, o);
    double e = 0;
    for (int j = 0; j < c.field.grid.n2; ++j) e = std::max(e, std::abs(c.field.U(0, j) - poiseuille(0.1, c.field.grid.yu(0, j))));
    errs.push_back(e);
    EXPECT_LT(c.max_flux_deviation, 1e-12);
    EXPECT_LT(c.max_divergence, 1e-12);
  }
  EXPECT_NEAR(errs[0] / errs[1], 4.0, 0.4);
  EXPECT_NEAR(errs[1] / errs[2], 4.0, 0.4);
}

TEST(Stokes, NavierProfile) {
  const auto p = solve_channel_navier(0.1, 0.05);
  EXPECT_NEAR(p.flux(), 0.1, 1e-14);
  EXPECT_NEAR(p(1), 0.0, 1e-14);
  EXPECT_NEAR(p(0), 0.05 * p.derivative(0), 1e-14);
  const auto q = solve_channel_navier(0.1, 0.0);
  EXPECT_NEAR(q(0.3), poiseuille(0.1, 0.3), 1e-14);
}

TEST(Stokes, RoughChannelConservesFlux) {
  const auto b = boundary::sample_periodic_boundary(boundary::PeriodicShape::Sinusoid, 4, 0.5, 0, 64);
  ChannelOptions o;
  o.cell_grid = fine(1.0 / 8);
  o.max_step = 1.0 / 16;
  const auto c = solve_channel(b, 0.25, 0.1, ChannelMode::Stokes, o);
  EXPECT_LT(c.max_flux_deviation, 1e-10);
  EXPECT_LT(c.max_divergence, 1e-9);
  const auto p = solve_channel(b, 0.25, 0.1, ChannelMode::NavierStokesPicard, o);
  EXPECT_GE(p.picard_iterations, 1);
  EXPECT_LT(p.max_flux_deviation, 1e-10);
}

TEST(Stokes, CorrectorIsDivergenceFreeAndMatchesTop) {
  const auto& s = sinusoid_cell();
  const auto c = build_corrector(s, 0.25);
  const auto r0 = c.r(0.3, 0.0);
  EXPECT_NEAR(r0[0], 0.0, 1e-12);
  EXPECT_NEAR(r0[1], 0.0, 1e-12);
  const double h = 1e-5;
  const double div = (c.r(0.3 + h, 0.5)[0] - c.r(0.3 - h, 0.5)[0]) / (2 * h) + (c.r(0.3, 0.5 + h)[1] - c.r(0.3, 0.5 - h)[1]) / (2 * h);
  EXPECT_NEAR(div, 0.0, 1e-6);
}

TEST(Stokes, GreenScalingRelation) {
  const auto b = boundary::sample_periodized_boundary({}, {}, 16, 3, 0.25);
  GridParams g;
  g.max_step = 2;
  const double eps = 0.5;
  GridParams ge{g.h * eps, g.uniform_height * eps, g.growth, g.max_step * eps, g.blend * eps};
  const Point2 z{0, b.value_at(0) + 1};
  const auto a = estimate_green({b, 16, g}, z, 1e-10);
  const auto c = estimate_green({boundary::rescale(b, eps), 16 * eps, ge}, {0, eps * z.x2}, 1e-10);
  for (double s : {1.0, 3.0}) {
    const Point2 y{s, b.value_at(s) + 1};
    EXPECT_NEAR(a.norm_at(y), c.norm_at({eps * y.x1, eps * y.x2}), 1e-7 * a.norm_at(y));
  }
}

TEST(Stokes, GreenIsNearlySymmetric) {
  const auto b = boundary::flat_boundary(-0.5, 32, 0.125);
  GridParams g;
  g.h = 0.125;
  g.max_step = 2;
  const Point2 z{0, 0.5}, y{3, 1.5};
  const auto gz = estimate_green({b, 16, g}, z);
  const auto gy = estimate_green({b, 16, g}, y);
  const auto a = gz.at(y), c = gy.at(z);
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 2; ++l) EXPECT_NEAR(a[k][l], c[l][k], 0.05 * gz.norm_at(y)) << k << l;
}

TEST(Stokes, InvalidDomainsAreRejected) {
  EXPECT_THROW(solve_cell({boundary::flat_boundary(-0.5, 4, 0.25), -0.2, {}}), ConfigError);
  const auto b = boundary::flat_boundary(-0.5, 8, 0.25);
  EXPECT_THROW(estimate_green({b, 8, {}}, {0, -0.7}), DomainError);
}
