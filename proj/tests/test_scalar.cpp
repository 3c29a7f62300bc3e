#include <gtest/gtest.h>

#include <cmath>

#include "roughwall/boundary.hpp"
#include "roughwall/scalar.hpp"

using namespace roughwall;
using namespace roughwall::scalar;

namespace {

stokes::GridParams cell_grid(double h = 0.125) {
  stokes::GridParams g;
  g.h = h;
  g.max_step = 2;
  return g;
}

boundary::RoughBoundary sinusoid() {
  return boundary::sample_periodic_boundary(boundary::PeriodicShape::Sinusoid, 4, 0.5, 0, 64);
}

}  // namespace

TEST(Scalar, ConstantDataGivesConstantSolution) {
  const auto s = solve_harmonic_cell({boundary::flat_boundary(-0.4, 4, 0.125), 16, cell_grid()});
  EXPECT_NEAR(s.min(), -0.4, 1e-10);
  EXPECT_NEAR(s.max(), -0.4, 1e-10);
  EXPECT_NEAR(s.top_mean, -0.4, 1e-10);
}

TEST(Scalar, MaximumPrinciple) {
  const auto b = sinusoid();
  const auto s = solve_harmonic_cell({b, 16, cell_grid()});
  EXPECT_GE(s.min(), b.min() - 1e-10);
  EXPECT_LE(s.max(), b.max() + 1e-10);
  EXPECT_LT(s.residual, 1e-10);
}

TEST(Scalar, FlatGeometryMatchesStripSolution) {
  const auto b = sinusoid();
  HarmonicDomain d{b, 16, cell_grid(1.0 / 16), Geometry::Flat};
  const auto s = solve_harmonic_cell(d);
  const std::vector<double> hs{0.5, 1, 2, 4};
  const auto exact = flat_strip_values(b, hs, 16);
  for (std::size_t k = 0; k < hs.size(); ++k) EXPECT_NEAR(s.value_at(0, hs[k]), exact[k], 2e-4) << hs[k];
  // one mode: cosh(k (Y - y)) / cosh(k Y) with data mean -1/2, amplitude -d/2
  const double kk = 2 * kPi / 4, Y = 16;
  for (std::size_t k = 0; k < hs.size(); ++k)
    EXPECT_NEAR(exact[k], -0.5 - 0.25 * std::cosh(kk * (Y - hs[k])) / std::cosh(kk * Y), 1e-12);
}

TEST(Scalar, WalkOnSpheresAgreesWithGrid) {
  const auto b = sinusoid();
  WalkOptions opt;
  opt.kill_height = 16;
  const auto s = solve_harmonic_cell({b, 16, cell_grid(1.0 / 32)});
  for (const Point2 p : {Point2{0, 0}, Point2{0.7, 0.2}, Point2{1.9, 0.5}, Point2{-1.2, 1.0}, Point2{0.3, 3.0}}) {
    const auto mc = brownian_value(b, p, 20000, 17, 0, opt);
    EXPECT_NEAR(mc.estimate, s.value_at(p.x1, p.x2), 4 * mc.std_error + 2e-3) << p.x1 << "," << p.x2;
  }
}

TEST(Scalar, WalksAreReproducible) {
  const auto b = sinusoid();
  const auto a = brownian_value(b, {0, 0}, 500, 3, 1);
  const auto c = brownian_value(b, {0, 0}, 500, 3, 1);
  const auto d = brownian_value(b, {0, 0}, 500, 3, 2);
  EXPECT_EQ(a.estimate, c.estimate);
  EXPECT_NE(a.estimate, d.estimate);
  EXPECT_THROW(brownian_value(b, {0, -0.9}, 10, 1), DomainError);
}

TEST(Scalar, CommonRandomNumbersReduceVariance) {
  const auto pair = boundary::couple_pair({}, {}, 8, 64, 5, true);
  const auto c = coupled_difference(pair, {0, 0}, 4000, 9, 0, {}, true);
  const auto i = coupled_difference(pair, {0, 0}, 4000, 9, 0, {}, false);
  EXPECT_LT(c.std_error, 0.5 * i.std_error);
  EXPECT_NEAR(c.estimate, i.estimate, 4 * std::hypot(c.std_error, i.std_error));
}

TEST(Scalar, IdenticalPairHasZeroDifference) {
  const auto pair = boundary::couple_pair({}, {}, 100, 64, 5, true);
  const auto c = coupled_difference(pair, {0, 0}, 200, 1);
  EXPECT_EQ(c.estimate, 0.0);
}

TEST(Scalar, DecayScanIndependentOfWorkers) {
  std::vector<boundary::CoupledPair> ps;
  for (int k = 0; k < 6; ++k) ps.push_back(boundary::couple_pair({}, {}, k < 3 ? 4 : 8, 64, 40 + k, true));
  const auto a = coupled_decay_scan(ps, 300, 2, {}, 1);
  const auto b = coupled_decay_scan(ps, 300, 2, {}, 3);
  ASSERT_EQ(a.rows.size(), 2u);
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    EXPECT_EQ(a.rows[k].mean, b.rows[k].mean);
    EXPECT_GT(a.rows[k].bound, 0);
  }
}

TEST(Scalar, TiltProfile) {
  EXPECT_EQ(tilt_profile(0), 1.0);
  EXPECT_EQ(tilt_profile(1), 1.0);
  EXPECT_EQ(tilt_profile(2), 0.0);
  EXPECT_EQ(tilt_profile(-1.4), tilt_profile(1.4));
  const double h = 1e-4;
  for (double s : {1.0, 2.0}) {
    const double d2l = (tilt_profile(s - 2 * h) - 2 * tilt_profile(s - h) + tilt_profile(s)) / (h * h);
    const double d2r = (tilt_profile(s) - 2 * tilt_profile(s + h) + tilt_profile(s + 2 * h)) / (h * h);
    EXPECT_NEAR(d2l, d2r, 1e-2) << s;
  }
}

TEST(Scalar, TiltedEnsembleIdentities) {
  const boundary::CovarianceSpec spec;
  // int G^2 by Simpson
  double g2 = 0;
  const int n = 4000;
  for (int i = 0; i <= n; ++i) {
    const double s = -2 + 4.0 * i / n;
    g2 += (i == 0 || i == n ? 1 : (i % 2 ? 4 : 2)) * std::pow(tilt_profile(s), 2);
  }
  g2 *= 4.0 / n / 3;
  TiltedEnsemble big{spec, 1e4};
  EXPECT_NEAR(big.H(), g2 * spec.covariance_integral(), 1e-3 * g2 * spec.covariance_integral());
  EXPECT_NEAR(std::sqrt(big.y2) * big.m(0), spec.covariance_integral(), 1e-9);
  TiltedEnsemble e{spec, 4};
  // m = rho * g by direct midpoint quadrature
  double m = 0;
  const int k = 20000;
  for (int i = 0; i < k; ++i) {
    const double t = -2 + 4.0 * (i + 0.5) / k;
    m += spec.covariance(t) * e.g(0.3 - t);
  }
  EXPECT_NEAR(e.m(0.3), m * 4.0 / k, 1e-6);
}
