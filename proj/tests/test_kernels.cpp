#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "roughwall/kernels.hpp"
#include "roughwall/stats.hpp"

using namespace roughwall;
using namespace roughwall::kernels;

namespace {

// int_R f via t = s tan(theta), composite Simpson on [-pi/2, pi/2]; endpoint values are taken just inside.
template <class F>
double simpson_line(F&& f, double s, int n = 20000) {
  const double a = -kPi / 2, b = kPi / 2, h = (b - a) / n;
  auto g = [&](double th) {
    th = std::clamp(th, a + 1e-7, b - 1e-7);
    const double c = std::cos(th);
    return f(s * std::tan(th)) * s / (c * c);
  };
  double acc = g(a) + g(b);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * g(a + i * h);
  return acc * h / 3;
}

// P(T_a < T_1) for independent Brownian motions: T_a = a^2 / Z^2, so the event is |Z1| > a |Z2|.
double hitting_oracle(double n) { return n == 0 ? 1.0 : 2 / kPi * std::atan(2 / n); }

}  // namespace

TEST(Kernels, PrintedFormulaValues) {
  const auto g0 = stokes_poisson(0, 1);
  EXPECT_NEAR(g0(1, 1), 2 / kPi, 1e-15);
  EXPECT_EQ(g0(0, 0), 0);
  EXPECT_EQ(g0(0, 1), 0);
  const auto g1 = stokes_poisson(1, 1);
  for (double v : g1.e) EXPECT_NEAR(v, 1 / (2 * kPi), 1e-15);
  const auto a = stokes_poisson(0.7, 1.1), b = stokes_poisson(-0.7, 1.1);
  EXPECT_DOUBLE_EQ(a(0, 0), b(0, 0));
  EXPECT_DOUBLE_EQ(a(1, 1), b(1, 1));
  EXPECT_DOUBLE_EQ(a(0, 1), -b(0, 1));
  EXPECT_DOUBLE_EQ(a(0, 1), a(1, 0));
  EXPECT_THROW(stokes_poisson(1, 0), DomainError);
}

TEST(Kernels, ReproducesConstants) {
  for (double y2 : {0.5, 1.0, 4.0})
    for (int k = 0; k < 4; ++k)
      EXPECT_NEAR(simpson_line([&](double t) { return stokes_poisson(t, y2).e[static_cast<std::size_t>(k)]; }, y2),
                  (k == 0 || k == 3) ? 1.0 : 0.0, 1e-8);
}

TEST(Kernels, DerivativesMatchFiniteDifferences) {
  const double t = 0.7, y = 1.3, h = 1e-4;
  auto fd_t = [&](int b1, int b2) {
    KernelMatrix m;
    const auto p = stokes_poisson_deriv(b1, b2, t + h, y), q = stokes_poisson_deriv(b1, b2, t - h, y);
    for (int k = 0; k < 4; ++k) m.e[static_cast<std::size_t>(k)] = (p.e[static_cast<std::size_t>(k)] - q.e[static_cast<std::size_t>(k)]) / (2 * h);
    return m;
  };
  auto fd_y = [&](int b1, int b2) {
    KernelMatrix m;
    const auto p = stokes_poisson_deriv(b1, b2, t, y + h), q = stokes_poisson_deriv(b1, b2, t, y - h);
    for (int k = 0; k < 4; ++k) m.e[static_cast<std::size_t>(k)] = (p.e[static_cast<std::size_t>(k)] - q.e[static_cast<std::size_t>(k)]) / (2 * h);
    return m;
  };
  for (int b1 = 0; b1 <= 2; ++b1)
    for (int b2 = 0; b1 + b2 <= 2; ++b2) {
      const auto dt = stokes_poisson_deriv(b1 + 1, b2, t, y), ft = fd_t(b1, b2);
      const auto dy = stokes_poisson_deriv(b1, b2 + 1, t, y), fy = fd_y(b1, b2);
      for (int k = 0; k < 4; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        EXPECT_NEAR(dt.e[kk], ft.e[kk], 1e-6 * std::max(1.0, dt.max_abs()));
        EXPECT_NEAR(dy.e[kk], fy.e[kk], 1e-6 * std::max(1.0, dy.max_abs()));
      }
    }
  const auto z = stokes_poisson_deriv(0, 0, t, y), g = stokes_poisson(t, y);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(z.e[static_cast<std::size_t>(k)], g.e[static_cast<std::size_t>(k)], 1e-15);
  EXPECT_THROW(stokes_poisson_deriv(2, 2, t, y), DomainError);
}

TEST(Kernels, DerivativeIntegratesToZero) {
  EXPECT_NEAR(simpson_line([](double t) { return stokes_poisson_deriv(1, 0, t, 2.0)(0, 0); }, 2.0), 0.0, 1e-8);
}

TEST(Kernels, JumpData) {
  const auto a = stokes_jump_data({0, 1}, 10);
  EXPECT_NEAR(a(0, 0), 2 * 100 / (kPi * 101 * 101), 1e-15);
  const auto b = stokes_jump_data({3.5, 1}, 13.5);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(a.e[static_cast<std::size_t>(k)], b.e[static_cast<std::size_t>(k)], 1e-15);
  for (double v : stokes_jump_data({0, 1}, 0).e) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(stokes_jump_data({0, 0}, 1), DomainError);
}

TEST(Kernels, HarmonicPoisson) {
  for (double y2 : {0.5, 1.0, 4.0}) EXPECT_NEAR(simpson_line([&](double t) { return harmonic_poisson(t, y2); }, y2), 1.0, 1e-9);
  EXPECT_NEAR(harmonic_poisson(0, 1), 1 / kPi, 1e-15);
  EXPECT_NEAR(harmonic_poisson(3 * 0.4, 3 * 1.7), harmonic_poisson(0.4, 1.7) / 3, 1e-15);
}

TEST(Kernels, HittingDensityNormalised) {
  for (double n : {1.0, 4.0, 16.0}) {
    HittingDensity d{n, HittingKind::Lateral};
    EXPECT_NEAR(d.survival(1e-12), 1.0, 1e-6);
    EXPECT_NEAR(d.survival(1e12), 0.0, 1e-5);
    const double t = 2.0, h = 1e-5;
    EXPECT_NEAR(-(d.survival(t + h) - d.survival(t - h)) / (2 * h), d(t), 1e-7);
  }
}

TEST(Kernels, HittingProbabilityExactValues) {
  EXPECT_NEAR(hitting_prob_lateral_before_down(2), 0.5, 1e-8);
  EXPECT_NEAR(hitting_prob_lateral_before_down(0), 1.0, 1e-12);
  for (double n : {1.0, 4.0, 8.0, 32.0}) EXPECT_NEAR(hitting_prob_lateral_before_down(n), hitting_oracle(n), 1e-7);
  double worst = 0, best = 1e9;
  for (double n = 1; n <= 64; n *= 2) {
    const double v = hitting_prob_lateral_before_down(n) * std::sqrt(n * n + 1);
    worst = std::max(worst, v);
    best = std::min(best, v);
  }
  EXPECT_LT(worst / best, 2.0);
}

TEST(Kernels, HittingProbabilityMonteCarlo) {
  std::mt19937_64 gen(12345);
  std::normal_distribution<double> z;
  const int paths = 100000;
  int hits = 0;
  for (int k = 0; k < paths; ++k) {
    const double t_lat = 16.0 / std::pow(z(gen), 2);  // level 4 = n/2 for n = 8
    const double t_down = 1.0 / std::pow(z(gen), 2);
    hits += t_lat < t_down;
  }
  const double p = static_cast<double>(hits) / paths;
  EXPECT_NEAR(hitting_prob_lateral_before_down(8), p, 3 * std::sqrt(p * (1 - p) / paths));
}

TEST(Kernels, InvariantSuitePasses) {
  for (const auto& it : invariant_suite(7))
    if (!it.informational) EXPECT_TRUE(it.pass) << it.name << " value " << it.value;
}
