#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "roughwall/boundary.hpp"
#include "roughwall/stats.hpp"

using namespace roughwall;
using namespace roughwall::boundary;

namespace {

CovarianceSpec default_spec() { return CovarianceSpec{}; }
BoundaryMap default_map() { return BoundaryMap{}; }

// Gaussian value behind a tanh-mapped sample.
double field_of(const BoundaryMap& m, double omega) { return std::atanh((omega - m.center) / m.half_range); }

// rho(lag) by direct trapezoid convolution of the bump.
double convolution_oracle(const CovarianceSpec& s, double lag) {
  const int n = 20000;
  const double a = -s.bump_half_width, b = s.bump_half_width, h = (b - a) / n;
  double acc = 0;
  for (int i = 0; i <= n; ++i) {
    const double x = a + i * h;
    acc += (i == 0 || i == n ? 0.5 : 1.0) * s.bump(x) * s.bump(x + lag);
  }
  return acc * h;
}

}  // namespace

TEST(Boundary, SinusoidClosedFormAndRange) {
  const double L = 4, d = 0.6;
  const auto b = sample_periodic_boundary(PeriodicShape::Sinusoid, L, d, 3, 128);
  for (std::size_t i = 0; i < b.size(); ++i) {
    EXPECT_NEAR(b.omega[i], -(1 + d * std::cos(2 * kPi * b.x(i) / L)) / 2, 1e-15);
    EXPECT_GT(b.omega[i], -1);
    EXPECT_LT(b.omega[i], 0);
  }
  EXPECT_NEAR(b.min(), -(1 + d) / 2, 1e-12);
  EXPECT_NEAR(b.max(), -(1 - d) / 2, 1e-12);
}

TEST(Boundary, SinusoidLipschitzMatchesFiniteDifferences) {
  const double L = 3, d = 0.4;
  const auto b = sample_periodic_boundary(PeriodicShape::Sinusoid, L, d, 1, 512);
  double fd = 0;
  for (std::size_t i = 0; i + 1 < b.size(); ++i) fd = std::max(fd, std::abs(b.omega[i + 1] - b.omega[i]) / b.step);
  EXPECT_NEAR(b.lipschitz_K, kPi * d / L, 0.01 * kPi * d / L);
  EXPECT_NEAR(fd, kPi * d / L, 0.01 * kPi * d / L);
}

TEST(Boundary, DepthOutsideRangeIsRejected) {
  EXPECT_THROW(sample_periodic_boundary(PeriodicShape::Sinusoid, 1, 1.0, 0), ConfigError);
  EXPECT_THROW(sample_periodic_boundary(PeriodicShape::BumpTrain, 1, 0.0, 0), ConfigError);
}

TEST(Boundary, TranslateGroupLaw) {
  const auto p = sample_periodic_boundary(PeriodicShape::BumpTrain, 2, 0.5, 0, 64);
  const auto full = translate(p, 2.0);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_DOUBLE_EQ(full.omega[i], p.omega[i]);

  const auto w = sample_boundary(default_spec(), default_map(), 16, 9);
  const auto id = translate(w, 0.0);
  EXPECT_EQ(id.omega, w.omega);
  const auto back = translate(translate(w, 1.0), -1.0);
  for (std::size_t i = 0; i < back.size(); ++i) EXPECT_DOUBLE_EQ(back.value_at(back.x(i)), w.value_at(back.x(i)));
  const auto t = translate(w, 0.5);
  EXPECT_DOUBLE_EQ(t.omega[0], w.value_at(t.x(0) + 0.5));
}

TEST(Boundary, ZeroAmplitudeGivesConstantCenter) {
  CovarianceSpec s;
  s.amplitude = 0;
  const auto b = sample_boundary(s, default_map(), 10, 4);
  for (double v : b.omega) EXPECT_DOUBLE_EQ(v, default_map().center);
}

TEST(Boundary, WindowShorterThanTwoKappaIsRejected) {
  EXPECT_THROW(sample_boundary(default_spec(), default_map(), 3.0, 1), ConfigError);
}

TEST(Boundary, CovarianceMatchesDirectConvolution) {
  const auto s = default_spec();
  for (double lag : {0.0, 0.5, 1.25}) EXPECT_NEAR(s.covariance(lag), convolution_oracle(s, lag), 1e-7);
  EXPECT_NEAR(s.covariance(0), s.amplitude * s.amplitude, 1e-9);
  EXPECT_DOUBLE_EQ(s.covariance(2.5), 0.0);
}

TEST(Boundary, EmpiricalCovarianceOfTheField) {
  const auto s = default_spec();
  const auto m = default_map();
  const int samples = 10000;
  const int lag_far = static_cast<int>(std::round(2.5 / s.grid_step));
  std::vector<double> x0, prod_far;
  for (int k = 0; k < samples; ++k) {
    const auto b = sample_boundary(s, m, 8, 1000 + k);
    const double a = field_of(m, b.omega[0]);
    x0.push_back(a * a);
    prod_far.push_back(a * field_of(m, b.omega[static_cast<std::size_t>(lag_far)]));
  }
  const auto v0 = stats::mean_se(x0);
  const auto vf = stats::mean_se(prod_far);
  EXPECT_NEAR(v0.mean, s.lattice_covariance(0), 3 * v0.std_error);
  EXPECT_NEAR(vf.mean, 0.0, 3 * vf.std_error);
}

TEST(Boundary, StationarityUnderShiftedWindows) {
  const auto s = default_spec();
  const auto a = sample_boundary(s, default_map(), 12, 77, 0.0);
  const auto b = sample_boundary(s, default_map(), 12, 77, s.grid_step);
  for (std::size_t i = 0; i + 1 < a.size(); ++i) EXPECT_DOUBLE_EQ(a.omega[i + 1], b.omega[i]);
}

TEST(Boundary, SecondDifferencesConvergeAtSecondOrder) {
  const auto s = default_spec();
  std::vector<double> errs;
  // x = 4.125 keeps the stencils clear of the lattice points where the bump support ends
  for (double h : {1.0 / 16, 1.0 / 32, 1.0 / 64}) {
    const auto b = sample_boundary(s, default_map(), 8, 5, 0.0, h);
    const std::size_t i = static_cast<std::size_t>(std::round(4.125 / h));
    const double d2 = (b.omega[i + 1] - 2 * b.omega[i] + b.omega[i - 1]) / (h * h);
    errs.push_back(std::abs(d2 - b.omega2[i]));
  }
  EXPECT_GT(errs[0] / errs[1], 3.0);
  EXPECT_GT(errs[1] / errs[2], 3.0);
}

TEST(Boundary, RangeAndFirstDerivativeConsistency) {
  const auto b = sample_periodized_boundary(default_spec(), default_map(), 64, 8, 0.0625);
  double worst = 0;
  for (std::size_t i = 0; i + 1 < b.size(); ++i) {
    EXPECT_GT(b.omega[i], -1);
    EXPECT_LT(b.omega[i], 0);
    EXPECT_LE(std::abs(b.omega1[i]), b.lipschitz_K + 1e-15);
    worst = std::max(worst, std::abs((b.omega[i + 1] - b.omega[i]) / b.step - b.omega1[i]));
  }
  EXPECT_LT(worst, 2 * b.step * b.c2a_norm_bound);
  // seam
  const double L = *b.period;
  EXPECT_NEAR(b.value_at(b.x0 - 1e-9), b.value_at(b.x0 + L - 1e-9), 1e-9);
}

TEST(Boundary, CoupledPairAgreesInsideAndDiffersOutside) {
  const auto s = default_spec();
  for (bool periodic : {false, true}) {
    const auto p = couple_pair(s, default_map(), 6, 64, 21, periodic);
    bool differs = false;
    for (std::size_t i = 0; i < p.left.size(); ++i) {
      const double x = p.left.x(i);
      if (std::abs(x) <= 6) {
        EXPECT_DOUBLE_EQ(p.left.omega[i], p.right.omega[i]) << x;
      } else if (std::abs(x) > 6 + 2 * s.kappa && p.left.omega[i] != p.right.omega[i]) {
        differs = true;
      }
    }
    EXPECT_TRUE(differs);
  }
}

TEST(Boundary, CouplingBeyondWindowIsFullAgreement) {
  const auto p = couple_pair(default_spec(), default_map(), 40, 32, 2, true);
  EXPECT_EQ(p.left.omega, p.right.omega);
}

TEST(Boundary, CoupledTailsAreUncorrelated) {
  const auto s = default_spec();
  std::vector<double> prod;
  for (int k = 0; k < 1000; ++k) {
    const auto p = couple_pair(s, default_map(), 4, 32, 500 + k);
    const std::size_t i = p.left.size() - 3;  // x near 16 > n + 2 kappa
    prod.push_back((p.left.omega[i] - default_map().center) * (p.right.omega[i] - default_map().center));
  }
  const auto r = stats::mean_se(prod);
  EXPECT_NEAR(r.mean, 0.0, 3 * r.std_error);
}

TEST(Boundary, CouplingMarginalMatchesIndependentDraws) {
  const auto s = default_spec();
  std::vector<double> right, indep;
  for (int k = 0; k < 400; ++k) {
    right.push_back(couple_pair(s, default_map(), 4, 32, 3000 + k).right.value_at(10.0));
    indep.push_back(sample_boundary(s, default_map(), 32, 9000 + k, -16.0).value_at(10.0));
  }
  EXPECT_GT(stats::ks_two_sample(right, indep).p_value, 0.01);
}

TEST(Boundary, CsvRoundTripSkipsComments) {
  const auto b = sample_periodized_boundary(default_spec(), default_map(), 16, 3);
  std::stringstream ss;
  ss << "# seed=3\n";
  write_csv(b, ss);
  const auto r = read_csv(ss, 16.0);
  ASSERT_EQ(r.size(), b.size());
  for (std::size_t i = 0; i < b.size(); ++i) EXPECT_DOUBLE_EQ(r.omega2[i], b.omega2[i]);
  EXPECT_NEAR(r.step, b.step, 1e-14);
}

TEST(Boundary, CacheStoresAndReloads) {
  const auto dir = std::filesystem::temp_directory_path() / "roughwall_cache_test";
  std::filesystem::remove_all(dir);
  BoundaryCache cache(dir);
  const auto s = default_spec();
  int calls = 0;
  auto sampler = [&] {
    ++calls;
    return sample_periodized_boundary(s, default_map(), 16, 11);
  };
  const auto a = cache.get_or_sample(s.hash(), 11, sampler);
  const auto b = cache.get_or_sample(s.hash(), 11, sampler);
  EXPECT_EQ(calls, 1);
  EXPECT_EQ(a.omega, b.omega);
  EXPECT_EQ(a.period, b.period);
  std::filesystem::remove_all(dir);
}

TEST(Boundary, RescaleKeepsSlopes) {
  const auto b = sample_periodic_boundary(PeriodicShape::Sinusoid, 4, 0.5, 0);
  const auto r = rescale(b, 0.25);
  EXPECT_DOUBLE_EQ(*r.period, 1.0);
  EXPECT_NEAR(r.lipschitz_K, b.lipschitz_K, 1e-12);
  EXPECT_NEAR(r.value_at(0.3), 0.25 * b.value_at(1.2), 1e-12);
}
