#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "roughwall/common.hpp"
#include "roughwall/stats.hpp"

using namespace roughwall;
using namespace roughwall::stats;

TEST(Stats, ExactPowerLawIsRecovered) {
  std::vector<double> x{4, 8, 16, 32}, y;
  for (double v : x) y.push_back(3.0 * std::pow(v, -1.25));
  const auto f = fit_loglog(x, y);
  EXPECT_NEAR(f.exponent, -1.25, 1e-12);
  EXPECT_NEAR(std::exp(f.intercept), 3.0, 1e-10);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
  EXPECT_NEAR(f.ci95, 0.0, 1e-9);
}

TEST(Stats, SemilogSlope) {
  std::vector<double> x{1, 2, 3, 4, 5}, y;
  for (double v : x) y.push_back(0.2 * std::exp(-0.7 * v));
  EXPECT_NEAR(fit_semilog(x, y).exponent, -0.7, 1e-12);
}

TEST(Stats, MeanAndVariance) {
  const std::vector<double> v{1, 2, 3, 4};
  const auto m = mean_se(v);
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_NEAR(sample_variance(v), 5.0 / 3.0, 1e-15);
  EXPECT_NEAR(m.std_error, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
}

TEST(Stats, FitIsDeterministic) {
  std::vector<std::pair<double, double>> pts{{0, 1.0}, {1, 0.1}, {2, -1.3}, {3, -1.9}};
  const auto a = fit_line(pts, 9), b = fit_line(pts, 9);
  EXPECT_EQ(a.ci95, b.ci95);
  EXPECT_GT(a.ci95, 0);
}

TEST(Stats, NormalityTest) {
  std::mt19937_64 g(1);
  std::normal_distribution<double> n(2.0, 3.0);
  std::exponential_distribution<double> e(1.0);
  std::vector<double> a, b;
  for (int k = 0; k < 400; ++k) {
    a.push_back(n(g));
    b.push_back(e(g));
  }
  EXPECT_GT(normality_test(a).p_value, 0.01);
  EXPECT_LT(normality_test(b).p_value, 0.01);
  EXPECT_THROW(normality_test({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}), ConfigError);
  EXPECT_TRUE(normality_test(std::vector<double>(200, 1.0)).degenerate);
}

TEST(Stats, KolmogorovTail) {
  EXPECT_NEAR(kolmogorov_tail(1.3581), 0.05, 1e-3);
  EXPECT_NEAR(kolmogorov_tail(1.6276), 0.01, 1e-3);
}

TEST(Stats, TwoSampleKS) {
  std::mt19937_64 g(2);
  std::normal_distribution<double> n;
  std::vector<double> a, b, c;
  for (int k = 0; k < 500; ++k) {
    a.push_back(n(g));
    b.push_back(n(g));
    c.push_back(n(g) + 0.5);
  }
  EXPECT_GT(ks_two_sample(a, b).p_value, 0.01);
  EXPECT_LT(ks_two_sample(a, c).p_value, 1e-4);
}

TEST(Stats, CorrelationOfMovingAverage) {
  // X_i = Z_i + Z_{i+1}: covariance 2 at lag 0, 1 at lag 1, 0 beyond
  std::mt19937_64 g(3);
  std::normal_distribution<double> n;
  std::vector<std::vector<double>> seqs;
  for (int s = 0; s < 40; ++s) {
    std::vector<double> z(1001), x(1000);
    for (auto& v : z) v = n(g);
    for (int i = 0; i < 1000; ++i) x[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i)] + z[static_cast<std::size_t>(i + 1)];
    seqs.push_back(x);
  }
  const auto rows = correlation_scan(seqs, 3, false);
  for (const auto& r : rows) {
    const double expect = r.lag == 0 ? 2.0 : (std::abs(r.lag) == 1 ? 1.0 : 0.0);
    EXPECT_NEAR(r.value, expect, 4 * r.std_error + 0.02) << r.lag;
  }
}

TEST(Stats, VarianceDecayOnSyntheticField) {
  std::mt19937_64 g(4);
  std::normal_distribution<double> n;
  const std::vector<double> hs{4, 8, 16, 32};
  std::vector<std::vector<std::array<double, 2>>> dev(hs.size());
  for (std::size_t h = 0; h < hs.size(); ++h)
    for (int m = 0; m < 2000; ++m) dev[h].push_back({n(g) / std::sqrt(hs[h]), 0.0});
  const auto r = variance_decay_fit(hs, dev);
  EXPECT_NEAR(r.fit.exponent, -1.0, 0.1);
  EXPECT_NEAR(r.sigma_beta_estimate, 1.0, 0.1);
  EXPECT_THROW(variance_decay_fit({1, 2}, {{}, {}}), ConfigError);
}

TEST(Stats, RandomWalkGrowsLinearly) {
  std::mt19937_64 g(5);
  std::normal_distribution<double> n;
  std::vector<double> t;
  for (int k = 1; k <= 64; ++k) t.push_back(k);
  std::vector<std::vector<std::array<double, 2>>> s(2000);
  for (auto& path : s) {
    double a = 0;
    for (std::size_t k = 0; k < t.size(); ++k) path.push_back({a += n(g), 0.0});
  }
  EXPECT_NEAR(v_growth_check(t, s, 4, 64).exponent, 1.0, 0.1);
}

TEST(Stats, ErrorScalingNeedsFourPoints) {
  std::map<std::string, std::vector<std::pair<double, double>>> e;
  e["a"] = {{0.5, 0.5}, {0.25, 0.25}, {0.125, 0.125}};
  EXPECT_THROW(error_scaling_fit(e), ConfigError);
  e["a"].push_back({0.0625, 0.0625});
  EXPECT_NEAR(error_scaling_fit(e).at("a").exponent, 1.0, 1e-12);
}

TEST(Stats, BootstrapCIBracketsMean) {
  std::vector<double> v;
  for (int k = 0; k < 100; ++k) v.push_back(k % 7);
  const auto [lo, hi] = bootstrap_mean_ci(v);
  const double m = mean_se(v).mean;
  EXPECT_LT(lo, m);
  EXPECT_GT(hi, m);
}
