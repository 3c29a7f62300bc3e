#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace roughwall::stokes {
struct CellSolution;
}

namespace roughwall::stats {

/// Least-squares line through stored (x, y) points, usually (log x, log y).
struct DecayFit {
  double exponent = 0;
  double intercept = 0;
  double r_squared = 0;
  double ci95 = 0;  // bootstrap half-width of the exponent
  std::vector<std::pair<double, double>> points;
};

struct MeanSE {
  double mean = 0;
  double std_error = 0;
};

MeanSE mean_se(const std::vector<double>& v);
double sample_variance(const std::vector<double>& v);

/// OLS on the given points, plus a 500-resample pairs bootstrap for the exponent CI.
DecayFit fit_line(std::vector<std::pair<double, double>> points, std::uint64_t seed = 0x51a7ULL,
                  int resamples = 500);
/// Fit of log y against log x.
DecayFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y, std::uint64_t seed = 0x51a7ULL);
/// Fit of log y against x.
DecayFit fit_semilog(const std::vector<double>& x, const std::vector<double>& y, std::uint64_t seed = 0x51a7ULL);

MeanSE estimate_alpha(const std::vector<double>& alphas);
MeanSE estimate_alpha(const std::vector<stokes::CellSolution>& ensemble);

struct CLTReport {
  std::vector<double> heights;
  std::vector<double> variances;
  std::vector<double> scaled;  // heights^(2|beta|+1) * variances
  std::array<int, 2> beta{0, 0};
  std::vector<double> ks_stats;
  std::vector<double> ks_p;
  double sigma_beta_estimate = 0;
  DecayFit fit;
};

/// deviations[h][m] is the vector d^beta (v - (alpha,0)) of sample m at height h. Needs >= 3 heights and
/// >= 100 samples per height. The fit uses heights from index fit_from on.
CLTReport variance_decay_fit(const std::vector<double>& heights,
                             const std::vector<std::vector<std::array<double, 2>>>& deviations,
                             std::array<int, 2> beta = {0, 0}, std::size_t fit_from = 0);

/// Fit of E|V(t)|^2 against t over t in [t_min, t_max]. samples[m][k] is V at t_grid[k] for sample m.
DecayFit v_growth_check(const std::vector<double>& t_grid,
                        const std::vector<std::vector<std::array<double, 2>>>& samples, double t_min,
                        double t_max);

struct CorrelationRow {
  int lag = 0;
  double value = 0;
  double std_error = 0;
};

/// Centered E(X_{i+n} X_i) per lag in [-max_lag, max_lag]. Sequences are treated as periodic (ring) when
/// periodic is set; otherwise only origins with both indices in range are used.
std::vector<CorrelationRow> correlation_scan(const std::vector<std::vector<double>>& x, int max_lag,
                                             bool periodic = true);

/// law name -> (eps, L2 error) pairs. Needs >= 4 eps values per law.
std::map<std::string, DecayFit> error_scaling_fit(
    const std::map<std::string, std::vector<std::pair<double, double>>>& errors);

struct NormalityResult {
  double ks_statistic = 0;
  double p_value = 1;
  bool degenerate = false;
};

/// One-sample KS against the normal with fitted mean and variance, Lilliefors p-value
/// (Dallal-Wilkinson approximation). Needs >= 100 samples unless degenerate.
NormalityResult normality_test(std::vector<double> samples);

struct TwoSampleKS {
  double statistic = 0;
  double p_value = 1;
};

TwoSampleKS ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Kolmogorov distribution tail P(K > lambda).
double kolmogorov_tail(double lambda);

/// Percentile bootstrap CI of the mean.
std::pair<double, double> bootstrap_mean_ci(const std::vector<double>& v, double level = 0.95,
                                            int resamples = 500, std::uint64_t seed = 0xb007ULL);

}  // namespace roughwall::stats
