#include "roughwall/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "roughwall/common.hpp"
#include "roughwall/stokes.hpp"

namespace roughwall::stats {

namespace {

struct Ols {
  double slope = 0, intercept = 0, r2 = 0;
  bool ok = false;
};

Ols ols(const std::vector<std::pair<double, double>>& p) {
  Ols o;
  const auto n = static_cast<double>(p.size());
  if (p.size() < 2) return o;
  double mx = 0, my = 0;
  for (const auto& [x, y] : p) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& [x, y] : p) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (sxx <= 0) return o;
  o.slope = sxy / sxx;
  o.intercept = my - o.slope * mx;
  double sse = 0;
  for (const auto& [x, y] : p) {
    const double e = y - (o.intercept + o.slope * x);
    sse += e * e;
  }
  o.r2 = syy > 0 ? std::clamp(1 - sse / syy, 0.0, 1.0) : 1.0;
  o.ok = true;
  return o;
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double f = pos - static_cast<double>(i);
  return i + 1 < v.size() ? v[i] * (1 - f) + v[i + 1] * f : v[i];
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

MeanSE mean_se(const std::vector<double>& v) {
  MeanSE r;
  if (v.empty()) return r;
  r.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) r.std_error = std::sqrt(sample_variance(v) / static_cast<double>(v.size()));
  return r;
}

double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

DecayFit fit_line(std::vector<std::pair<double, double>> points, std::uint64_t seed, int resamples) {
  DecayFit fit;
  const Ols o = ols(points);
  if (!o.ok) throw ConfigError("fit needs at least two distinct abscissas");
  fit.exponent = o.slope;
  fit.intercept = o.intercept;
  fit.r_squared = o.r2;
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
  std::vector<double> slopes;
  std::vector<std::pair<double, double>> boot(points.size());
  for (int b = 0; b < resamples; ++b) {
    for (auto& q : boot) q = points[pick(gen)];
    const Ols ob = ols(boot);
    if (ob.ok) slopes.push_back(ob.slope);
  }
  if (slopes.size() >= 10) fit.ci95 = 0.5 * (quantile(slopes, 0.975) - quantile(slopes, 0.025));
  fit.points = std::move(points);
  return fit;
}

DecayFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y, std::uint64_t seed) {
  if (x.size() != y.size()) throw ConfigError("fit: x and y sizes differ");
  std::vector<std::pair<double, double>> p;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) throw DomainError("log-log fit needs positive data");
    p.emplace_back(std::log(x[i]), std::log(y[i]));
  }
  return fit_line(std::move(p), seed);
}

DecayFit fit_semilog(const std::vector<double>& x, const std::vector<double>& y, std::uint64_t seed) {
  if (x.size() != y.size()) throw ConfigError("fit: x and y sizes differ");
  std::vector<std::pair<double, double>> p;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(y[i] > 0)) throw DomainError("semilog fit needs positive data");
    p.emplace_back(x[i], std::log(y[i]));
  }
  return fit_line(std::move(p), seed);
}

MeanSE estimate_alpha(const std::vector<double>& alphas) {
  if (alphas.size() < 2) throw ConfigError("estimate_alpha needs at least two solutions");
  return mean_se(alphas);
}

MeanSE estimate_alpha(const std::vector<stokes::CellSolution>& ensemble) {
  std::vector<double> a;
  a.reserve(ensemble.size());
  for (const auto& s : ensemble) a.push_back(s.alpha);
  return estimate_alpha(a);
}

CLTReport variance_decay_fit(const std::vector<double>& heights,
                             const std::vector<std::vector<std::array<double, 2>>>& deviations,
                             std::array<int, 2> beta, std::size_t fit_from) {
  if (heights.size() < 3) throw ConfigError("variance_decay_fit needs at least 3 heights");
  if (deviations.size() != heights.size()) throw ConfigError("one deviation list per height expected");
  CLTReport rep;
  rep.heights = heights;
  rep.beta = beta;
  const double power = 2.0 * (beta[0] + beta[1]) + 1.0;
  for (std::size_t h = 0; h < heights.size(); ++h) {
    const auto& d = deviations[h];
    if (d.size() < 100) throw ConfigError("variance_decay_fit needs at least 100 samples per height");
    double s = 0;
    std::vector<double> first;
    first.reserve(d.size());
    for (const auto& v : d) {
      s += v[0] * v[0] + v[1] * v[1];
      first.push_back(v[0]);
    }
    const double var = s / static_cast<double>(d.size());
    rep.variances.push_back(var);
    rep.scaled.push_back(std::pow(heights[h], power) * var);
    const NormalityResult nr = normality_test(first);
    rep.ks_stats.push_back(nr.ks_statistic);
    rep.ks_p.push_back(nr.p_value);
  }
  const std::size_t top = heights.size() / 2;
  double plateau = 0;
  for (std::size_t h = top; h < heights.size(); ++h) plateau += rep.scaled[h];
  rep.sigma_beta_estimate = plateau / static_cast<double>(heights.size() - top);
  if (fit_from + 2 > heights.size()) throw ConfigError("fit window leaves fewer than 2 heights");
  std::vector<double> hx(heights.begin() + static_cast<std::ptrdiff_t>(fit_from), heights.end());
  std::vector<double> vy(rep.variances.begin() + static_cast<std::ptrdiff_t>(fit_from), rep.variances.end());
  if (std::all_of(vy.begin(), vy.end(), [](double v) { return v > 0; })) rep.fit = fit_loglog(hx, vy);
  return rep;
}

DecayFit v_growth_check(const std::vector<double>& t_grid,
                        const std::vector<std::vector<std::array<double, 2>>>& samples, double t_min,
                        double t_max) {
  if (samples.empty()) throw ConfigError("v_growth_check needs samples");
  std::vector<double> ts, ms;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    if (t_grid[k] < t_min || t_grid[k] > t_max) continue;
    double s = 0;
    for (const auto& v : samples) {
      if (v.size() != t_grid.size()) throw ConfigError("V sample length differs from t grid");
      s += v[k][0] * v[k][0] + v[k][1] * v[k][1];
    }
    ts.push_back(t_grid[k]);
    ms.push_back(s / static_cast<double>(samples.size()));
  }
  if (ts.size() < 2) throw ConfigError("v_growth_check: fewer than two t values in range");
  if (std::all_of(ms.begin(), ms.end(), [](double v) { return v == 0.0; })) {
    DecayFit flat;
    for (std::size_t k = 0; k < ts.size(); ++k) flat.points.emplace_back(std::log(ts[k]), 0.0);
    return flat;
  }
  return fit_loglog(ts, ms);
}

std::vector<CorrelationRow> correlation_scan(const std::vector<std::vector<double>>& x, int max_lag,
                                             bool periodic) {
  if (x.empty()) throw ConfigError("correlation_scan needs sequences");
  double mu = 0;
  std::size_t cnt = 0;
  for (const auto& s : x) {
    for (double v : s) mu += v;
    cnt += s.size();
  }
  mu /= static_cast<double>(cnt);
  std::vector<CorrelationRow> rows;
  for (int lag = -max_lag; lag <= max_lag; ++lag) {
    std::vector<double> per;
    for (const auto& s : x) {
      const auto n = static_cast<int>(s.size());
      double acc = 0;
      int used = 0;
      for (int i = 0; i < n; ++i) {
        int j = i + lag;
        if (periodic) {
          j = ((j % n) + n) % n;
        } else if (j < 0 || j >= n) {
          continue;
        }
        acc += (s[static_cast<std::size_t>(j)] - mu) * (s[static_cast<std::size_t>(i)] - mu);
        ++used;
      }
      if (used > 0) per.push_back(acc / used);
    }
    const MeanSE m = mean_se(per);
    rows.push_back({lag, m.mean, m.std_error});
  }
  return rows;
}

std::map<std::string, DecayFit> error_scaling_fit(
    const std::map<std::string, std::vector<std::pair<double, double>>>& errors) {
  std::map<std::string, DecayFit> out;
  for (const auto& [law, pts] : errors) {
    if (pts.size() < 4) throw ConfigError("error_scaling_fit needs at least 4 eps values for " + law);
    std::vector<double> e, v;
    for (const auto& [eps, err] : pts) {
      e.push_back(eps);
      v.push_back(err);
    }
    out[law] = fit_loglog(e, v);
  }
  return out;
}

NormalityResult normality_test(std::vector<double> x) {
  NormalityResult r;
  const MeanSE m = mean_se(x);
  const double sd = std::sqrt(sample_variance(x));
  if (x.size() < 2 || !(sd > 1e-14 * std::max(1.0, std::abs(m.mean)))) {
    r.degenerate = true;
    r.p_value = 1;
    return r;
  }
  if (x.size() < 100) throw ConfigError("normality_test needs at least 100 samples");
  std::sort(x.begin(), x.end());
  const auto n = static_cast<double>(x.size());
  double d = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = normal_cdf((x[i] - m.mean) / sd);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  r.ks_statistic = d;
  const double kd = n <= 100 ? d : d * std::pow(n / 100, 0.49);
  const double nd = std::min(n, 100.0);
  double p = std::exp(-7.01256 * kd * kd * (nd + 2.78019) + 2.99587 * kd * std::sqrt(nd + 2.78019) -
                      0.122119 + 0.974598 / std::sqrt(nd) + 1.67997 / nd);
  if (p > 0.1) {
    const double kk = (std::sqrt(n) - 0.01 + 0.85 / std::sqrt(n)) * d;
    if (kk <= 0.302) {
      p = 1;
    } else if (kk <= 0.5) {
      p = 2.76773 - 19.828315 * kk + 80.709644 * kk * kk - 138.55152 * kk * kk * kk + 81.218052 * std::pow(kk, 4);
    } else if (kk <= 0.9) {
      p = -4.901232 + 40.662806 * kk - 97.490286 * kk * kk + 94.029866 * kk * kk * kk - 32.355711 * std::pow(kk, 4);
    } else if (kk <= 1.31) {
      p = 6.198765 - 19.558097 * kk + 23.186922 * kk * kk - 12.234627 * kk * kk * kk + 2.423045 * std::pow(kk, 4);
    } else {
      p = 0;
    }
  }
  r.p_value = std::clamp(p, 0.0, 1.0);
  return r;
}

double kolmogorov_tail(double lambda) {
  if (lambda < 0.2) return 1.0;
  double s = 0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

TwoSampleKS ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ConfigError("ks_two_sample needs non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const auto na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return {d, kolmogorov_tail((ne + 0.12 + 0.11 / ne) * d)};
}

std::pair<double, double> bootstrap_mean_ci(const std::vector<double>& v, double level, int resamples,
                                            std::uint64_t seed) {
  if (v.empty()) throw ConfigError("bootstrap needs data");
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<std::size_t> pick(0, v.size() - 1);
  std::vector<double> means;
  means.reserve(static_cast<std::size_t>(resamples));
  for (int b = 0; b < resamples; ++b) {
    double s = 0;
    for (std::size_t k = 0; k < v.size(); ++k) s += v[pick(gen)];
    means.push_back(s / static_cast<double>(v.size()));
  }
  const double a = 0.5 * (1 - level);
  return {quantile(means, a), quantile(means, 1 - a)};
}

}  // namespace roughwall::stats
