#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "roughwall/boundary.hpp"
#include "roughwall/grid.hpp"
#include "roughwall/stats.hpp"
#include "roughwall/stokes.hpp"

namespace roughwall::scalar {

/// Rough: data omega on the curve y2 = omega(y1). Flat: data omega(y1) on y2 = 0 (the Dirichlet
/// problem of the optimality argument).
enum class Geometry { Rough, Flat };

struct HarmonicDomain {
  boundary::RoughBoundary boundary;  // periodic
  double top_height = 64;
  stokes::GridParams grid;
  Geometry geometry = Geometry::Rough;
};

struct ScalarCellSolution {
  grid::MappedGrid grid;
  std::vector<double> u;  // (n2 + 1) rows of n1, row 0 holds the wall data
  double top_mean = 0;
  double residual = 0;  // relative residual of the linear system
  int iterations = 0;
  std::vector<double> residual_history;

  double at(int i, int j) const { return u[static_cast<std::size_t>(j) * grid.n1 + grid.wrap(i)]; }
  /// Cubic along each column, per column x_i.
  std::vector<double> row_at(double y) const;
  /// Linear in x between the two neighbouring columns.
  double value_at(double x, double y) const;
  double min() const;
  double max() const;
};

/// Bilinear finite elements on the mapped grid: Dirichlet data omega on the wall, zero flux through
/// the top, lateral periodicity.
ScalarCellSolution solve_harmonic_cell(const HarmonicDomain& domain, double tol = 1e-11);

/// Flat geometry, u(x1, y2) for each height by the exact strip solution of the periodic data (Fourier
/// modes damped by cosh(k (Y - y2)) / cosh(k Y)); Y = infinity gives the half-plane Poisson extension.
std::vector<double> flat_strip_values(const boundary::RoughBoundary& b, const std::vector<double>& heights,
                                      double top_height, double x1 = 0.0);

struct WalkOptions {
  double delta_exit = 1e-3;
  double kill_height = 64;  // reflecting top
  long max_steps = 1000000;
};

struct MCEstimate {
  double estimate = 0;
  double std_error = 0;
  long paths = 0;
  double mean_steps = 0;
};

/// Walk-on-spheres estimate of u(start) for the rough-geometry problem. Path p of member m draws from the
/// stream hash(seed, m, p).
MCEstimate brownian_value(const boundary::RoughBoundary& b, Point2 start, long paths, std::uint64_t seed,
                          std::uint64_t member = 0, const WalkOptions& opt = {});

/// Per-path difference omega1(exit1) - omega2(exit2). With common set both walks share one path until
/// each exits; otherwise the second boundary uses an independent stream.
MCEstimate coupled_difference(const boundary::CoupledPair& pair, Point2 start, long paths, std::uint64_t seed,
                              std::uint64_t member = 0, const WalkOptions& opt = {}, bool common = true);

struct ScalarDecayRow {
  double n = 0;
  double mean = 0;  // mean over pairs of |v(omega1, 0, 0) - v(omega2, 0, 0)|
  double std_error = 0;
  int pairs = 0;
  double sup_norm = 0;  // max |omega| over the pairs
  double bound = 0;     // 2 * sup_norm * 2 * P(T_{n/2} < T_{-1})
};

struct ScalarDecayScan {
  std::vector<ScalarDecayRow> rows;
  stats::DecayFit fit;
};

/// pairs are grouped by their n; member index k of the list seeds pair k.
ScalarDecayScan coupled_decay_scan(const std::vector<boundary::CoupledPair>& pairs, long paths,
                                   std::uint64_t seed, const WalkOptions& opt = {}, int workers = 1);

struct ScalarCLT {
  std::vector<double> heights;
  std::vector<double> variances;  // sample variance of u(., 0, y2)
  std::vector<double> scaled;     // y2 * variance
  std::vector<double> ks_stats;
  std::vector<double> ks_p;
  double alpha = 0;  // ensemble mean of omega(0)
  double alpha_se = 0;
  stats::DecayFit fit;
  std::vector<std::vector<double>> values;  // values[h][m]
};

/// u(0, y2) per member from solve_harmonic_cell; the fit uses heights from fit_from on. Needs M >= 100.
ScalarCLT clt_scan(const std::vector<boundary::RoughBoundary>& ensemble, const std::vector<double>& heights,
                   double top_height, const stokes::GridParams& grid, Geometry geometry = Geometry::Flat,
                   std::size_t fit_from = 0, int workers = 1);

/// G(s) = 1 on |s| <= 1, C2 taper to 0 at |s| = 2.
double tilt_profile(double s);

struct TiltedEnsemble {
  boundary::CovarianceSpec spec;
  double y2 = 1;

  double g(double y1) const;
  /// m(z1, y2) = int rho(z1 - y1) g(y1, y2) dy1.
  double m(double z1) const;
  /// H(y2) = double integral of rho(z1 - y1) g(z1) g(y1).
  double H() const;
};

struct OptimalityRow {
  double y2 = 0;
  double H = 0;
  double sqrt_y2_m0 = 0;   // sqrt(y2) m(0, y2)
  double lower_bound = 0;  // int P(y1, y2) sqrt(y2) m(y1, y2) dy1
  double scaled_variance = 0;
  double ci_low = 0;
  double ci_high = 0;
};

struct OptimalityReport {
  std::vector<OptimalityRow> rows;
  double rho_integral = 0;
  double H_ratio = 0;  // max H / min H
  bool H_bounded = false;
  double floor = 0;  // min over heights of y2 * variance
  double floor_ci_low = 0;
  double floor_ci_high = 0;
  ScalarCLT clt;
};

/// Tilt diagnostics per height plus the variance floor of the base ensemble (flat problem). The floor
/// CI is a percentile bootstrap over members.
OptimalityReport optimality_experiment(const boundary::CovarianceSpec& spec,
                                       const std::vector<boundary::RoughBoundary>& ensemble,
                                       const std::vector<double>& heights, double top_height,
                                       const stokes::GridParams& grid, std::uint64_t seed, int workers = 1);

}  // namespace roughwall::scalar
