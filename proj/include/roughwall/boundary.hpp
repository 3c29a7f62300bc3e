#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "roughwall/common.hpp"

namespace roughwall::boundary {

/// Stationary Gaussian field X = f * white noise, with base bump
/// f(x) = c (1 - (x/r)^2)^3 on |x| <= r. The covariance rho = f * f is supported
/// on [-2r, 2r], so samples further apart than kappa >= 2r are independent.
struct CovarianceSpec {
  double bump_half_width = 1.0;
  double amplitude = 0.6;  // sqrt(rho(0))
  double kappa = 2.0;
  double grid_step = 0.25;  // innovation lattice spacing

  void validate() const;
  std::uint64_t hash() const;

  double bump(double x) const;
  double bump_d1(double x) const;
  double bump_d2(double x) const;
  /// Continuum covariance rho(lag) = int f(s) f(s + lag) ds.
  double covariance(double lag) const;
  /// Covariance of the lattice field at lag k * grid_step (exact for sampled fields).
  double lattice_covariance(int k) const;
  /// int rho = (int f)^2.
  double covariance_integral() const;
};

enum class MapKind { ScaledTanh, ScaledAtan };

/// Smooth increasing map from the Gaussian value X to a boundary height in (-1, 0).
struct BoundaryMap {
  MapKind kind = MapKind::ScaledTanh;
  double center = -0.5;
  double half_range = 0.3;

  void validate() const;
  double value(double x) const;
  double d1(double x) const;
  double d2(double x) const;
};

struct RoughBoundary {
  double x0 = 0.0;
  double step = 0.25;
  std::vector<double> omega;
  std::vector<double> omega1;
  std::vector<double> omega2;
  std::optional<double> period;  // set when samples cover exactly one period
  double lipschitz_K = 0.0;
  double c2a_norm_bound = 0.0;  // max |omega|,|omega'|,|omega''| plus a discrete Hoelder quotient of omega''

  std::size_t size() const { return omega.size(); }
  double x(std::size_t i) const { return x0 + static_cast<double>(i) * step; }
  double min() const;
  double max() const;
  /// Quintic Hermite interpolation from (omega, omega1, omega2); periodic wrap when period is set.
  double value_at(double x) const;
  double slope_at(double x) const;
  /// Recompute lipschitz_K and c2a_norm_bound from the samples.
  void refresh_norms();
};

struct CoupledPair {
  double n = 0.0;
  RoughBoundary left;
  RoughBoundary right;
};

/// Noise stream ids derived from a user seed.
std::uint64_t left_stream(std::uint64_t seed);
std::uint64_t right_stream(std::uint64_t seed);

/// Gaussian field sample on [x0, x0 + window] with evaluation spacing eval_step
/// (defaults to spec.grid_step). Innovations are indexed by absolute lattice position.
RoughBoundary sample_boundary(const CovarianceSpec& spec, const BoundaryMap& map, double window,
                              std::uint64_t seed, std::optional<double> x0 = std::nullopt,
                              std::optional<double> eval_step = std::nullopt);

/// Field sample periodized on a ring of length period (a multiple of grid_step), one period of samples
/// starting at -period/2.
RoughBoundary sample_periodized_boundary(const CovarianceSpec& spec, const BoundaryMap& map,
                                         double period, std::uint64_t seed,
                                         std::optional<double> eval_step = std::nullopt);

enum class PeriodicShape { Sinusoid, BumpTrain };

RoughBoundary sample_periodic_boundary(PeriodicShape shape, double period, double depth,
                                       std::uint64_t seed, int samples_per_period = 64);

/// Constant boundary omega == height on a periodic grid.
RoughBoundary flat_boundary(double height, double period, double step);

/// Pair agreeing on |x| <= n. Innovations on |x| <= n + kappa are shared; outside they are drawn from
/// an independent stream. When periodic is set the pair lives on a ring of length window centred at 0
/// (|x| is then the ring distance to 0); otherwise on [-window/2, window/2].
CoupledPair couple_pair(const CovarianceSpec& spec, const BoundaryMap& map, double n, double window,
                        std::uint64_t seed, bool periodic = false,
                        std::optional<double> eval_step = std::nullopt);

/// (tau_h omega)(x) = omega(x + h). Windowed boundaries require h to be a multiple of the step and keep
/// the overlap; periodic boundaries accept any h.
RoughBoundary translate(const RoughBoundary& b, double h);

/// omega^eps(x) = eps * omega(x / eps) sampled on the scaled grid.
RoughBoundary rescale(const RoughBoundary& b, double eps);

void write_csv(const RoughBoundary& b, std::ostream& os);
RoughBoundary read_csv(std::istream& is, std::optional<double> period = std::nullopt);

/// Binary cache of sampled boundaries keyed by (spec hash, seed).
class BoundaryCache {
 public:
  explicit BoundaryCache(std::filesystem::path dir);

  std::optional<RoughBoundary> load(std::uint64_t spec_hash, std::uint64_t seed) const;
  void store(std::uint64_t spec_hash, std::uint64_t seed, const RoughBoundary& b) const;
  RoughBoundary get_or_sample(std::uint64_t spec_hash, std::uint64_t seed,
                              const std::function<RoughBoundary()>& sampler) const;

 private:
  std::filesystem::path path_for(std::uint64_t spec_hash, std::uint64_t seed) const;
  std::filesystem::path dir_;
};

}  // namespace roughwall::boundary
