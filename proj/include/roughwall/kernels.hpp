#pragma once

#include <array>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "roughwall/common.hpp"

namespace roughwall::kernels {

/// Row-major 2x2 matrix: {m11, m12, m21, m22}.
struct KernelMatrix {
  std::array<double, 4> e{};

  double operator()(int i, int j) const { return e[static_cast<std::size_t>(2 * i + j)]; }
  double max_abs() const;
};

/// Half-plane Stokes Poisson kernel G(t, y2) = 2 y2 / (pi (t^2+y2^2)^2) [[t^2, t y2], [t y2, y2^2]].
KernelMatrix stokes_poisson(double t, double y2);

/// d^b1/dt^b1 d^b2/dy2^b2 G for b1 + b2 <= 3.
KernelMatrix stokes_poisson_deriv(int b1, int b2, double t, double y2);

/// Fourier transform int G(t, y2) e^{-ikt} dt, row-major.
std::array<std::complex<double>, 4> stokes_poisson_hat(double k, double y2);

/// Jump data for the flat Green function: the printed matrix with its y2 entries taken at y2 = 0.
KernelMatrix stokes_jump_data(Point2 z, double y1);

/// (1/pi) y2 / (t^2 + y2^2).
double harmonic_poisson(double t, double y2);

enum class HittingKind { Lateral, Downward };

/// First-passage density of a standard Brownian motion. Lateral uses level n/2, Downward level 1.
struct HittingDensity {
  double level_param = 1.0;  // n for Lateral; ignored for Downward
  HittingKind kind = HittingKind::Lateral;

  double level() const { return kind == HittingKind::Lateral ? 0.5 * level_param : 1.0; }
  double operator()(double t) const;
  /// P(T > t).
  double survival(double t) const;
};

/// P(T_{n/2} < T_{-1}) for independent Brownian motions, by quadrature of density times survival.
double hitting_prob_lateral_before_down(double n);

/// int_R f(t) dt via t = scale * tan(theta) and adaptive Gauss-Kronrod.
double integrate_line(const std::function<double(double)>& f, double scale, double tol = 1e-12);

struct CheckItem {
  std::string name;
  double value = 0;
  double tolerance = 0;
  bool pass = false;
  bool informational = false;  // reported, never gating
  std::string note;
};

/// Kernel invariant suite: constant reproduction, derivative/finite-difference agreement at random points,
/// density normalisation, Poisson normalisation, hitting bound shape, jump-data cross-check.
std::vector<CheckItem> invariant_suite(std::uint64_t seed);

}  // namespace roughwall::kernels
