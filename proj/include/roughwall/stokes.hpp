#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "roughwall/boundary.hpp"
#include "roughwall/stats.hpp"
#include "roughwall/stokes_system.hpp"

namespace roughwall::stokes {

/// Vertical resolution: uniform spacing h (also the lateral step) up to uniform_height above the mean
/// wall, then geometric growth capped at max_step. Node heights follow the wall over `blend`.
struct GridParams {
  double h = 0.25;
  double uniform_height = 2.0;
  double growth = 1.08;
  double max_step = 8.0;
  double blend = 3.0;
};

/// Laterally periodic truncated boundary-layer domain above a periodic boundary.
struct CellDomain {
  boundary::RoughBoundary boundary;
  double top_height = 0;  // Y
  GridParams grid;

  void validate() const;
  grid::MappedGrid make_grid() const;
};

struct CellSolution {
  CellDomain domain;
  StokesField field;
  std::vector<double> trace_x;
  std::vector<std::array<double, 2>> trace0;  // v at y2 = 0
  double alpha = 0;       // lateral mean of v1 on the top row
  double trace_mean = 0;  // lateral mean of v1 on y2 = 0
  double residual = 0;
  int iterations = 0;
  double dirichlet_energy = 0;
  double boundary_work = 0;
  std::vector<double> residual_history;

  double period() const { return field.grid.period(); }
};

/// Stokes system with v = -(omega, 0) on the wall, lateral periodicity, stress-free top.
CellSolution solve_cell(const CellDomain& domain, double tol = 1e-9);

/// Largest |v + (omega, 0)| on the wall after quadratic extrapolation of the interior columns.
double wall_residual(const CellSolution& sol);

struct TraceMoments {
  std::vector<double> t;
  std::vector<std::array<double, 2>> V;  // V(t) = int_0^t (v(-s, 0) - (alpha, 0)) ds
  std::vector<std::array<double, 2>> X;  // X_n = int_n^{n+1} v(y1, 0) dy1
};

/// alpha defaults to sol.alpha.
TraceMoments trace_moments(const CellSolution& sol, std::optional<double> alpha = std::nullopt);

/// d^beta v at (x1, y2) from the periodized trace convolved with the Poisson kernel (spectrally).
std::array<double, 2> reconstruct_above(const CellSolution& sol, double y2, std::array<int, 2> beta = {0, 0},
                                        double x1 = 0.0);
/// Same field from a periodic trace, for many heights at x1 = 0.
std::vector<std::array<double, 2>> reconstruct_profile(const std::vector<double>& trace_x,
                                                       const std::vector<std::array<double, 2>>& trace,
                                                       const std::vector<double>& heights,
                                                       std::array<int, 2> beta = {0, 0}, double x1 = 0.0);
/// Direct quadrature of int G(t, y2) v(x1 - t, 0) dt over the periodized trace.
std::array<double, 2> reconstruct_above_quadrature(const CellSolution& sol, double y2, double x1 = 0.0);

enum class ChannelMode { Stokes, NavierStokesPicard };
enum class WallLaw { Rough, Dirichlet, Navier };

struct ChannelSolution {
  StokesField field;
  double epsilon = 0;
  double phi = 0;
  WallLaw wall_law = WallLaw::Rough;
  double pressure_gradient = 0;
  int picard_iterations = 0;
  double max_flux_deviation = 0;
  double max_divergence = 0;
  std::vector<double> picard_history;
};

struct ChannelOptions {
  GridParams cell_grid;  // near-wall grid in cell units, scaled by epsilon
  double max_step = 1.0 / 32;  // largest vertical step in channel units
  double flat_step = 1.0 / 32;  // uniform step of the eps = 0 channel
  double tol = 1e-10;
  int max_picard = 60;
  double picard_tol = 1e-9;
};

/// Channel {eps omega(x1/eps) < x2 < 1} over one lateral boundary period eps*L, no-slip on both walls,
/// flux phi imposed through a uniform pressure gradient. eps = 0 gives the flat channel (0,1) on a
/// uniform grid of step flat_step; the boundary is then ignored.
ChannelSolution solve_channel(const boundary::RoughBoundary& boundary, double epsilon, double phi,
                              ChannelMode mode, const ChannelOptions& opt = {});

/// Shear profile with U(1) = 0, U(0) = slip U'(0) and unit-width flux phi.
struct NavierProfile {
  double phi = 0;
  double slip = 0;

  double operator()(double x2) const;
  double derivative(double x2) const;
  double flux() const;
};

NavierProfile solve_channel_navier(double phi, double slip);

/// Poiseuille profile 6 phi x2 (1 - x2).
double poiseuille(double phi, double x2);

/// psi = a x2^3 + b x2^2 + c x2 + d with c = 0, d constant; r = (d2 psi, -d1 psi), r(x1, 0) = 0 and
/// r(x1, 1) = -(v(x1/eps, 1/eps) - (alpha, 0)).
struct Corrector {
  double epsilon = 0;
  double x0 = 0;
  double step = 0;
  std::vector<double> a, b, c;
  double d = 0;
  std::vector<double> g;  // r1(x1, 1)
  std::vector<double> s;  // a + b, zero-mean antiderivative of v2(x1/eps, 1/eps) in x1
  double mean_v2 = 0;

  double period() const { return step * static_cast<double>(a.size()); }
  double psi(double x1, double x2) const;
  std::array<double, 2> r(double x1, double x2) const;
  /// Discrete r on a staggered grid from node values of psi; exactly divergence free.
  StokesField discrete(const grid::MappedGrid& g) const;
};

Corrector build_corrector(const CellSolution& sol, double epsilon, double tol = 1e-6);

/// u0 + 6 phi eps v(x/eps) + 6 phi eps u1 + 6 phi eps r on the grid of `like`; u1 = alpha x2 (2 - 3 x2) e1.
StokesField build_approximation(const std::function<double(double)>& u0, const CellSolution& cell,
                                const Corrector& corrector, double epsilon, double phi,
                                const grid::MappedGrid& like);

/// L2 norm over {x2_min < x2 < x2_max} per unit lateral width of f - ref.
double l2_error(const StokesField& f, const std::function<std::array<double, 2>(double, double)>& ref,
                double x2_min = 0.0, double x2_max = 1.0);
double l2_difference(const StokesField& a, const StokesField& b, double x2_min = 0.0, double x2_max = 1.0);

/// Green-function domain: periodic lateral window over one boundary period, no-slip top.
struct GreenDomain {
  boundary::RoughBoundary boundary;
  double top_height = 0;
  GridParams grid;
};

struct GreenSample {
  Point2 z;
  std::array<StokesField, 2> response;  // velocity field for a unit force along e1, e2
  double delta_z = 0;
  std::array<int, 2> iterations{0, 0};

  /// G(z, y)[k][l]: component l at y of the response to force e_k.
  std::array<std::array<double, 2>, 2> at(Point2 y) const;
  double norm_at(Point2 y) const;
};

GreenSample estimate_green(const GreenDomain& domain, Point2 z, double tol = 1e-9);

/// Peskin 4-point kernel of unit mass on the integer lattice.
double peskin_phi(double r);

struct GreenRow {
  int sample = 0;
  double separation = 0;
  double g_norm = 0;
  double ratio = 0;
};

struct GreenScan {
  std::vector<GreenRow> rows;
  stats::DecayFit fit;  // |G| vs separation, averaged over samples
  double max_ratio = 0;
  std::vector<double> max_ratio_by_separation;
};

/// z = (0, omega(0) + delta) and y = (s, omega(s) + delta) for each separation s; ratio
/// |G| s^{2 tau} / (delta^tau (1 + delta)^tau).
GreenScan green_decay_scan(const std::vector<GreenDomain>& ensemble, double tau,
                           const std::vector<double>& separations, double delta = 1.0, int workers = 1);

struct DecayRow {
  double n = 0;
  double mean = 0;
  double std_error = 0;
  int pairs = 0;
};

struct DecayScan {
  std::vector<DecayRow> rows;
  stats::DecayFit fit;
};

/// Mean over pairs of |v(omega1, 0, 0) - v(omega2, 0, 0)| per n with v from solve_cell.
DecayScan coupled_decay_scan(const std::vector<boundary::CoupledPair>& pairs, double top_height,
                             const GridParams& grid, double tol = 1e-9, int workers = 1);

}  // namespace roughwall::stokes
