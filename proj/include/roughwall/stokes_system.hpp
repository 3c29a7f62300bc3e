#pragma once

#include <array>
#include <memory>
#include <vector>

#include "roughwall/grid.hpp"
#include "roughwall/linalg.hpp"

namespace roughwall::stokes {

enum class TopCondition { StressFree, NoSlip };

/// Dirichlet data and top condition for a staggered solve.
struct BoundaryData {
  std::vector<double> wall_u;  // u at wall nodes (i, 0); empty means zero
  TopCondition top = TopCondition::StressFree;
  double top_u = 0;  // used for NoSlip
};

/// Velocity and pressure on a MappedGrid. u(i,j) sits on vertical face centres (x_i, yu), w(i,j) on
/// the midpoints of the slanted faces between x_i and x_{i+1} at node level j, q at cell centres.
struct StokesField {
  grid::MappedGrid grid;
  std::vector<double> u;       // n2 rows of n1
  std::vector<double> w;       // n2 + 1 rows of n1, wall and top rows included
  std::vector<double> q;       // n2 rows of n1, zero mean
  std::vector<double> wall_u;  // n1
  TopCondition top = TopCondition::StressFree;
  double top_u = 0;

  double U(int i, int j) const { return u[static_cast<std::size_t>(j) * grid.n1 + grid.wrap(i)]; }
  double W(int i, int j) const { return w[static_cast<std::size_t>(j) * grid.n1 + grid.wrap(i)]; }
  double Q(int i, int j) const { return q[static_cast<std::size_t>(j) * grid.n1 + grid.wrap(i)]; }

  /// Discrete flux divergence of cell (i, j).
  double divergence(int i, int j) const;
  double max_divergence() const;
  /// Flux through the vertical section at x_i.
  double section_flux(int i) const;
  /// Bilinear interpolation of (v1, v2) at a physical point inside the grid.
  std::array<double, 2> velocity_at(double x, double y) const;
  /// Cubic interpolation along grid columns at a fixed height; u at x_i, w averaged onto x_i.
  std::vector<std::array<double, 2>> trace_at(double y) const;
  /// Mean of u over the top row.
  double top_row_mean() const;
};

struct SolveReport {
  int iterations = 0;
  double residual = 0;
  std::vector<double> history;
  double dirichlet_energy = 0;  // int |grad v|^2 from the quadratic form
  double boundary_work = 0;     // same quantity from boundary data and the solved equations
};

/// Assembled saddle-point system with its flat-reference Fourier preconditioner.
class StokesSystem {
 public:
  StokesSystem(grid::MappedGrid g, BoundaryData bc);
  ~StokesSystem();

  const grid::MappedGrid& grid() const { return g_; }
  int unknowns() const { return n_; }

  /// Right-hand side contribution of body forces given per unit area at u points (n2 x n1) and
  /// interior w points ((n2 + 1) x n1, wall/top rows ignored).
  linalg::Vec force_rhs(const std::vector<double>& fu, const std::vector<double>& fw) const;
  /// Force density at a single u or w point, for point-force right-hand sides.
  int u_index(int i, int j) const;
  int w_index(int i, int j) const;  // -1 for wall/top rows
  double u_area(int i, int j) const;
  double w_area(int i, int j) const;

  /// Oseen operator (a . grad) v for a frozen advecting field.
  linalg::SpMat advection(const StokesField& a) const;

  /// Solves with the assembled boundary data plus extra_rhs (may be empty). With `advecting` set, solves
  /// the Oseen system linearised about that field instead.
  StokesField solve(const linalg::Vec& extra_rhs, double tol, SolveReport* report = nullptr,
                    const StokesField* advecting = nullptr, int max_iter = 1500) const;

 private:
  StokesField unpack(const linalg::Vec& x) const;
  linalg::SpMat advection_on(const grid::MappedGrid& g, const StokesField& a) const;

  grid::MappedGrid g_;
  BoundaryData bc_;
  int nu_ = 0, nw_ = 0, nq_ = 0, n_ = 0;
  linalg::SpMat k_;
  linalg::Vec rhs_;
  double e0_ = 0;
  std::unique_ptr<linalg::FourierPreconditioner> pre_;
};

}  // namespace roughwall::stokes
