#include "roughwall/stokes.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numeric>

#include "roughwall/kernels.hpp"
#include "roughwall/parallel.hpp"

namespace roughwall::stokes {

using boundary::RoughBoundary;
using linalg::Vec;

namespace {

int columns_for(double period, double h) {
  const double r = period / h;
  const int n = static_cast<int>(std::lround(r));
  if (n < 4 || std::abs(r - n) > 1e-8 * r) throw ConfigError("grid step must divide the boundary period");
  return n;
}

std::vector<double> wall_samples(const RoughBoundary& b, double h, int n1, double scale = 1.0) {
  std::vector<double> wall(static_cast<std::size_t>(n1));
  const bool same = std::abs(h - b.step) <= 1e-12 * h && static_cast<int>(b.size()) == n1;
  for (int i = 0; i < n1; ++i) {
    wall[static_cast<std::size_t>(i)] = scale * (same ? b.omega[static_cast<std::size_t>(i)] : b.value_at(b.x0 + i * h));
  }
  return wall;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Fourier coefficients of a periodic vector trace on a uniform grid.
struct Spectrum {
  int n = 0;
  double period = 0;
  double x0 = 0;
  std::vector<std::complex<double>> c1, c2;
};

Spectrum trace_spectrum(const std::vector<double>& x, const std::vector<std::array<double, 2>>& v) {
  if (x.size() != v.size() || x.size() < 4) throw ConfigError("trace needs at least 4 matching samples");
  Spectrum s;
  s.n = static_cast<int>(x.size());
  s.x0 = x.front();
  s.period = (x[1] - x[0]) * s.n;
  std::vector<double> a(v.size()), b(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    a[i] = v[i][0];
    b[i] = v[i][1];
  }
  s.c1 = linalg::real_dft(a);
  s.c2 = linalg::real_dft(b);
  return s;
}

/// d^beta of the Poisson extension of the trace at (x, y).
std::array<double, 2> spectral_eval(const Spectrum& s, double x, double y, std::array<int, 2> beta) {
  using cd = std::complex<double>;
  const double xr = x - s.x0;
  double r1 = 0, r2 = 0;
  for (int m = 0; m <= s.n / 2; ++m) {
    const double k = 2 * kPi * m / s.period;
    const double w = (m == 0 || 2 * m == s.n) ? 1.0 : 2.0;
    cd g11, g12, g22;
    if (m == 0) {
      const double d = beta[1] == 0 ? 1.0 : 0.0;
      g11 = d;
      g22 = d;
      g12 = 0.0;
    } else {
      const double e = std::exp(-k * y) * std::pow(-k, beta[1]);
      if (e == 0.0) break;
      g11 = e * (1 - k * y + beta[1]);
      g22 = e * (1 + k * y - beta[1]);
      g12 = cd(0, -1) * e * (k * y - beta[1]);
    }
    const cd ph = std::pow(cd(0, k), beta[0]) * std::polar(1.0, k * xr);
    const cd a = s.c1[static_cast<std::size_t>(m)], b = s.c2[static_cast<std::size_t>(m)];
    r1 += w * std::real(ph * (g11 * a + g12 * b));
    r2 += w * std::real(ph * (g12 * a + g22 * b));
  }
  return {r1 / s.n, r2 / s.n};
}

/// Exact integral of the periodic piecewise-linear interpolant of one trace component over [a, b].
double integrate_linear(const std::vector<std::array<double, 2>>& v, double x0, double h, int comp, double a,
                        double b) {
  const int n = static_cast<int>(v.size());
  auto val = [&](long long i) {
    const long long m = ((i % n) + n) % n;
    return v[static_cast<std::size_t>(m)][static_cast<std::size_t>(comp)];
  };
  auto at = [&](double x) {
    const double s = (x - x0) / h;
    const long long i = static_cast<long long>(std::floor(s));
    const double t = s - static_cast<double>(i);
    return val(i) * (1 - t) + val(i + 1) * t;
  };
  double sign = 1;
  if (b < a) {
    std::swap(a, b);
    sign = -1;
  }
  double total = 0;
  double x = a;
  while (x < b - 1e-14 * h) {
    const double s = (x - x0) / h;
    double next = x0 + (std::floor(s + 1e-12) + 1) * h;
    next = std::min(next, b);
    total += 0.5 * (at(x) + at(next)) * (next - x);
    x = next;
  }
  return sign * total;
}

}  // namespace

void CellDomain::validate() const {
  if (!boundary.period) throw ConfigError("cell problem needs a periodic boundary");
  if (!(top_height > 0) || !(top_height > boundary.max())) throw ConfigError("top_height must exceed max omega and 0");
  if (!(grid.h > 0) || !(grid.blend >= 0)) throw ConfigError("invalid cell grid parameters");
  columns_for(*boundary.period, grid.h);
}

grid::MappedGrid CellDomain::make_grid() const {
  validate();
  const int n1 = columns_for(*boundary.period, grid.h);
  const auto wall = wall_samples(boundary, grid.h, n1);
  const double b0 = mean_of(wall);
  const auto off = grid::stretched_offsets(grid.h, grid.uniform_height, grid.growth,
                                           std::max(grid.max_step, grid.h), top_height - b0);
  return grid::MappedGrid::build(wall, boundary.x0, grid.h, off, top_height, grid.blend);
}

CellSolution solve_cell(const CellDomain& domain, double tol) {
  if (!(tol > 0)) throw ConfigError("tol must be positive");
  CellSolution sol;
  sol.domain = domain;
  grid::MappedGrid g = domain.make_grid();
  BoundaryData bc;
  bc.top = TopCondition::StressFree;
  bc.wall_u.resize(static_cast<std::size_t>(g.n1));
  for (int i = 0; i < g.n1; ++i) bc.wall_u[static_cast<std::size_t>(i)] = -g.y(i, 0);
  StokesSystem sys(std::move(g), bc);
  SolveReport rep;
  sol.field = sys.solve({}, tol, &rep);
  sol.residual = rep.residual;
  sol.iterations = rep.iterations;
  sol.dirichlet_energy = rep.dirichlet_energy;
  sol.boundary_work = rep.boundary_work;
  sol.residual_history = rep.history;
  const auto& fg = sol.field.grid;
  sol.trace_x.resize(static_cast<std::size_t>(fg.n1));
  for (int i = 0; i < fg.n1; ++i) sol.trace_x[static_cast<std::size_t>(i)] = fg.x(i);
  sol.trace0 = sol.field.trace_at(0.0);
  sol.alpha = sol.field.top_row_mean();
  double m = 0;
  for (const auto& v : sol.trace0) m += v[0];
  sol.trace_mean = m / static_cast<double>(sol.trace0.size());
  return sol;
}

double wall_residual(const CellSolution& sol) {
  const auto& f = sol.field;
  const auto& g = f.grid;
  double worst = 0;
  for (int i = 0; i < g.n1; ++i) {
    const double y0 = g.y(i, 0);
    const double h[3] = {g.yu(i, 0), g.yu(i, 1), g.yu(i, 2)};
    const double v[3] = {f.U(i, 0), f.U(i, 1), f.U(i, 2)};
    double e = 0;
    for (int a = 0; a < 3; ++a) {
      double l = 1;
      for (int b = 0; b < 3; ++b) {
        if (b != a) l *= (y0 - h[b]) / (h[a] - h[b]);
      }
      e += l * v[a];
    }
    worst = std::max(worst, std::abs(e + y0));
  }
  return worst;
}

TraceMoments trace_moments(const CellSolution& sol, std::optional<double> alpha) {
  if (sol.trace0.empty()) throw ConfigError("solution has no trace");
  const double a = alpha.value_or(sol.alpha);
  const double x0 = sol.trace_x.front();
  const double h = sol.trace_x.size() > 1 ? sol.trace_x[1] - sol.trace_x[0] : 1.0;
  const int n = static_cast<int>(sol.trace0.size());
  const double period = n * h;
  TraceMoments tm;
  tm.t.reserve(static_cast<std::size_t>(n + 1));
  std::array<double, 2> acc{0, 0};
  tm.t.push_back(0);
  tm.V.push_back(acc);
  for (int k = 1; k <= n; ++k) {
    const double t0 = (k - 1) * h, t1 = k * h;
    // int_{t0}^{t1} v(-s) ds = int_{-t1}^{-t0} v(x) dx
    acc[0] += integrate_linear(sol.trace0, x0, h, 0, -t1, -t0) - a * h;
    acc[1] += integrate_linear(sol.trace0, x0, h, 1, -t1, -t0);
    tm.t.push_back(t1);
    tm.V.push_back(acc);
  }
  const int windows = static_cast<int>(std::floor(period + 1e-9));
  for (int w = 0; w < windows; ++w) {
    tm.X.push_back({integrate_linear(sol.trace0, x0, h, 0, w, w + 1.0),
                    integrate_linear(sol.trace0, x0, h, 1, w, w + 1.0)});
  }
  return tm;
}

std::vector<std::array<double, 2>> reconstruct_profile(const std::vector<double>& trace_x,
                                                       const std::vector<std::array<double, 2>>& trace,
                                                       const std::vector<double>& heights,
                                                       std::array<int, 2> beta, double x1) {
  if (beta[0] < 0 || beta[1] < 0 || beta[0] + beta[1] > 3) throw ConfigError("derivative order must be at most 3");
  const Spectrum s = trace_spectrum(trace_x, trace);
  std::vector<std::array<double, 2>> out;
  out.reserve(heights.size());
  for (double y : heights) {
    if (!(y > 0)) throw DomainError("reconstruction height must be positive");
    out.push_back(spectral_eval(s, x1, y, beta));
  }
  return out;
}

std::array<double, 2> reconstruct_above(const CellSolution& sol, double y2, std::array<int, 2> beta, double x1) {
  if (!(y2 > 0)) throw DomainError("reconstruction height must be positive");
  return reconstruct_profile(sol.trace_x, sol.trace0, {y2}, beta, x1).front();
}

std::array<double, 2> reconstruct_above_quadrature(const CellSolution& sol, double y2, double x1) {
  if (!(y2 > 0)) throw DomainError("reconstruction height must be positive");
  const double x0 = sol.trace_x.front();
  const double h = sol.trace_x[1] - sol.trace_x[0];
  const int n = static_cast<int>(sol.trace0.size());
  auto trace = [&](double x, int c) {
    const double s = (x - x0) / h;
    const long long i = static_cast<long long>(std::floor(s));
    const double t = s - static_cast<double>(i);
    auto val = [&](long long j) { return sol.trace0[static_cast<std::size_t>(((j % n) + n) % n)][static_cast<std::size_t>(c)]; };
    return val(i) * (1 - t) + val(i + 1) * t;
  };
  std::array<double, 2> out{};
  for (int r = 0; r < 2; ++r) {
    out[static_cast<std::size_t>(r)] = kernels::integrate_line(
        [&](double t) {
          const auto G = kernels::stokes_poisson(t, y2);
          return G(r, 0) * trace(x1 - t, 0) + G(r, 1) * trace(x1 - t, 1);
        },
        y2, 1e-10);
  }
  return out;
}

// ---------------------------------------------------------------- channels

double poiseuille(double phi, double x2) { return 6 * phi * x2 * (1 - x2); }

double NavierProfile::operator()(double x2) const {
  return 6 * phi * ((1 + slip) * x2 * (1 - x2) + slip * (1 - x2)) / (1 + 4 * slip);
}

double NavierProfile::derivative(double x2) const {
  return 6 * phi * ((1 + slip) * (1 - 2 * x2) - slip) / (1 + 4 * slip);
}

double NavierProfile::flux() const {
  // Gauss-Legendre with 3 nodes is exact for the quadratic.
  const double a = std::sqrt(0.6);
  const double x[3] = {0.5 * (1 - a), 0.5, 0.5 * (1 + a)};
  const double w[3] = {5.0 / 18, 8.0 / 18, 5.0 / 18};
  double s = 0;
  for (int k = 0; k < 3; ++k) s += w[k] * (*this)(x[k]);
  return s;
}

NavierProfile solve_channel_navier(double phi, double slip) {
  if (!(slip >= 0)) throw ConfigError("slip length must be non-negative");
  return {phi, slip};
}

namespace {

grid::MappedGrid channel_grid(const RoughBoundary& b, double eps, const ChannelOptions& opt) {
  if (eps == 0) {
    const double h = opt.flat_step;
    const int n1 = 8;
    std::vector<double> wall(static_cast<std::size_t>(n1), 0.0);
    const auto off = grid::stretched_offsets(h, 1.0, 1.0, h, 1.0);
    return grid::MappedGrid::build(wall, 0.0, h, off, 1.0, 0.0);
  }
  if (!b.period) throw ConfigError("channel boundary must be periodic");
  const double hc = opt.cell_grid.h;
  const int n1 = columns_for(*b.period, hc);
  const auto wall = wall_samples(b, hc, n1, eps);
  const double b0 = mean_of(wall);
  const double h = eps * hc;
  const auto off = grid::stretched_offsets(h, eps * opt.cell_grid.uniform_height, opt.cell_grid.growth,
                                           std::max(opt.max_step, h), 1.0 - b0);
  return grid::MappedGrid::build(wall, eps * b.x0, h, off, 1.0, eps * opt.cell_grid.blend);
}

void scale_field(StokesField& f, double s) {
  for (double& v : f.u) v *= s;
  for (double& v : f.w) v *= s;
  for (double& v : f.q) v *= s;
}

double mean_flux(const StokesField& f) {
  double s = 0;
  for (int i = 0; i < f.grid.n1; ++i) s += f.section_flux(i);
  return s / f.grid.n1;
}

double max_change(const StokesField& a, const StokesField& b) {
  double d = 0, m = 0;
  for (std::size_t k = 0; k < a.u.size(); ++k) {
    d = std::max(d, std::abs(a.u[k] - b.u[k]));
    m = std::max(m, std::abs(b.u[k]));
  }
  for (std::size_t k = 0; k < a.w.size(); ++k) d = std::max(d, std::abs(a.w[k] - b.w[k]));
  return m > 0 ? d / m : d;
}

}  // namespace

ChannelSolution solve_channel(const RoughBoundary& boundary, double epsilon, double phi, ChannelMode mode,
                              const ChannelOptions& opt) {
  if (epsilon < 0) throw ConfigError("epsilon must be non-negative");
  grid::MappedGrid g = channel_grid(boundary, epsilon, opt);
  BoundaryData bc;
  bc.top = TopCondition::NoSlip;
  bc.top_u = 0;
  StokesSystem sys(g, bc);
  const std::vector<double> unit(static_cast<std::size_t>(g.n1) * g.n2, 1.0);
  const Vec drive = sys.force_rhs(unit, {});

  ChannelSolution out;
  out.epsilon = epsilon;
  out.phi = phi;
  out.wall_law = WallLaw::Rough;
  // The system is linear in the pressure gradient G once the advecting field is frozen.
  auto flux_solve = [&](const StokesField* adv) {
    StokesField f = sys.solve(drive, opt.tol, nullptr, adv);
    const double q = mean_flux(f);
    if (!(std::abs(q) > 0)) throw SolverError("channel flux vanished for unit pressure gradient", 0.0);
    scale_field(f, phi / q);
    out.pressure_gradient = phi / q;
    return f;
  };
  StokesField f = flux_solve(nullptr);
  if (mode == ChannelMode::NavierStokesPicard && phi != 0) {
    int growth_run = 0;
    double last = INFINITY;
    for (int it = 1; it <= opt.max_picard; ++it) {
      StokesField next = flux_solve(&f);
      const double change = max_change(next, f);
      out.picard_history.push_back(change);
      out.picard_iterations = it;
      f = std::move(next);
      if (change <= opt.picard_tol) break;
      growth_run = change > last ? growth_run + 1 : 0;
      if (growth_run >= 5) {
        throw SolverError("Picard iteration diverges; reduce the flux phi", change);
      }
      last = change;
      if (it == opt.max_picard) throw SolverError("Picard iteration did not converge; reduce the flux phi", change);
    }
  }
  double dev = 0;
  for (int i = 0; i < f.grid.n1; ++i) dev = std::max(dev, std::abs(f.section_flux(i) - phi));
  out.max_flux_deviation = dev;
  out.max_divergence = f.max_divergence();
  out.field = std::move(f);
  return out;
}

// ---------------------------------------------------------------- corrector

double Corrector::psi(double x1, double x2) const {
  const int n = static_cast<int>(a.size());
  const double s = (x1 - x0) / step;
  const long long i = static_cast<long long>(std::floor(s));
  const double t = s - static_cast<double>(i);
  auto at = [&](const std::vector<double>& v, long long j) { return v[static_cast<std::size_t>(((j % n) + n) % n)]; };
  const double A = at(a, i) * (1 - t) + at(a, i + 1) * t;
  const double B = at(b, i) * (1 - t) + at(b, i + 1) * t;
  return A * x2 * x2 * x2 + B * x2 * x2 + d;
}

std::array<double, 2> Corrector::r(double x1, double x2) const {
  const int n = static_cast<int>(a.size());
  const double s = (x1 - x0) / step;
  const long long i = static_cast<long long>(std::floor(s));
  const double t = s - static_cast<double>(i);
  auto at = [&](const std::vector<double>& v, long long j) { return v[static_cast<std::size_t>(((j % n) + n) % n)]; };
  const double A = at(a, i) * (1 - t) + at(a, i + 1) * t;
  const double B = at(b, i) * (1 - t) + at(b, i + 1) * t;
  const double dA = (at(a, i + 1) - at(a, i)) / step;
  const double dB = (at(b, i + 1) - at(b, i)) / step;
  return {3 * A * x2 * x2 + 2 * B * x2, -(dA * x2 * x2 * x2 + dB * x2 * x2)};
}

StokesField Corrector::discrete(const grid::MappedGrid& g) const {
  if (std::abs(g.period() - period()) > 1e-9 * period()) throw ConfigError("grid period differs from corrector period");
  StokesField f;
  f.grid = g;
  f.top = TopCondition::NoSlip;
  auto node_psi = [&](int i, int j) { return psi(g.x(i), g.y(i, j)); };
  f.u.assign(static_cast<std::size_t>(g.n2) * g.n1, 0.0);
  f.w.assign(static_cast<std::size_t>(g.n2 + 1) * g.n1, 0.0);
  f.q.assign(static_cast<std::size_t>(g.n2) * g.n1, 0.0);
  f.wall_u.resize(static_cast<std::size_t>(g.n1));
  for (int i = 0; i < g.n1; ++i) f.wall_u[static_cast<std::size_t>(i)] = r(g.x(i), g.y(i, 0))[0];
  for (int j = 0; j < g.n2; ++j) {
    for (int i = 0; i < g.n1; ++i) {
      f.u[static_cast<std::size_t>(j) * g.n1 + i] = (node_psi(i, j + 1) - node_psi(i, j)) / (g.y(i, j + 1) - g.y(i, j));
    }
  }
  double top = 0;
  for (int i = 0; i < g.n1; ++i) top += r(g.x(i), g.top())[0];
  f.top_u = top / g.n1;
  for (int j = 0; j <= g.n2; ++j) {
    for (int i = 0; i < g.n1; ++i) {
      double ubar;
      if (j == 0) {
        ubar = 0.5 * (f.wall_u[static_cast<std::size_t>(i)] + f.wall_u[static_cast<std::size_t>(g.wrap(i + 1))]);
      } else if (j == g.n2) {
        ubar = f.top_u;
      } else {
        ubar = 0.25 * (f.U(i, j - 1) + f.U(i, j) + f.U(i + 1, j - 1) + f.U(i + 1, j));
      }
      const double flux = node_psi(i, j) - node_psi(i + 1, j);
      f.w[static_cast<std::size_t>(j) * g.n1 + i] = (flux + ubar * (g.y(i + 1, j) - g.y(i, j))) / g.hx;
    }
  }
  return f;
}

Corrector build_corrector(const CellSolution& sol, double epsilon, double tol) {
  if (!(epsilon > 0)) throw ConfigError("epsilon must be positive");
  const double height = 1.0 / epsilon;
  const Spectrum s = trace_spectrum(sol.trace_x, sol.trace0);
  const int n = s.n;
  const double hc = sol.trace_x[1] - sol.trace_x[0];
  Corrector c;
  c.epsilon = epsilon;
  c.x0 = epsilon * sol.trace_x.front();
  c.step = epsilon * hc;
  std::vector<double> v1(static_cast<std::size_t>(n)), v2(static_cast<std::size_t>(n));
  double vmax = 0;
  for (int i = 0; i < n; ++i) {
    const auto v = spectral_eval(s, sol.trace_x[static_cast<std::size_t>(i)], height, {0, 0});
    v1[static_cast<std::size_t>(i)] = v[0];
    v2[static_cast<std::size_t>(i)] = v[1];
    vmax = std::max({vmax, std::abs(v[0] - sol.alpha), std::abs(v[1])});
  }
  c.mean_v2 = mean_of(v2);
  if (std::abs(c.mean_v2) > tol * std::max(vmax, 1.0)) {
    throw SolverError("lateral mean of v2 at the corrector height is not zero", c.mean_v2);
  }
  // Target r(x1, 1) = -(v - (alpha, 0)), so that the approximation vanishes on the top wall.
  c.g.resize(static_cast<std::size_t>(n));
  std::vector<double> rhs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    c.g[static_cast<std::size_t>(i)] = -(v1[static_cast<std::size_t>(i)] - sol.alpha);
    rhs[static_cast<std::size_t>(i)] = v2[static_cast<std::size_t>(i)] - c.mean_v2;  // s' = -r2(x1, 1) = v2
  }
  // Zero-mean periodic antiderivative in the channel variable x1 = eps * y1.
  auto coef = linalg::real_dft(rhs);
  const double P = epsilon * hc * n;
  coef[0] = 0;
  for (std::size_t m = 1; m < coef.size(); ++m) {
    const double k = 2 * kPi * static_cast<double>(m) / P;
    coef[m] /= std::complex<double>(0, k);
  }
  if (n % 2 == 0) coef.back() = 0;
  c.s = linalg::inverse_real_dft(coef, n);
  c.a.resize(static_cast<std::size_t>(n));
  c.b.resize(static_cast<std::size_t>(n));
  c.c.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    const double g = c.g[static_cast<std::size_t>(i)], sv = c.s[static_cast<std::size_t>(i)];
    c.a[static_cast<std::size_t>(i)] = g - 2 * sv;
    c.b[static_cast<std::size_t>(i)] = 3 * sv - g;
  }
  return c;
}

StokesField build_approximation(const std::function<double(double)>& u0, const CellSolution& cell,
                                const Corrector& corrector, double epsilon, double phi,
                                const grid::MappedGrid& like) {
  if (std::abs(corrector.epsilon - epsilon) > 1e-14 * epsilon) throw ConfigError("corrector built for another epsilon");
  StokesField r = corrector.discrete(like);
  const auto& g = like;
  const double k = 6 * phi * epsilon;
  const double alpha = cell.alpha;
  const auto& cf = cell.field;
  const double ytop = cf.grid.top();
  auto cell_v = [&](double x, double y) -> std::array<double, 2> {
    const double ys = y / epsilon;
    if (ys >= ytop) return {alpha, 0.0};
    return cf.velocity_at(x / epsilon, ys);
  };
  StokesField f = r;
  for (int j = 0; j < g.n2; ++j) {
    for (int i = 0; i < g.n1; ++i) {
      const double y = g.yu(i, j);
      const double v = cell_v(g.x(i), y)[0];
      auto& u = f.u[static_cast<std::size_t>(j) * g.n1 + i];
      u = u0(y) + k * (v + alpha * y * (2 - 3 * y) + u);
    }
  }
  for (int j = 0; j <= g.n2; ++j) {
    for (int i = 0; i < g.n1; ++i) {
      const double v = cell_v(g.x(i) + 0.5 * g.hx, g.yw(i, j))[1];
      auto& w = f.w[static_cast<std::size_t>(j) * g.n1 + i];
      w = k * (v + w);
    }
  }
  for (int i = 0; i < g.n1; ++i) {
    const double y = g.y(i, 0);
    f.wall_u[static_cast<std::size_t>(i)] =
        u0(y) + k * (cell_v(g.x(i), y)[0] + alpha * y * (2 - 3 * y) + f.wall_u[static_cast<std::size_t>(i)]);
  }
  f.top_u = u0(g.top()) + k * (alpha + alpha * g.top() * (2 - 3 * g.top()) + f.top_u);
  std::fill(f.q.begin(), f.q.end(), 0.0);
  return f;
}

namespace {

double clipped(double a, double b, double lo, double hi) { return std::max(0.0, std::min(b, hi) - std::max(a, lo)); }

/// Sum over u and w points of weight * err^2 with weights equal to the point's control area within [lo, hi].
template <class F>
double weighted_sq(const grid::MappedGrid& g, double lo, double hi, F&& err) {
  double s = 0;
  for (int j = 0; j < g.n2; ++j) {
    for (int i = 0; i < g.n1; ++i) {
      const double wgt = g.hx * clipped(g.y(i, j), g.y(i, j + 1), lo, hi);
      if (wgt > 0) s += wgt * err(0, i, j);
    }
  }
  for (int j = 0; j <= g.n2; ++j) {
    for (int i = 0; i < g.n1; ++i) {
      const double a = j == 0 ? g.yw(i, 0) : g.yc(i, j - 1);
      const double b = j == g.n2 ? g.top() : g.yc(i, j);
      const double wgt = g.hx * clipped(a, b, lo, hi);
      if (wgt > 0) s += wgt * err(1, i, j);
    }
  }
  return s;
}

}  // namespace

double l2_error(const StokesField& f, const std::function<std::array<double, 2>(double, double)>& ref,
                double x2_min, double x2_max) {
  const auto& g = f.grid;
  const double s = weighted_sq(g, x2_min, x2_max, [&](int c, int i, int j) {
    if (c == 0) {
      const double e = f.U(i, j) - ref(g.x(i), g.yu(i, j))[0];
      return e * e;
    }
    const double e = f.W(i, j) - ref(g.x(i) + 0.5 * g.hx, g.yw(i, j))[1];
    return e * e;
  });
  return std::sqrt(s / g.period());
}

double l2_difference(const StokesField& a, const StokesField& b, double x2_min, double x2_max) {
  const auto& g = a.grid;
  if (g.n1 != b.grid.n1 || g.n2 != b.grid.n2) throw ConfigError("fields live on different grids");
  const double s = weighted_sq(g, x2_min, x2_max, [&](int c, int i, int j) {
    const double e = c == 0 ? a.U(i, j) - b.U(i, j) : a.W(i, j) - b.W(i, j);
    return e * e;
  });
  return std::sqrt(s / g.period());
}

// ---------------------------------------------------------------- Green function

double peskin_phi(double r) {
  const double a = std::abs(r);
  if (a < 1) return (3 - 2 * a + std::sqrt(1 + 4 * a - 4 * a * a)) / 8;
  if (a < 2) return (5 - 2 * a - std::sqrt(std::max(0.0, -7 + 12 * a - 4 * a * a))) / 8;
  return 0;
}

namespace {

double boundary_distance(const RoughBoundary& b, Point2 z) {
  const double vert = z.x2 - b.value_at(z.x1);
  if (!(vert > 0)) return 0;
  double best = vert;
  const double h = b.step / 4;
  for (double t = -vert; t <= vert; t += h) {
    const double x = z.x1 + t;
    best = std::min(best, std::hypot(t, z.x2 - b.value_at(x)));
  }
  return best;
}

/// Point-force right-hand side at z: 4-point kernel per direction, normalised to unit mass.
Vec point_force(const StokesSystem& sys, Point2 z, int dir) {
  const auto& g = sys.grid();
  Vec r = Vec::Zero(sys.unknowns());
  const double s = (z.x1 - g.x0) / g.hx - (dir == 1 ? 0.5 : 0.0);
  const int ic = static_cast<int>(std::floor(s));
  std::vector<std::pair<int, double>> terms;
  double mass = 0;
  for (int i = ic - 2; i <= ic + 3; ++i) {
    const double wx = peskin_phi(s - i);
    if (wx == 0) continue;
    std::vector<double> heights;
    for (int j = (dir == 0 ? 0 : 1); j < g.n2; ++j) heights.push_back(dir == 0 ? g.yu(i, j) : g.yw(i, j));
    // Fractional index of z2 in the column.
    const auto it = std::upper_bound(heights.begin(), heights.end(), z.x2);
    if (it == heights.begin() || it == heights.end()) throw DomainError("point force too close to the grid boundary");
    const int k = static_cast<int>(it - heights.begin()) - 1;
    const double fk = k + (z.x2 - heights[static_cast<std::size_t>(k)]) /
                              (heights[static_cast<std::size_t>(k) + 1] - heights[static_cast<std::size_t>(k)]);
    for (int kk = k - 2; kk <= k + 3; ++kk) {
      const double wy = peskin_phi(fk - kk);
      if (wy == 0) continue;
      if (kk < 0 || kk >= static_cast<int>(heights.size())) throw DomainError("point force too close to the grid boundary");
      const int j = kk + (dir == 0 ? 0 : 1);
      const int idx = dir == 0 ? sys.u_index(i, j) : sys.w_index(i, j);
      terms.emplace_back(idx, wx * wy);
      mass += wx * wy;
    }
  }
  for (const auto& [idx, w] : terms) r[idx] += w / mass;
  return r;
}

}  // namespace

std::array<std::array<double, 2>, 2> GreenSample::at(Point2 y) const {
  std::array<std::array<double, 2>, 2> m{};
  for (int k = 0; k < 2; ++k) m[static_cast<std::size_t>(k)] = response[static_cast<std::size_t>(k)].velocity_at(y.x1, y.x2);
  return m;
}

double GreenSample::norm_at(Point2 y) const {
  const auto m = at(y);
  return std::sqrt(m[0][0] * m[0][0] + m[0][1] * m[0][1] + m[1][0] * m[1][0] + m[1][1] * m[1][1]);
}

GreenSample estimate_green(const GreenDomain& domain, Point2 z, double tol) {
  CellDomain cd{domain.boundary, domain.top_height, domain.grid};
  grid::MappedGrid g = cd.make_grid();
  if (!(z.x2 > domain.boundary.value_at(z.x1))) throw DomainError("source point below the boundary");
  BoundaryData bc;
  bc.top = TopCondition::NoSlip;
  StokesSystem sys(g, bc);
  GreenSample gs;
  gs.z = z;
  gs.delta_z = boundary_distance(domain.boundary, z);
  for (int dir = 0; dir < 2; ++dir) {
    const Vec f = point_force(sys, z, dir);
    SolveReport rep;
    gs.response[static_cast<std::size_t>(dir)] = sys.solve(f, tol, &rep);
    gs.iterations[static_cast<std::size_t>(dir)] = rep.iterations;
  }
  return gs;
}

GreenScan green_decay_scan(const std::vector<GreenDomain>& ensemble, double tau, const std::vector<double>& separations,
                           double delta, int workers) {
  if (!(tau > 0 && tau < 1)) throw ConfigError("tau must lie in (0, 1)");
  if (separations.empty() || ensemble.empty()) throw ConfigError("empty ensemble or separation list");
  for (double s : separations) {
    if (!(s >= 1)) throw ConfigError("separations must be at least 1");
  }
  const int ns = static_cast<int>(separations.size());
  std::vector<std::vector<GreenRow>> rows(ensemble.size());
  parallel_for(static_cast<int>(ensemble.size()), workers, [&](int m) {
    const auto& dom = ensemble[static_cast<std::size_t>(m)];
    const Point2 z{0.0, dom.boundary.value_at(0.0) + delta};
    const GreenSample gs = estimate_green(dom, z);
    for (int k = 0; k < ns; ++k) {
      const double s = separations[static_cast<std::size_t>(k)];
      const Point2 y{s, dom.boundary.value_at(s) + delta};
      GreenRow r;
      r.sample = m;
      r.separation = distance(z, y);
      r.g_norm = gs.norm_at(y);
      const double dz = gs.delta_z, dy = boundary_distance(dom.boundary, y);
      r.ratio = r.g_norm * std::pow(r.separation, 2 * tau) / (std::pow(dz, tau) * std::pow(1 + dy, tau));
      rows[static_cast<std::size_t>(m)].push_back(r);
    }
  });
  GreenScan out;
  out.max_ratio_by_separation.assign(static_cast<std::size_t>(ns), 0.0);
  std::vector<double> mean_g(static_cast<std::size_t>(ns), 0.0);
  for (const auto& rs : rows) {
    for (int k = 0; k < ns; ++k) {
      const auto& r = rs[static_cast<std::size_t>(k)];
      out.rows.push_back(r);
      out.max_ratio = std::max(out.max_ratio, r.ratio);
      out.max_ratio_by_separation[static_cast<std::size_t>(k)] =
          std::max(out.max_ratio_by_separation[static_cast<std::size_t>(k)], r.ratio);
      mean_g[static_cast<std::size_t>(k)] += r.g_norm / static_cast<double>(rows.size());
    }
  }
  out.fit = stats::fit_loglog(separations, mean_g);
  return out;
}

// ---------------------------------------------------------------- coupled pairs

DecayScan coupled_decay_scan(const std::vector<boundary::CoupledPair>& pairs, double top_height, const GridParams& grid,
                             double tol, int workers) {
  if (pairs.empty()) throw ConfigError("no pairs");
  // Distinct boundaries are solved once; a left sample shared across n values is reused.
  std::vector<const RoughBoundary*> unique;
  std::vector<std::array<int, 2>> slot(pairs.size());
  auto find_or_add = [&](const RoughBoundary& b) {
    for (std::size_t k = 0; k < unique.size(); ++k) {
      const RoughBoundary& u = *unique[k];
      if (u.x0 == b.x0 && u.step == b.step && u.omega == b.omega) return static_cast<int>(k);
    }
    unique.push_back(&b);
    return static_cast<int>(unique.size()) - 1;
  };
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    slot[p] = {find_or_add(pairs[p].left), find_or_add(pairs[p].right)};
  }
  std::vector<std::array<double, 2>> v0(unique.size());
  parallel_for(static_cast<int>(unique.size()), workers, [&](int k) {
    const RoughBoundary& b = *unique[static_cast<std::size_t>(k)];
    const CellSolution s = solve_cell(CellDomain{b, top_height, grid}, tol);
    const auto it = std::min_element(s.trace_x.begin(), s.trace_x.end(),
                                     [](double a, double c) { return std::abs(a) < std::abs(c); });
    if (std::abs(*it) > 1e-9) throw ConfigError("x = 0 must be a grid abscissa of the pair boundaries");
    v0[static_cast<std::size_t>(k)] = s.trace0[static_cast<std::size_t>(it - s.trace_x.begin())];
  });
  std::map<double, std::vector<double>> by_n;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto& a = v0[static_cast<std::size_t>(slot[p][0])];
    const auto& b = v0[static_cast<std::size_t>(slot[p][1])];
    by_n[pairs[p].n].push_back(std::hypot(a[0] - b[0], a[1] - b[1]));
  }
  DecayScan out;
  std::vector<double> xs, ys;
  for (const auto& [n, d] : by_n) {
    const stats::MeanSE m = stats::mean_se(d);
    out.rows.push_back({n, m.mean, m.std_error, static_cast<int>(d.size())});
    if (m.mean > 0 && n > 0) {
      xs.push_back(n);
      ys.push_back(m.mean);
    }
  }
  if (xs.size() >= 2) out.fit = stats::fit_loglog(xs, ys);
  return out;
}

}  // namespace roughwall::stokes
