#include "roughwall/stokes_system.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/SparseLU>

namespace roughwall::stokes {

using linalg::Affine;
using linalg::SpMat;
using linalg::Vec;

namespace {

/// Index bookkeeping and geometric factors shared by assembly and post-processing.
struct Layout {
  const grid::MappedGrid& g;
  int n1, n2, nu, nw;

  explicit Layout(const grid::MappedGrid& grid)
      : g(grid), n1(grid.n1), n2(grid.n2), nu(grid.n1 * grid.n2), nw(grid.n1 * (grid.n2 - 1)) {}

  int iu(int i, int j) const { return j * n1 + g.wrap(i); }
  int iw(int i, int j) const { return (j <= 0 || j >= n2) ? -1 : nu + (j - 1) * n1 + g.wrap(i); }
  int iq(int i, int j) const { return nu + nw + j * n1 + g.wrap(i); }

  double dyv(int i, int j) const { return g.y(i, j + 1) - g.y(i, j); }
  double dyh(int i, int l) const { return g.y(i + 1, l) - g.y(i, l); }
  // Metric factors in (x, eta) with unit eta spacing.
  double yeta_c(int i, int j) const { return 0.5 * (dyv(i, j) + dyv(i + 1, j)); }
  double yx_c(int i, int j) const { return 0.5 * (dyh(i, j) + dyh(i, j + 1)) / g.hx; }
  double yeta_n(int i, int j) const {
    if (j == 0) return dyv(i, 0);
    if (j == n2) return dyv(i, n2 - 1);
    return 0.5 * (g.y(i, j + 1) - g.y(i, j - 1));
  }
  double yx_n(int i, int j) const { return (g.y(i + 1, j) - g.y(i - 1, j)) / (2 * g.hx); }
};

struct Coeffs {
  double a11, a12, a22;
};

Coeffs coeffs(double yeta, double yx) { return {yeta, -yx, (1 + yx * yx) / yeta}; }

class Assembler {
 public:
  Assembler(const Layout& L, const BoundaryData& bc, linalg::SystemBuilder& sb)
      : L_(L), bc_(bc), sb_(sb) {}

  double wall_u(int i) const {
    return bc_.wall_u.empty() ? 0.0 : bc_.wall_u[static_cast<std::size_t>(L_.g.wrap(i))];
  }

  Affine U(int i, int j) const { return Affine{}.var(L_.iu(i, j), 1.0); }
  Affine W(int i, int j) const {
    const int k = L_.iw(i, j);
    return k < 0 ? Affine{} : Affine{}.var(k, 1.0);
  }

  Affine ux_c(int i, int j) const { return U(i + 1, j).plus(U(i, j), -1.0).scaled(1.0 / L_.g.hx); }

  // d u / d eta at node (i, j): wall and top use half-cell one-sided differences.
  Affine ueta_n(int i, int j) const {
    if (j == 0) return U(i, 0).known(-wall_u(i)).scaled(2.0);
    if (j == L_.n2) {
      if (bc_.top == TopCondition::StressFree) return Affine{};
      return U(i, L_.n2 - 1).scaled(-1.0).known(bc_.top_u).scaled(2.0);
    }
    return U(i, j).plus(U(i, j - 1), -1.0);
  }

  Affine ux_n(int i, int j) const {
    if (j == 0 || j == L_.n2) {
      const int r = j == 0 ? 0 : L_.n2 - 1;
      const double tangential =
          j == 0 ? (wall_u(i + 1) - wall_u(i - 1)) / (2 * L_.g.hx) : 0.0;
      Affine a = ux_c(i - 1, r).plus(ux_c(i, r)).scaled(0.25);
      return a.known(0.5 * tangential);
    }
    Affine a = ux_c(i - 1, j - 1);
    a.plus(ux_c(i, j - 1)).plus(ux_c(i - 1, j)).plus(ux_c(i, j));
    return a.scaled(0.25);
  }

  Affine wx_n(int i, int j) const { return W(i, j).plus(W(i - 1, j), -1.0).scaled(1.0 / L_.g.hx); }
  Affine weta_c(int i, int j) const { return W(i, j + 1).plus(W(i, j), -1.0); }

  void velocity_energy() {
    const auto& g = L_.g;
    const double hx = g.hx;
    const bool noslip_top = bc_.top == TopCondition::NoSlip;
    for (int j = 0; j < L_.n2; ++j) {
      for (int i = 0; i < L_.n1; ++i) {
        const Coeffs c = coeffs(L_.yeta_c(i, j), L_.yx_c(i, j));
        // u: x-derivative at cell centres, cross term half here.
        const Affine ux = ux_c(i, j);
        sb_.square(c.a11 * hx, ux);
        Affine ueta = ueta_n(i, j).plus(ueta_n(i + 1, j)).plus(ueta_n(i, j + 1)).plus(ueta_n(i + 1, j + 1));
        sb_.product(c.a12 * hx * 0.5, ux, ueta.scaled(0.25));
        // w: eta-derivative at cell centres, cross term half here.
        const Affine we = weta_c(i, j);
        sb_.square(c.a22 * hx, we);
        Affine wx = wx_n(i, j).plus(wx_n(i + 1, j)).plus(wx_n(i, j + 1)).plus(wx_n(i + 1, j + 1));
        sb_.product(c.a12 * hx * 0.5, wx.scaled(0.25), we);
      }
    }
    for (int j = 0; j <= L_.n2; ++j) {
      if (j == L_.n2 && !noslip_top) continue;
      const double area = (j == 0 || j == L_.n2) ? 0.5 : 1.0;
      for (int i = 0; i < L_.n1; ++i) {
        const Coeffs c = coeffs(L_.yeta_n(i, j), L_.yx_n(i, j));
        const Affine ue = ueta_n(i, j);
        sb_.square(c.a22 * hx * area, ue);
        sb_.product(c.a12 * hx * 0.5 * area, ux_n(i, j), ue);
      }
    }
    for (int j = 1; j < L_.n2; ++j) {
      for (int i = 0; i < L_.n1; ++i) {
        // w: x-derivative at node (i+1, j).
        const Coeffs c = coeffs(L_.yeta_n(i + 1, j), L_.yx_n(i + 1, j));
        const Affine wx = wx_n(i + 1, j);
        sb_.square(c.a11 * hx, wx);
        Affine we = weta_c(i, j - 1).plus(weta_c(i, j)).plus(weta_c(i + 1, j - 1)).plus(weta_c(i + 1, j));
        sb_.product(c.a12 * hx * 0.5, wx, we.scaled(0.25));
      }
    }
  }

  Affine ubar(int i, int l) const {
    if (l == 0) return Affine{}.known(0.5 * (wall_u(i) + wall_u(i + 1)));
    if (l == L_.n2) return Affine{}.known(bc_.top == TopCondition::NoSlip ? bc_.top_u : 0.0);
    Affine a = U(i, l - 1);
    a.plus(U(i, l)).plus(U(i + 1, l - 1)).plus(U(i + 1, l));
    return a.scaled(0.25);
  }

  Affine face_flux(int i, int l) const {
    Affine f = W(i, l).scaled(L_.g.hx);
    const double dy = L_.dyh(i, l);
    if (dy != 0) f.plus(ubar(i, l), -dy);
    return f;
  }

  Affine divergence(int i, int j) const {
    Affine d = U(i + 1, j).scaled(L_.dyv(i + 1, j));
    d.plus(U(i, j), -L_.dyv(i, j));
    d.plus(face_flux(i, j + 1));
    d.plus(face_flux(i, j), -1.0);
    return d;
  }

  void pressure_coupling() {
    for (int j = 0; j < L_.n2; ++j) {
      for (int i = 0; i < L_.n1; ++i) {
        const Affine d = divergence(i, j);
        const int r = L_.iq(i, j);
        for (const auto& [k, v] : d.terms) {
          sb_.entry(k, r, -v);
          sb_.entry(r, k, -v);
        }
        sb_.add_rhs(r, d.c);
      }
    }
  }

 private:
  const Layout& L_;
  const BoundaryData& bc_;
  linalg::SystemBuilder& sb_;
};

// Derivative at 0 from samples at -a, 0, b.
std::array<double, 3> one_sided(double a, double b) {
  return {-b / (a * (a + b)), (b - a) / (a * b), a / (b * (a + b))};
}

}  // namespace

double StokesField::divergence(int i, int j) const {
  const auto& g = grid;
  auto ubar = [&](int ii, int l) {
    if (l == 0) return 0.5 * (wall_u[static_cast<std::size_t>(g.wrap(ii))] + wall_u[static_cast<std::size_t>(g.wrap(ii + 1))]);
    if (l == g.n2) return top == TopCondition::NoSlip ? top_u : 0.0;
    return 0.25 * (U(ii, l - 1) + U(ii, l) + U(ii + 1, l - 1) + U(ii + 1, l));
  };
  auto flux = [&](int ii, int l) {
    return W(ii, l) * g.hx - ubar(ii, l) * (g.y(ii + 1, l) - g.y(ii, l));
  };
  return U(i + 1, j) * (g.y(i + 1, j + 1) - g.y(i + 1, j)) - U(i, j) * (g.y(i, j + 1) - g.y(i, j)) +
         flux(i, j + 1) - flux(i, j);
}

double StokesField::max_divergence() const {
  double m = 0;
  for (int j = 0; j < grid.n2; ++j) {
    for (int i = 0; i < grid.n1; ++i) {
      const double area = grid.hx * 0.5 * ((grid.y(i, j + 1) - grid.y(i, j)) + (grid.y(i + 1, j + 1) - grid.y(i + 1, j)));
      m = std::max(m, std::abs(divergence(i, j)) / area);
    }
  }
  return m;
}

double StokesField::section_flux(int i) const {
  double f = 0;
  for (int j = 0; j < grid.n2; ++j) f += U(i, j) * (grid.y(i, j + 1) - grid.y(i, j));
  return f;
}

double StokesField::top_row_mean() const {
  double s = 0;
  for (int i = 0; i < grid.n1; ++i) s += U(i, grid.n2 - 1);
  return s / grid.n1;
}

namespace {

// Column samples (heights, values) for u at x_i including the wall and, for no-slip, the top.
void u_column(const StokesField& f, int i, std::vector<double>& h, std::vector<double>& v) {
  const auto& g = f.grid;
  h.clear();
  v.clear();
  h.push_back(g.y(i, 0));
  v.push_back(f.wall_u[static_cast<std::size_t>(g.wrap(i))]);
  for (int j = 0; j < g.n2; ++j) {
    h.push_back(g.yu(i, j));
    v.push_back(f.U(i, j));
  }
  if (f.top == TopCondition::NoSlip) {
    h.push_back(g.top());
    v.push_back(f.top_u);
  }
}

void w_column(const StokesField& f, int i, std::vector<double>& h, std::vector<double>& v) {
  const auto& g = f.grid;
  h.clear();
  v.clear();
  for (int j = 0; j <= g.n2; ++j) {
    h.push_back(g.yw(i, j));
    v.push_back(f.W(i, j));
  }
}

double linear_in_column(const std::vector<double>& h, const std::vector<double>& v, double y) {
  if (y <= h.front()) return v.front();
  if (y >= h.back()) return v.back();
  const auto it = std::upper_bound(h.begin(), h.end(), y);
  const auto k = static_cast<std::size_t>(it - h.begin());
  const double t = (y - h[k - 1]) / (h[k] - h[k - 1]);
  return v[k - 1] * (1 - t) + v[k] * t;
}

double cubic_in_column(const std::vector<double>& h, const std::vector<double>& v, double y) {
  if (h.size() < 4) return linear_in_column(h, v, y);
  auto it = std::upper_bound(h.begin(), h.end(), y);
  auto k = static_cast<std::ptrdiff_t>(it - h.begin());
  k = std::clamp<std::ptrdiff_t>(k - 2, 0, static_cast<std::ptrdiff_t>(h.size()) - 4);
  double s = 0;
  for (std::ptrdiff_t a = k; a < k + 4; ++a) {
    double l = 1;
    for (std::ptrdiff_t b = k; b < k + 4; ++b) {
      if (b != a) l *= (y - h[static_cast<std::size_t>(b)]) / (h[static_cast<std::size_t>(a)] - h[static_cast<std::size_t>(b)]);
    }
    s += l * v[static_cast<std::size_t>(a)];
  }
  return s;
}

}  // namespace

std::array<double, 2> StokesField::velocity_at(double x, double y) const {
  const auto& g = grid;
  std::vector<double> h, v;
  const double s = (x - g.x0) / g.hx;
  const int i = static_cast<int>(std::floor(s));
  const double t = s - i;
  u_column(*this, i, h, v);
  const double u0 = linear_in_column(h, v, y);
  u_column(*this, i + 1, h, v);
  const double u1 = linear_in_column(h, v, y);
  const double sw = s - 0.5;
  const int iw = static_cast<int>(std::floor(sw));
  const double tw = sw - iw;
  w_column(*this, iw, h, v);
  const double w0 = linear_in_column(h, v, y);
  w_column(*this, iw + 1, h, v);
  const double w1 = linear_in_column(h, v, y);
  return {u0 * (1 - t) + u1 * t, w0 * (1 - tw) + w1 * tw};
}

std::vector<std::array<double, 2>> StokesField::trace_at(double y) const {
  const auto& g = grid;
  std::vector<double> h, v;
  std::vector<double> wv(static_cast<std::size_t>(g.n1));
  for (int i = 0; i < g.n1; ++i) {
    w_column(*this, i, h, v);
    wv[static_cast<std::size_t>(i)] = cubic_in_column(h, v, y);
  }
  std::vector<std::array<double, 2>> out(static_cast<std::size_t>(g.n1));
  for (int i = 0; i < g.n1; ++i) {
    u_column(*this, i, h, v);
    if (y < h.front()) throw DomainError("trace height below the wall");
    out[static_cast<std::size_t>(i)] = {cubic_in_column(h, v, y),
                                        0.5 * (wv[static_cast<std::size_t>(i)] + wv[static_cast<std::size_t>(g.wrap(i - 1))])};
  }
  return out;
}

StokesSystem::StokesSystem(grid::MappedGrid g, BoundaryData bc) : g_(std::move(g)), bc_(std::move(bc)) {
  if (g_.n1 < 4 || g_.n2 < 2) throw ConfigError("grid too small");
  if (!bc_.wall_u.empty() && static_cast<int>(bc_.wall_u.size()) != g_.n1) {
    throw ConfigError("wall data size differs from grid columns");
  }
  const Layout L(g_);
  nu_ = L.nu;
  nw_ = L.nw;
  nq_ = g_.n1 * g_.n2;
  n_ = nu_ + nw_ + nq_;
  {
    linalg::SystemBuilder sb(n_);
    Assembler as(L, bc_, sb);
    as.velocity_energy();
    as.pressure_coupling();
    k_ = sb.matrix();
    rhs_ = sb.rhs();
    e0_ = sb.energy_constant();
  }
  const grid::MappedGrid flat = g_.flattened();
  const Layout Lf(flat);
  BoundaryData zero{{}, bc_.top, 0.0};
  linalg::SystemBuilder sb(n_);
  Assembler as(Lf, zero, sb);
  as.velocity_energy();
  as.pressure_coupling();
  std::vector<linalg::FieldBlock> blocks(3);
  blocks[0] = {0, g_.n2, {}};
  blocks[1] = {nu_, g_.n2 - 1, {}};
  blocks[2] = {nu_ + nw_, g_.n2, {}};
  for (int j = 0; j < g_.n2; ++j) {
    blocks[0].order_key.push_back(3.0 * j);
    blocks[2].order_key.push_back(3.0 * j + 1);
  }
  for (int j = 1; j < g_.n2; ++j) blocks[1].order_key.push_back(3.0 * (j - 1) + 2);
  pre_ = std::make_unique<linalg::FourierPreconditioner>(sb.matrix(), g_.n1, blocks, 2, g_.n2 - 1);
}

StokesSystem::~StokesSystem() = default;

int StokesSystem::u_index(int i, int j) const { return j * g_.n1 + g_.wrap(i); }
int StokesSystem::w_index(int i, int j) const {
  return (j <= 0 || j >= g_.n2) ? -1 : nu_ + (j - 1) * g_.n1 + g_.wrap(i);
}
double StokesSystem::u_area(int i, int j) const { return g_.hx * (g_.y(i, j + 1) - g_.y(i, j)); }
double StokesSystem::w_area(int i, int j) const { return g_.hx * (g_.yc(i, j) - g_.yc(i, j - 1)); }

Vec StokesSystem::force_rhs(const std::vector<double>& fu, const std::vector<double>& fw) const {
  Vec r = Vec::Zero(n_);
  for (int j = 0; j < g_.n2; ++j) {
    for (int i = 0; i < g_.n1; ++i) {
      if (!fu.empty()) r[u_index(i, j)] += fu[static_cast<std::size_t>(j) * g_.n1 + i] * u_area(i, j);
      if (!fw.empty() && j > 0) r[w_index(i, j)] += fw[static_cast<std::size_t>(j) * g_.n1 + i] * w_area(i, j);
    }
  }
  return r;
}

SpMat StokesSystem::advection(const StokesField& a) const { return advection_on(g_, a); }

SpMat StokesSystem::advection_on(const grid::MappedGrid& gr, const StokesField& a) const {
  const Layout L(gr);
  const double hx = gr.hx;
  auto u_area = [&](int i, int j) { return gr.hx * (gr.y(i, j + 1) - gr.y(i, j)); };
  auto w_area = [&](int i, int j) { return gr.hx * (gr.yc(i, j) - gr.yc(i, j - 1)); };
  std::vector<Eigen::Triplet<double>> t;
  const int n2 = gr.n2;
  const bool noslip = bc_.top == TopCondition::NoSlip;
  for (int j = 0; j < n2; ++j) {
    for (int i = 0; i < gr.n1; ++i) {
      const int r = L.iu(i, j);
      const double area = u_area(i, j);
      const double ua = a.U(i, j);
      const double wa = 0.25 * (a.W(i - 1, j) + a.W(i, j) + a.W(i - 1, j + 1) + a.W(i, j + 1));
      const double yeta = L.dyv(i, j);
      const double yx = (gr.yu(i + 1, j) - gr.yu(i - 1, j)) / (2 * hx);
      // (ua, wa) . grad u with u_x = u_xi - (yx / yeta) u_eta and u_y = u_eta / yeta.
      const double ceta = (-ua * yx + wa) / yeta;
      t.emplace_back(r, L.iu(i + 1, j), area * ua / (2 * hx));
      t.emplace_back(r, L.iu(i - 1, j), -area * ua / (2 * hx));
      if (j == 0) {
        const auto c = one_sided(0.5, 1.0);
        t.emplace_back(r, L.iu(i, 0), area * ceta * c[1]);
        t.emplace_back(r, L.iu(i, 1), area * ceta * c[2]);
      } else if (j == n2 - 1) {
        if (noslip) {
          const auto c = one_sided(1.0, 0.5);
          t.emplace_back(r, L.iu(i, j - 1), area * ceta * c[0]);
          t.emplace_back(r, L.iu(i, j), area * ceta * c[1]);
        }
      } else {
        t.emplace_back(r, L.iu(i, j + 1), area * ceta * 0.5);
        t.emplace_back(r, L.iu(i, j - 1), -area * ceta * 0.5);
      }
    }
  }
  for (int j = 1; j < n2; ++j) {
    for (int i = 0; i < gr.n1; ++i) {
      const int r = L.iw(i, j);
      const double area = w_area(i, j);
      const double ua = 0.25 * (a.U(i, j - 1) + a.U(i, j) + a.U(i + 1, j - 1) + a.U(i + 1, j));
      const double wa = a.W(i, j);
      const double yeta = 0.5 * (gr.yw(i, j + 1) - gr.yw(i, j - 1));
      const double yx = (gr.yw(i + 1, j) - gr.yw(i - 1, j)) / (2 * hx);
      const double ceta = (-ua * yx + wa) / yeta;
      t.emplace_back(r, L.iw(i + 1, j), area * ua / (2 * hx));
      t.emplace_back(r, L.iw(i - 1, j), -area * ua / (2 * hx));
      if (j + 1 < n2) t.emplace_back(r, L.iw(i, j + 1), area * ceta * 0.5);
      if (j - 1 > 0) t.emplace_back(r, L.iw(i, j - 1), -area * ceta * 0.5);
    }
  }
  SpMat m(n_, n_);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

StokesField StokesSystem::unpack(const Vec& x) const {
  StokesField f;
  f.grid = g_;
  f.top = bc_.top;
  f.top_u = bc_.top_u;
  f.wall_u = bc_.wall_u.empty() ? std::vector<double>(static_cast<std::size_t>(g_.n1), 0.0) : bc_.wall_u;
  f.u.assign(x.data(), x.data() + nu_);
  f.w.assign(static_cast<std::size_t>(g_.n2 + 1) * g_.n1, 0.0);
  std::copy(x.data() + nu_, x.data() + nu_ + nw_, f.w.begin() + g_.n1);
  f.q.assign(x.data() + nu_ + nw_, x.data() + n_);
  const double mean = std::accumulate(f.q.begin(), f.q.end(), 0.0) / static_cast<double>(f.q.size());
  for (double& v : f.q) v -= mean;
  return f;
}

StokesField StokesSystem::solve(const Vec& extra_rhs, double tol, SolveReport* report, const StokesField* advecting,
                                int max_iter) const {
  Vec b = rhs_;
  if (extra_rhs.size() == n_) b += extra_rhs;
  const int qoff = nu_ + nw_;
  const SpMat kadv = advecting ? SpMat(k_ + advection(*advecting)) : SpMat();
  const SpMat& K = advecting ? kadv : k_;
  auto op = [&](const Vec& x, Vec& y) { y.noalias() = K * x; };
  // The Fourier preconditioner misses the Oseen operator on rough grids; a sparse LU is used instead.
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  if (advecting) {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(K.nonZeros()) + 1);
    for (int r = 0; r < n_; ++r) {
      if (r == qoff) continue;
      for (SpMat::InnerIterator it(K, r); it; ++it) t.emplace_back(r, static_cast<int>(it.col()), it.value());
    }
    t.emplace_back(qoff, qoff, 1.0);  // pressure is defined up to a constant
    Eigen::SparseMatrix<double> m(n_, n_);
    m.setFromTriplets(t.begin(), t.end());
    lu.compute(m);
    if (lu.info() != Eigen::Success) throw SolverError("Oseen factorization failed", 0.0);
  }
  auto pc = [&](const Vec& r, Vec& z) {
    if (!advecting) {
      pre_->apply(r, z);
      return;
    }
    Vec rr = r;
    rr[qoff] = 0;
    z = lu.solve(rr);
  };
  Vec x = Vec::Zero(n_);
  const linalg::SolveStats st = linalg::gmres(op, pc, b, x, tol, 80, max_iter);
  if (report) {
    report->iterations = st.iterations;
    report->residual = st.residual;
    report->history = st.history;
    if (!advecting) {
      // int |grad v|^2 = x'Ax - 2 b'x + 2 E0, and by the solved equations = -b'x + f'x - d0'q + 2 E0.
      const Vec v = x.head(nu_ + nw_);
      const Vec Av = k_.topLeftCorner(nu_ + nw_, nu_ + nw_) * v;
      const Vec bv = rhs_.head(nu_ + nw_);
      const Vec fv = extra_rhs.size() == n_ ? Vec(extra_rhs.head(nu_ + nw_)) : Vec::Zero(nu_ + nw_);
      report->dirichlet_energy = v.dot(Av) - 2 * bv.dot(v) + 2 * e0_;
      report->boundary_work = -bv.dot(v) + fv.dot(v) - rhs_.tail(nq_).dot(x.tail(nq_)) + 2 * e0_;
    }
  }
  return unpack(x);
}

}  // namespace roughwall::stokes
