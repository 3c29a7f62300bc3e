#include "roughwall/scalar.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "roughwall/kernels.hpp"
#include "roughwall/linalg.hpp"
#include "roughwall/parallel.hpp"
#include "roughwall/rng.hpp"

namespace roughwall::scalar {

using boundary::RoughBoundary;
using linalg::Vec;

namespace {

int columns_for(double period, double h) {
  const double r = period / h;
  const int n = static_cast<int>(std::lround(r));
  if (n < 4 || std::abs(r - n) > 1e-8 * r) throw ConfigError("grid step must divide the boundary period");
  return n;
}

double gk(const std::function<double(double)>& f, double a, double b) {
  if (!(b > a)) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 12, 1e-12);
}

/// Cubic Lagrange value through the four column nodes around y.
double column_value(const std::vector<double>& ys, const std::vector<double>& vs, double y) {
  const int n = static_cast<int>(ys.size());
  if (y < ys.front() - 1e-12 || y > ys.back() + 1e-12) throw DomainError("height outside the grid column");
  int j = static_cast<int>(std::upper_bound(ys.begin(), ys.end(), y) - ys.begin()) - 1;
  j = std::clamp(j, 0, n - 2);
  const int s = std::clamp(j - 1, 0, std::max(0, n - 4));
  const int m = std::min(4, n);
  double r = 0;
  for (int a = s; a < s + m; ++a) {
    double l = 1;
    for (int c = s; c < s + m; ++c) {
      if (c != a) l *= (y - ys[static_cast<std::size_t>(c)]) / (ys[static_cast<std::size_t>(a)] - ys[static_cast<std::size_t>(c)]);
    }
    r += l * vs[static_cast<std::size_t>(a)];
  }
  return r;
}

struct Stiffness {
  linalg::SpMat k;
  Vec rhs;
};

/// Bilinear element stiffness on every quad; wall row eliminated with data `wall`.
Stiffness assemble(const grid::MappedGrid& g, const std::vector<double>& wall) {
  const int n1 = g.n1, n2 = g.n2;
  const int n = n1 * n2;
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(n) * 9);
  Vec rhs = Vec::Zero(n);
  auto index = [&](int i, int j) { return (j - 1) * n1 + g.wrap(i); };
  const double q = 0.5 / std::sqrt(3.0);
  const double gp[2] = {0.5 - q, 0.5 + q};
  // local corners: (i,j), (i+1,j), (i+1,j+1), (i,j+1)
  const int ci[4] = {0, 1, 1, 0};
  const int cj[4] = {0, 0, 1, 1};
  for (int j = 0; j < n2; ++j) {
    for (int i = 0; i < n1; ++i) {
      double ya[4];
      for (int a = 0; a < 4; ++a) ya[a] = g.y(i + ci[a], j + cj[a]);
      double ke[4][4] = {};
      for (double xi : gp) {
        for (double et : gp) {
          const double dxi[4] = {-(1 - et), 1 - et, et, -et};
          const double det[4] = {-(1 - xi), -xi, xi, 1 - xi};
          double y_xi = 0, y_et = 0;
          for (int a = 0; a < 4; ++a) {
            y_xi += dxi[a] * ya[a];
            y_et += det[a] * ya[a];
          }
          const double jac = g.hx * y_et;
          double gx[4], gy[4];
          for (int a = 0; a < 4; ++a) {
            gx[a] = dxi[a] / g.hx - y_xi / (g.hx * y_et) * det[a];
            gy[a] = det[a] / y_et;
          }
          for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) ke[a][b] += 0.25 * jac * (gx[a] * gx[b] + gy[a] * gy[b]);
        }
      }
      for (int a = 0; a < 4; ++a) {
        const int ja = j + cj[a];
        if (ja == 0) continue;
        const int r = index(i + ci[a], ja);
        for (int b = 0; b < 4; ++b) {
          const int jb = j + cj[b];
          if (jb == 0) {
            rhs[r] -= ke[a][b] * wall[static_cast<std::size_t>(g.wrap(i + ci[b]))];
          } else {
            t.emplace_back(r, index(i + ci[b], jb), ke[a][b]);
          }
        }
      }
    }
  }
  Stiffness s;
  s.k = linalg::SpMat(n, n);
  s.k.setFromTriplets(t.begin(), t.end());
  s.rhs = std::move(rhs);
  return s;
}

}  // namespace

std::vector<double> ScalarCellSolution::row_at(double y) const {
  std::vector<double> out(static_cast<std::size_t>(grid.n1));
  std::vector<double> ys(static_cast<std::size_t>(grid.n2 + 1)), vs(ys.size());
  for (int i = 0; i < grid.n1; ++i) {
    for (int j = 0; j <= grid.n2; ++j) {
      ys[static_cast<std::size_t>(j)] = grid.y(i, j);
      vs[static_cast<std::size_t>(j)] = at(i, j);
    }
    out[static_cast<std::size_t>(i)] = column_value(ys, vs, y);
  }
  return out;
}

double ScalarCellSolution::value_at(double x, double y) const {
  const double s = (x - grid.x0) / grid.hx;
  const int i = static_cast<int>(std::floor(s));
  const double w = s - i;
  std::vector<double> ys(static_cast<std::size_t>(grid.n2 + 1)), vs(ys.size());
  double r = 0;
  for (int c = 0; c < 2; ++c) {
    const double wc = c == 0 ? 1 - w : w;
    if (wc == 0) continue;
    for (int j = 0; j <= grid.n2; ++j) {
      ys[static_cast<std::size_t>(j)] = grid.y(i + c, j);
      vs[static_cast<std::size_t>(j)] = at(i + c, j);
    }
    r += wc * column_value(ys, vs, y);
  }
  return r;
}

double ScalarCellSolution::min() const { return *std::min_element(u.begin(), u.end()); }
double ScalarCellSolution::max() const { return *std::max_element(u.begin(), u.end()); }

ScalarCellSolution solve_harmonic_cell(const HarmonicDomain& d, double tol) {
  const RoughBoundary& b = d.boundary;
  if (!b.period) throw ConfigError("harmonic cell needs a periodic boundary");
  if (!(tol > 0)) throw ConfigError("tol must be positive");
  if (!(d.top_height > 0) || !(d.top_height > b.max())) throw ConfigError("top_height must exceed max omega and 0");
  const auto& gp = d.grid;
  if (!(gp.h > 0) || !(gp.blend >= 0)) throw ConfigError("invalid grid parameters");
  const int n1 = columns_for(*b.period, gp.h);
  std::vector<double> data(static_cast<std::size_t>(n1));
  const bool same = std::abs(gp.h - b.step) <= 1e-12 * gp.h && static_cast<int>(b.size()) == n1;
  for (int i = 0; i < n1; ++i) {
    data[static_cast<std::size_t>(i)] = same ? b.omega[static_cast<std::size_t>(i)] : b.value_at(b.x0 + i * gp.h);
  }
  std::vector<double> wall = d.geometry == Geometry::Rough ? data : std::vector<double>(data.size(), 0.0);
  const double b0 = std::accumulate(wall.begin(), wall.end(), 0.0) / n1;
  const auto off = grid::stretched_offsets(gp.h, gp.uniform_height, gp.growth, std::max(gp.max_step, gp.h),
                                           d.top_height - b0);
  ScalarCellSolution sol;
  sol.grid = grid::MappedGrid::build(wall, b.x0, gp.h, off, d.top_height, gp.blend);
  const auto& g = sol.grid;
  const Stiffness s = assemble(g, data);
  const Stiffness ref = assemble(g.flattened(), data);
  linalg::FieldBlock block{0, g.n2, {}};
  for (int j = 0; j < g.n2; ++j) block.order_key.push_back(j);
  const linalg::FourierPreconditioner pre(ref.k, g.n1, {block}, -1, 0);
  Vec x = Vec::Zero(s.rhs.size());
  auto op = [&](const Vec& v, Vec& y) { y.noalias() = s.k * v; };
  auto pc = [&](const Vec& r, Vec& z) { pre.apply(r, z); };
  const auto st = linalg::gmres(op, pc, s.rhs, x, tol, 60, 3000);
  sol.residual = st.residual;
  sol.iterations = st.iterations;
  sol.residual_history = st.history;
  sol.u.resize(static_cast<std::size_t>(g.n1) * (g.n2 + 1));
  std::copy(data.begin(), data.end(), sol.u.begin());
  std::copy(x.data(), x.data() + x.size(), sol.u.begin() + g.n1);
  double m = 0;
  for (int i = 0; i < g.n1; ++i) m += sol.at(i, g.n2);
  sol.top_mean = m / g.n1;
  return sol;
}

std::vector<double> flat_strip_values(const RoughBoundary& b, const std::vector<double>& heights, double top_height,
                                      double x1) {
  if (!b.period) throw ConfigError("strip solution needs a periodic boundary");
  const int n = static_cast<int>(b.size());
  const auto c = linalg::real_dft(b.omega);
  const double period = *b.period;
  const bool half_plane = !std::isfinite(top_height);
  std::vector<double> out;
  out.reserve(heights.size());
  for (double y : heights) {
    if (y < 0 || (!half_plane && y > top_height)) throw DomainError("height outside the strip");
    double r = 0;
    for (int m = 0; m <= n / 2; ++m) {
      const double k = 2 * kPi * m / period;
      double damp;
      if (half_plane) {
        damp = std::exp(-k * y);
      } else {
        // cosh(k (Y - y)) / cosh(k Y) without overflow
        damp = std::exp(-k * y) * (1 + std::exp(-2 * k * (top_height - y))) / (1 + std::exp(-2 * k * top_height));
      }
      if (damp < 1e-300) break;
      const double w = (m == 0 || 2 * m == n) ? 1.0 : 2.0;
      const double ph = k * (x1 - b.x0);
      const auto cm = c[static_cast<std::size_t>(m)];
      // Nyquist mode: cosine part only
      r += w * damp * (2 * m == n ? cm.real() * std::cos(ph) : (cm * std::polar(1.0, ph)).real());
    }
    out.push_back(r / n);
  }
  return out;
}

namespace {

/// Conservative distance to the wall from dense samples: sparse-table range maxima plus the interpolation
/// bulge bound gap^2/8 max|omega''|.
class WallTracker {
 public:
  explicit WallTracker(const RoughBoundary& b) : b_(&b) {
    periodic_ = b.period.has_value();
    span_ = periodic_ ? *b.period : b.step * static_cast<double>(b.size() - 1);
    double w2 = 0;
    for (double v : b.omega2) w2 = std::max(w2, std::abs(v));
    w2 = 1.25 * w2 + 1e-12;
    double ds = std::min(b.step, std::sqrt(8.0 * 0.01 / w2));
    int n = static_cast<int>(std::ceil(span_ / ds));
    n = std::max(n, 4);
    ds_ = span_ / n;
    if (!periodic_) ++n;
    margin_ = ds_ * ds_ / 8.0 * w2;
    w2_ = w2;
    x0_ = b.x0;
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = b.value_at(x0_ + i * ds_);
    table_.push_back(std::move(v));
    for (int len = 1; 2 * len <= n; len *= 2) {
      const auto& prev = table_.back();
      std::vector<double> next(static_cast<std::size_t>(n - 2 * len + 1));
      for (std::size_t i = 0; i < next.size(); ++i) next[i] = std::max(prev[i], prev[i + static_cast<std::size_t>(len)]);
      table_.push_back(std::move(next));
    }
    global_max_ = *std::max_element(table_[0].begin(), table_[0].end()) + margin_;
  }

  double global_max() const { return global_max_; }
  double value(double x) const { return b_->value_at(x); }

  double wrap(double x) const {
    if (!periodic_) {
      if (x < x0_ || x > x0_ + span_) throw DomainError("walker left the sampled boundary window");
      return x;
    }
    double r = std::fmod(x - x0_, span_);
    if (r < 0) r += span_;
    return x0_ + r;
  }

  /// Upper bound of omega over [a, c] (physical, a <= c): exact end values, interior samples, and the
  /// interpolation bulge over the largest gap.
  double range_max(double a, double c) const {
    const int n = static_cast<int>(table_[0].size());
    if (periodic_ && c - a >= span_) return global_max_;
    double m = std::max(value(a), value(c));
    long long ia = static_cast<long long>(std::ceil((a - x0_) / ds_));
    long long ic = static_cast<long long>(std::floor((c - x0_) / ds_));
    if (!periodic_) {
      ia = std::max<long long>(ia, 0);
      ic = std::min<long long>(ic, n - 1);
    }
    if (ic >= ia) {
      if (!periodic_) {
        m = std::max(m, query(static_cast<int>(ia), static_cast<int>(ic)));
      } else if (ic - ia + 1 >= n) {
        m = std::max(m, global_max_);
      } else {
        const long long sa = ((ia % n) + n) % n;
        const long long sc = sa + (ic - ia);
        m = std::max(m, sc < n ? query(static_cast<int>(sa), static_cast<int>(sc))
                               : std::max(query(static_cast<int>(sa), n - 1), query(0, static_cast<int>(sc - n))));
      }
    }
    const double gap = std::min(ds_, c - a);
    return m + w2_ * gap * gap / 8.0;
  }

  /// Radius of a ball around p inside the reflected domain {omega < y < 2Y - omega}.
  double radius(Point2 p, double top) const {
    const double r_top = 2 * top - global_max_ - p.x2;
    const double gap = p.x2 - value(p.x1);
    double r = std::min(gap, r_top);
    if (r <= 0) return 0;
    auto ok = [&](double s) { return p.x2 - range_max(p.x1 - s, p.x1 + s) >= s; };
    if (ok(r)) return r;
    double hi = r;
    for (int k = 0; k < 60 && !ok(r); ++k) {
      hi = r;
      r *= 0.5;
    }
    for (int k = 0; k < 3; ++k) {
      const double mid = 0.5 * (r + hi);
      if (ok(mid)) {
        r = mid;
      } else {
        hi = mid;
      }
    }
    return r;
  }

 private:
  double query(int a, int c) const {
    const int len = c - a + 1;
    int k = 0;
    while ((2 << k) <= len) ++k;
    const auto& row = table_[static_cast<std::size_t>(k)];
    return std::max(row[static_cast<std::size_t>(a)], row[static_cast<std::size_t>(c - (1 << k) + 1)]);
  }

  const RoughBoundary* b_;
  bool periodic_ = false;
  double x0_ = 0, span_ = 0, ds_ = 0, margin_ = 0, w2_ = 0, global_max_ = 0;
  std::vector<std::vector<double>> table_;
};

struct PathRng {
  std::uint64_t state;
  double uniform() {
    state += 0x9e3779b97f4a7c15ULL;
    return rng::to_unit(rng::mix64(state));
  }
};

void check_start(const WallTracker& w, Point2 p, double top) {
  if (!(p.x2 > w.value(p.x1)) || !(p.x2 < top)) throw DomainError("start point outside the domain");
}

void step(Point2& p, double r, PathRng& g, const WallTracker& w, double top) {
  const double th = 2 * kPi * g.uniform();
  p.x1 = w.wrap(p.x1 + r * std::cos(th));
  p.x2 += r * std::sin(th);
  if (p.x2 > top) p.x2 = 2 * top - p.x2;
}

/// Exit value and steps of one walk.
std::pair<double, long> walk(const WallTracker& w, Point2 p, PathRng& g, const WalkOptions& opt) {
  for (long s = 0; s < opt.max_steps; ++s) {
    const double r = w.radius(p, opt.kill_height);
    if (r < opt.delta_exit) return {w.value(p.x1), s};
    step(p, r, g, w, opt.kill_height);
  }
  throw SolverError("walk exceeded max_steps", static_cast<double>(opt.max_steps));
}

void validate(const WalkOptions& opt) {
  if (!(opt.delta_exit > 0) || !(opt.kill_height > 0) || opt.max_steps < 1) throw ConfigError("invalid walk options");
}

MCEstimate summarize(const std::vector<double>& v, double steps) {
  MCEstimate e;
  const auto ms = stats::mean_se(v);
  e.estimate = ms.mean;
  e.std_error = ms.std_error;
  e.paths = static_cast<long>(v.size());
  e.mean_steps = steps / static_cast<double>(v.size());
  return e;
}

}  // namespace

MCEstimate brownian_value(const RoughBoundary& b, Point2 start, long paths, std::uint64_t seed, std::uint64_t member,
                          const WalkOptions& opt) {
  validate(opt);
  if (paths < 2) throw ConfigError("need at least 2 paths");
  const WallTracker w(b);
  check_start(w, start, opt.kill_height);
  std::vector<double> v(static_cast<std::size_t>(paths));
  double steps = 0;
  for (long k = 0; k < paths; ++k) {
    PathRng g{rng::hash_combine(seed, member, static_cast<std::uint64_t>(k))};
    const auto [val, s] = walk(w, start, g, opt);
    v[static_cast<std::size_t>(k)] = val;
    steps += static_cast<double>(s);
  }
  return summarize(v, steps);
}

MCEstimate coupled_difference(const boundary::CoupledPair& pair, Point2 start, long paths, std::uint64_t seed,
                              std::uint64_t member, const WalkOptions& opt, bool common) {
  validate(opt);
  if (paths < 2) throw ConfigError("need at least 2 paths");
  const WallTracker wa(pair.left), wb(pair.right);
  check_start(wa, start, opt.kill_height);
  check_start(wb, start, opt.kill_height);
  const double top = opt.kill_height;
  std::vector<double> d(static_cast<std::size_t>(paths));
  double steps = 0;
  for (long k = 0; k < paths; ++k) {
    const std::uint64_t s0 = rng::hash_combine(seed, member, static_cast<std::uint64_t>(k));
    if (!common) {
      PathRng ga{s0}, gb{rng::mix64(s0 ^ 0x5bd1e995ULL)};
      const auto [va, na] = walk(wa, start, ga, opt);
      const auto [vb, nb] = walk(wb, start, gb, opt);
      d[static_cast<std::size_t>(k)] = va - vb;
      steps += static_cast<double>(na + nb);
      continue;
    }
    PathRng g{s0};
    Point2 p = start;
    bool alive_a = true, alive_b = true;
    double va = 0, vb = 0;
    long s = 0;
    for (; s < opt.max_steps && (alive_a || alive_b); ++s) {
      const double ra = alive_a ? wa.radius(p, top) : std::numeric_limits<double>::infinity();
      const double rb = alive_b ? wb.radius(p, top) : std::numeric_limits<double>::infinity();
      if (alive_a && ra < opt.delta_exit) {
        va = wa.value(p.x1);
        alive_a = false;
      }
      if (alive_b && rb < opt.delta_exit) {
        vb = wb.value(p.x1);
        alive_b = false;
      }
      if (!alive_a && !alive_b) break;
      const double r = std::min(alive_a ? ra : rb, alive_b ? rb : ra);
      step(p, r, g, wa, top);
    }
    if (alive_a || alive_b) throw SolverError("walk exceeded max_steps", static_cast<double>(opt.max_steps));
    d[static_cast<std::size_t>(k)] = va - vb;
    steps += static_cast<double>(s);
  }
  return summarize(d, steps);
}

ScalarDecayScan coupled_decay_scan(const std::vector<boundary::CoupledPair>& pairs, long paths, std::uint64_t seed,
                                   const WalkOptions& opt, int workers) {
  if (pairs.empty()) throw ConfigError("no pairs");
  std::vector<double> diff(pairs.size());
  parallel_for(static_cast<int>(pairs.size()), workers, [&](int k) {
    const auto e = coupled_difference(pairs[static_cast<std::size_t>(k)], {0.0, 0.0}, paths, seed,
                                      static_cast<std::uint64_t>(k), opt, true);
    diff[static_cast<std::size_t>(k)] = std::abs(e.estimate);
  });
  std::vector<double> ns;
  for (const auto& p : pairs) ns.push_back(p.n);
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  ScalarDecayScan scan;
  std::vector<double> fx, fy;
  for (double n : ns) {
    ScalarDecayRow row;
    row.n = n;
    std::vector<double> v;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      if (pairs[k].n != n) continue;
      v.push_back(diff[k]);
      for (const auto* b : {&pairs[k].left, &pairs[k].right}) {
        row.sup_norm = std::max({row.sup_norm, std::abs(b->min()), std::abs(b->max())});
      }
    }
    const auto ms = stats::mean_se(v);
    row.mean = ms.mean;
    row.std_error = ms.std_error;
    row.pairs = static_cast<int>(v.size());
    row.bound = 2 * row.sup_norm * 2 * kernels::hitting_prob_lateral_before_down(n);
    if (row.mean > 0) {
      fx.push_back(n);
      fy.push_back(row.mean);
    }
    scan.rows.push_back(row);
  }
  if (fx.size() >= 2) scan.fit = stats::fit_loglog(fx, fy, seed);
  return scan;
}

ScalarCLT clt_scan(const std::vector<RoughBoundary>& ensemble, const std::vector<double>& heights, double top_height,
                   const stokes::GridParams& grid, Geometry geometry, std::size_t fit_from, int workers) {
  if (ensemble.size() < 100) throw ConfigError("clt_scan needs at least 100 samples");
  if (heights.empty()) throw ConfigError("no heights");
  for (double y : heights) {
    if (!(y > 0) || !(y < top_height)) throw ConfigError("heights must lie in (0, top_height)");
  }
  const std::size_t m = ensemble.size();
  ScalarCLT r;
  r.heights = heights;
  r.values.assign(heights.size(), std::vector<double>(m));
  std::vector<double> w0(m);
  parallel_for(static_cast<int>(m), workers, [&](int k) {
    const auto& b = ensemble[static_cast<std::size_t>(k)];
    const auto sol = solve_harmonic_cell({b, top_height, grid, geometry});
    for (std::size_t h = 0; h < heights.size(); ++h) r.values[h][static_cast<std::size_t>(k)] = sol.value_at(0.0, heights[h]);
    w0[static_cast<std::size_t>(k)] = b.value_at(0.0);
  });
  const auto a = stats::mean_se(w0);
  r.alpha = a.mean;
  r.alpha_se = a.std_error;
  std::vector<double> fx, fy;
  for (std::size_t h = 0; h < heights.size(); ++h) {
    const double var = stats::sample_variance(r.values[h]);
    r.variances.push_back(var);
    r.scaled.push_back(heights[h] * var);
    const auto nt = stats::normality_test(r.values[h]);
    r.ks_stats.push_back(nt.ks_statistic);
    r.ks_p.push_back(nt.p_value);
    if (h >= fit_from && var > 0) {
      fx.push_back(heights[h]);
      fy.push_back(var);
    }
  }
  if (fx.size() >= 2) r.fit = stats::fit_loglog(fx, fy);
  return r;
}

double tilt_profile(double s) {
  const double a = std::abs(s);
  if (a <= 1) return 1.0;
  if (a >= 2) return 0.0;
  const double t = a - 1;
  return 1 - t * t * t * (10 - 15 * t + 6 * t * t);
}

double TiltedEnsemble::g(double y1) const { return tilt_profile(y1 / y2) / std::sqrt(y2); }

double TiltedEnsemble::m(double z1) const {
  const double r = 2 * spec.bump_half_width;
  return gk([&](double t) { return spec.covariance(t) * g(z1 - t); }, -r, r);
}

double TiltedEnsemble::H() const {
  const double r = 2 * spec.bump_half_width;
  // H = int rho(t) A(t / y2) dt, A(tau) = int G(s) G(s + tau) ds
  auto A = [&](double tau) {
    const double lo = std::max(-2.0, -2.0 - tau), hi = std::min(2.0, 2.0 - tau);
    std::vector<double> cuts{lo, hi};
    for (double c : {-1.0, 1.0, -1.0 - tau, 1.0 - tau}) {
      if (c > lo && c < hi) cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());
    double s = 0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      s += gk([&](double x) { return tilt_profile(x) * tilt_profile(x + tau); }, cuts[i], cuts[i + 1]);
    }
    return s;
  };
  return gk([&](double t) { return spec.covariance(t) * A(t / y2); }, -r, 0) +
         gk([&](double t) { return spec.covariance(t) * A(t / y2); }, 0, r);
}

OptimalityReport optimality_experiment(const boundary::CovarianceSpec& spec, const std::vector<RoughBoundary>& ensemble,
                                       const std::vector<double>& heights, double top_height,
                                       const stokes::GridParams& grid, std::uint64_t seed, int workers) {
  spec.validate();
  OptimalityReport rep;
  rep.rho_integral = spec.covariance_integral();
  rep.clt = clt_scan(ensemble, heights, top_height, grid, Geometry::Flat, 0, workers);
  double hmin = std::numeric_limits<double>::infinity(), hmax = 0;
  for (std::size_t k = 0; k < heights.size(); ++k) {
    const double y2 = heights[k];
    const TiltedEnsemble te{spec, y2};
    OptimalityRow row;
    row.y2 = y2;
    row.H = te.H();
    row.sqrt_y2_m0 = std::sqrt(y2) * te.m(0.0);
    const double reach = 2 * y2 + 2 * spec.bump_half_width;
    const double cuts[5] = {-reach, -y2, 0.0, y2, reach};
    double lb = 0;
    for (int c = 0; c < 4; ++c) {
      lb += gk([&](double y1) { return kernels::harmonic_poisson(y1, y2) * std::sqrt(y2) * te.m(y1); }, cuts[c],
               cuts[c + 1]);
    }
    row.lower_bound = lb;
    row.scaled_variance = rep.clt.scaled[k];
    hmin = std::min(hmin, row.H);
    hmax = std::max(hmax, row.H);
    rep.rows.push_back(row);
  }
  rep.H_ratio = hmin > 0 ? hmax / hmin : std::numeric_limits<double>::infinity();
  rep.H_bounded = std::isfinite(rep.H_ratio) && rep.H_ratio <= 3.0;

  // Percentile bootstrap over members for each scaled variance and for their minimum.
  const std::size_t m = ensemble.size();
  const int resamples = 500;
  std::mt19937_64 gen(rng::hash_combine(seed, 0xf100aULL));
  std::uniform_int_distribution<std::size_t> pick(0, m - 1);
  std::vector<std::vector<double>> per(heights.size());
  std::vector<double> floors;
  std::vector<double> sample(m);
  std::vector<std::size_t> idx(m);
  for (int r = 0; r < resamples; ++r) {
    for (auto& i : idx) i = pick(gen);
    double f = std::numeric_limits<double>::infinity();
    for (std::size_t h = 0; h < heights.size(); ++h) {
      for (std::size_t i = 0; i < m; ++i) sample[i] = rep.clt.values[h][idx[i]];
      const double s = heights[h] * stats::sample_variance(sample);
      per[h].push_back(s);
      f = std::min(f, s);
    }
    floors.push_back(f);
  }
  auto pct = [](std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  for (std::size_t h = 0; h < heights.size(); ++h) {
    rep.rows[h].ci_low = pct(per[h], 0.025);
    rep.rows[h].ci_high = pct(per[h], 0.975);
  }
  rep.floor = *std::min_element(rep.clt.scaled.begin(), rep.clt.scaled.end());
  rep.floor_ci_low = pct(floors, 0.025);
  rep.floor_ci_high = pct(floors, 0.975);
  return rep;
}

}  // namespace roughwall::scalar
