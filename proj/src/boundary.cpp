#include "roughwall/boundary.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

#include "roughwall/rng.hpp"

namespace roughwall::boundary {

namespace {

// int_{-1}^{1} (1 - u^2)^6 du
constexpr double kBumpSquareIntegral = 8192.0 * 518400.0 / 6227020800.0;
// int_{-1}^{1} (1 - u^2)^3 du
constexpr double kBumpIntegral = 32.0 / 35.0;

double bump_scale(const CovarianceSpec& s) {
  return s.amplitude / std::sqrt(s.bump_half_width * kBumpSquareIntegral);
}

std::int64_t checked_ratio(double a, double b, const char* what) {
  const double q = a / b;
  const double r = std::round(q);
  if (std::abs(q - r) > 1e-9 * std::max(1.0, std::abs(q))) {
    throw ConfigError(std::string(what) + " must be an integer multiple of the step");
  }
  return static_cast<std::int64_t>(r);
}

std::int64_t wrap(std::int64_t j, std::int64_t n) {
  const std::int64_t m = j % n;
  return m < 0 ? m + n : m;
}

struct FieldValue {
  double x = 0, x1 = 0, x2 = 0;
};

template <class Noise>
FieldValue eval_field(const CovarianceSpec& s, double x, Noise&& noise) {
  const double h = s.grid_step;
  const double r = s.bump_half_width;
  const auto jlo = static_cast<std::int64_t>(std::ceil((x - r) / h));
  const auto jhi = static_cast<std::int64_t>(std::floor((x + r) / h));
  FieldValue v;
  for (std::int64_t j = jlo; j <= jhi; ++j) {
    const double d = x - static_cast<double>(j) * h;
    const double xi = noise(j);
    v.x += s.bump(d) * xi;
    v.x1 += s.bump_d1(d) * xi;
    v.x2 += s.bump_d2(d) * xi;
  }
  const double sh = std::sqrt(h);
  v.x *= sh;
  v.x1 *= sh;
  v.x2 *= sh;
  return v;
}

template <class Noise>
RoughBoundary sample_with(const CovarianceSpec& s, const BoundaryMap& map, double x0, double step,
                          std::size_t count, Noise&& noise) {
  RoughBoundary b;
  b.x0 = x0;
  b.step = step;
  b.omega.resize(count);
  b.omega1.resize(count);
  b.omega2.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const FieldValue f = eval_field(s, b.x(i), noise);
    const double m1 = map.d1(f.x);
    b.omega[i] = map.value(f.x);
    b.omega1[i] = m1 * f.x1;
    b.omega2[i] = m1 * f.x2 + map.d2(f.x) * f.x1 * f.x1;
  }
  b.refresh_norms();
  return b;
}

struct Hermite {
  double v, d1, d2;
};

// Quintic Hermite on [0,1] through values, first and second derivatives (already scaled by h).
Hermite quintic(double t, double p0, double m0, double a0, double p1, double m1, double a1) {
  const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
  const double h0 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
  const double h1 = t - 6 * t3 + 8 * t4 - 3 * t5;
  const double h2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5);
  const double h3 = 0.5 * (t3 - 2 * t4 + t5);
  const double h4 = -4 * t3 + 7 * t4 - 3 * t5;
  const double h5 = 10 * t3 - 15 * t4 + 6 * t5;
  const double d0 = -30 * t2 + 60 * t3 - 30 * t4;
  const double d1 = 1 - 18 * t2 + 32 * t3 - 15 * t4;
  const double d2 = 0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4);
  const double d3 = 0.5 * (3 * t2 - 8 * t3 + 5 * t4);
  const double d4 = -12 * t2 + 28 * t3 - 15 * t4;
  const double e0 = -60 * t + 180 * t2 - 120 * t3;
  const double e1 = -36 * t + 96 * t2 - 60 * t3;
  const double e2 = 0.5 * (2 - 18 * t + 36 * t2 - 20 * t3);
  const double e3 = 0.5 * (6 * t - 24 * t2 + 20 * t3);
  const double e4 = -24 * t + 84 * t2 - 60 * t3;
  return {h0 * p0 + h1 * m0 + h2 * a0 + h3 * a1 + h4 * m1 + h5 * p1,
          d0 * (p0 - p1) + d1 * m0 + d2 * a0 + d3 * a1 + d4 * m1,
          e0 * (p0 - p1) + e1 * m0 + e2 * a0 + e3 * a1 + e4 * m1};
}

Hermite interpolate(const RoughBoundary& b, double x) {
  const std::size_t n = b.size();
  if (n == 0) throw DomainError("empty boundary");
  double s = (x - b.x0) / b.step;
  std::size_t i0, i1;
  double t;
  if (b.period) {
    const double ns = static_cast<double>(n);
    s = std::fmod(s, ns);
    if (s < 0) s += ns;
    auto i = static_cast<std::size_t>(std::floor(s));
    if (i >= n) i = n - 1;
    t = s - static_cast<double>(i);
    i0 = i;
    i1 = (i + 1) % n;
  } else {
    if (s < -1e-9 || s > static_cast<double>(n - 1) + 1e-9) {
      throw DomainError("abscissa outside the sampled window");
    }
    if (n == 1) return {b.omega[0], b.omega1[0], b.omega2[0]};
    auto i = static_cast<std::size_t>(std::clamp(std::floor(s), 0.0, static_cast<double>(n - 2)));
    t = s - static_cast<double>(i);
    i0 = i;
    i1 = i + 1;
  }
  const double h = b.step;
  Hermite r = quintic(t, b.omega[i0], h * b.omega1[i0], h * h * b.omega2[i0], b.omega[i1],
                      h * b.omega1[i1], h * h * b.omega2[i1]);
  r.d1 /= h;
  r.d2 /= h * h;
  return r;
}

std::size_t window_count(double window, double step) {
  return static_cast<std::size_t>(std::floor(window / step + 1e-9)) + 1;
}

void check_spec_window(const CovarianceSpec& spec, double window) {
  spec.validate();
  if (!(window > 0)) throw ConfigError("window must be positive");
  if (window < 2 * spec.kappa) throw ConfigError("window must be at least 2*kappa");
}

}  // namespace

void CovarianceSpec::validate() const {
  if (!(bump_half_width > 0)) throw ConfigError("bump_half_width must be positive");
  if (!(amplitude >= 0) || !std::isfinite(amplitude)) throw ConfigError("amplitude must be >= 0");
  if (kappa < 2 * bump_half_width * (1 - 1e-12)) {
    throw ConfigError("kappa must cover the covariance support 2*bump_half_width");
  }
  if (!(grid_step > 0) || grid_step > 0.5 * bump_half_width) {
    throw ConfigError("grid_step must be in (0, bump_half_width/2]");
  }
  // The moving-average field has lattice covariance h*sum f f, a Gram matrix; only a
  // degenerate table (non-finite or negative variance) can fail positivity.
  const double c0 = lattice_covariance(0);
  if (!std::isfinite(c0) || c0 < 0) throw ConfigError("covariance is not positive semidefinite");
}

std::uint64_t CovarianceSpec::hash() const {
  std::uint64_t h = 0x5eedULL;
  for (double v : {bump_half_width, amplitude, kappa, grid_step}) {
    h = rng::hash_combine(h, std::bit_cast<std::uint64_t>(v));
  }
  return h;
}

double CovarianceSpec::bump(double x) const {
  const double u = x / bump_half_width;
  if (std::abs(u) >= 1) return 0.0;
  const double w = 1 - u * u;
  return bump_scale(*this) * w * w * w;
}

double CovarianceSpec::bump_d1(double x) const {
  const double u = x / bump_half_width;
  if (std::abs(u) >= 1) return 0.0;
  const double w = 1 - u * u;
  return -6 * bump_scale(*this) * u * w * w / bump_half_width;
}

double CovarianceSpec::bump_d2(double x) const {
  const double u = x / bump_half_width;
  if (std::abs(u) >= 1) return 0.0;
  const double w = 1 - u * u;
  return -6 * bump_scale(*this) * w * (1 - 5 * u * u) / (bump_half_width * bump_half_width);
}

double CovarianceSpec::covariance(double lag) const {
  const double r = bump_half_width;
  const double d = std::abs(lag);
  if (d >= 2 * r) return 0.0;
  // f(s) f(s + d) is a polynomial of degree 12 on the overlap, so 7-point Gauss is exact.
  const double lo = -r, hi = r - d;
  return boost::math::quadrature::gauss<double, 7>::integrate(
      [&](double s) { return bump(s) * bump(s + d); }, lo, hi);
}

double CovarianceSpec::lattice_covariance(int k) const {
  const double h = grid_step;
  const auto m = static_cast<int>(std::ceil(bump_half_width / h)) + 1;
  double sum = 0;
  for (int j = -m; j <= m; ++j) sum += bump(j * h) * bump((j + k) * h);
  return h * sum;
}

double CovarianceSpec::covariance_integral() const {
  const double f = bump_scale(*this) * bump_half_width * kBumpIntegral;
  return f * f;
}

void BoundaryMap::validate() const {
  if (!(center > -1 && center < 0)) throw ConfigError("map center must lie in (-1,0)");
  if (!(half_range > 0 && half_range < 0.5)) throw ConfigError("map half_range must lie in (0,0.5)");
  if (center - half_range <= -1 || center + half_range >= 0) {
    throw ConfigError("map range center +- half_range must stay inside (-1,0)");
  }
}

double BoundaryMap::value(double x) const {
  if (kind == MapKind::ScaledTanh) return center + half_range * std::tanh(x);
  return center + half_range * (2 / kPi) * std::atan(x);
}

double BoundaryMap::d1(double x) const {
  if (kind == MapKind::ScaledTanh) {
    const double c = std::cosh(x);
    return half_range / (c * c);
  }
  return half_range * (2 / kPi) / (1 + x * x);
}

double BoundaryMap::d2(double x) const {
  if (kind == MapKind::ScaledTanh) {
    const double c = std::cosh(x);
    return -2 * half_range * std::tanh(x) / (c * c);
  }
  const double q = 1 + x * x;
  return -half_range * (2 / kPi) * 2 * x / (q * q);
}

double RoughBoundary::min() const { return *std::min_element(omega.begin(), omega.end()); }
double RoughBoundary::max() const { return *std::max_element(omega.begin(), omega.end()); }

double RoughBoundary::value_at(double x) const { return interpolate(*this, x).v; }
double RoughBoundary::slope_at(double x) const { return interpolate(*this, x).d1; }

void RoughBoundary::refresh_norms() {
  double k = 0, m0 = 0, m2 = 0;
  for (std::size_t i = 0; i < size(); ++i) {
    k = std::max(k, std::abs(omega1[i]));
    m0 = std::max(m0, std::abs(omega[i]));
    m2 = std::max(m2, std::abs(omega2[i]));
  }
  lipschitz_K = k;
  // Hoelder quotient of omega'' with exponent 1/2 over separations up to 1.
  double hq = 0;
  const auto reach = static_cast<std::size_t>(std::floor(1.0 / step + 1e-9));
  const std::size_t n = size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 1; d <= reach; ++d) {
      std::size_t j = i + d;
      if (j >= n) {
        if (!period) break;
        j %= n;
      }
      const double dist = static_cast<double>(d) * step;
      hq = std::max(hq, std::abs(omega2[i] - omega2[j]) / std::sqrt(dist));
    }
  }
  c2a_norm_bound = std::max({m0, k, m2}) + hq;
}

std::uint64_t left_stream(std::uint64_t seed) { return rng::hash_combine(seed, 0x1ULL); }
std::uint64_t right_stream(std::uint64_t seed) { return rng::hash_combine(seed, 0x2ULL); }

RoughBoundary sample_boundary(const CovarianceSpec& spec, const BoundaryMap& map, double window,
                              std::uint64_t seed, std::optional<double> x0,
                              std::optional<double> eval_step) {
  check_spec_window(spec, window);
  map.validate();
  const double step = eval_step.value_or(spec.grid_step);
  if (!(step > 0)) throw ConfigError("evaluation step must be positive");
  const std::uint64_t stream = left_stream(seed);
  return sample_with(spec, map, x0.value_or(-0.5 * window), step, window_count(window, step),
                     [stream](std::int64_t j) { return rng::normal_at(stream, j); });
}

RoughBoundary sample_periodized_boundary(const CovarianceSpec& spec, const BoundaryMap& map,
                                         double period, std::uint64_t seed,
                                         std::optional<double> eval_step) {
  check_spec_window(spec, period);
  map.validate();
  const double step = eval_step.value_or(spec.grid_step);
  const std::int64_t ring = checked_ratio(period, spec.grid_step, "period");
  const auto count = static_cast<std::size_t>(checked_ratio(period, step, "period"));
  const std::uint64_t stream = left_stream(seed);
  RoughBoundary b = sample_with(spec, map, -0.5 * period, step, count, [&](std::int64_t j) {
    return rng::normal_at(stream, wrap(j, ring));
  });
  b.period = period;
  b.refresh_norms();
  return b;
}

RoughBoundary sample_periodic_boundary(PeriodicShape shape, double period, double depth,
                                       std::uint64_t /*seed*/, int samples_per_period) {
  if (!(depth > 0 && depth < 1)) throw ConfigError("depth must lie in (0,1)");
  if (!(period > 0)) throw ConfigError("period must be positive");
  if (samples_per_period < 4) throw ConfigError("samples_per_period must be >= 4");
  RoughBoundary b;
  b.x0 = 0;
  b.step = period / samples_per_period;
  b.period = period;
  const auto n = static_cast<std::size_t>(samples_per_period);
  b.omega.resize(n);
  b.omega1.resize(n);
  b.omega2.resize(n);
  const double k = kPi / period;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = b.x(i);
    if (shape == PeriodicShape::Sinusoid) {
      const double th = 2 * k * x;
      b.omega[i] = -0.5 * (1 + depth * std::cos(th));
      b.omega1[i] = depth * k * std::sin(th);
      b.omega2[i] = 2 * depth * k * k * std::cos(th);
    } else {
      const double c = std::cos(k * x), s = std::sin(k * x);
      b.omega[i] = -0.5 * (1 + depth) + depth * c * c * c * c;
      b.omega1[i] = -4 * depth * k * c * c * c * s;
      b.omega2[i] = depth * k * k * (12 * c * c * s * s - 4 * c * c * c * c);
    }
  }
  b.refresh_norms();
  return b;
}

RoughBoundary flat_boundary(double height, double period, double step) {
  if (!(height > -1 && height < 0)) throw ConfigError("flat height must lie in (-1,0)");
  RoughBoundary b;
  b.x0 = 0;
  b.step = step;
  b.period = period;
  const auto n = static_cast<std::size_t>(checked_ratio(period, step, "period"));
  b.omega.assign(n, height);
  b.omega1.assign(n, 0.0);
  b.omega2.assign(n, 0.0);
  b.refresh_norms();
  return b;
}

CoupledPair couple_pair(const CovarianceSpec& spec, const BoundaryMap& map, double n, double window,
                        std::uint64_t seed, bool periodic, std::optional<double> eval_step) {
  if (!(n >= 0)) throw ConfigError("n must be non-negative");
  check_spec_window(spec, window);
  map.validate();
  const double h = spec.grid_step;
  const double share = n + spec.kappa;
  const std::uint64_t ls = left_stream(seed);
  const std::uint64_t rs = right_stream(seed);
  CoupledPair pair;
  pair.n = n;
  if (periodic) {
    const std::int64_t ring = checked_ratio(window, h, "window");
    auto ring_index = [ring](std::int64_t j) {
      std::int64_t m = wrap(j, ring);
      if (m >= (ring + 1) / 2) m -= ring;
      return m;
    };
    pair.left = sample_periodized_boundary(spec, map, window, seed, eval_step);
    const double step = pair.left.step;
    pair.right = sample_with(spec, map, -0.5 * window, step, pair.left.size(), [&](std::int64_t j) {
      const std::int64_t m = ring_index(j);
      const std::int64_t w = wrap(j, ring);
      return std::abs(static_cast<double>(m) * h) <= share ? rng::normal_at(ls, w)
                                                            : rng::normal_at(rs, w);
    });
    pair.right.period = window;
    pair.right.refresh_norms();
  } else {
    pair.left = sample_boundary(spec, map, window, seed, std::nullopt, eval_step);
    pair.right = sample_with(spec, map, pair.left.x0, pair.left.step, pair.left.size(),
                             [&](std::int64_t j) {
                               return std::abs(static_cast<double>(j) * h) <= share
                                          ? rng::normal_at(ls, j)
                                          : rng::normal_at(rs, j);
                             });
  }
  return pair;
}

RoughBoundary translate(const RoughBoundary& b, double h) {
  if (b.period) {
    RoughBoundary out = b;
    const double q = h / b.step;
    const double r = std::round(q);
    const std::size_t n = b.size();
    if (std::abs(q - r) <= 1e-9 * std::max(1.0, std::abs(q))) {
      const auto k = static_cast<std::int64_t>(r);
      for (std::size_t i = 0; i < n; ++i) {
        const auto j = static_cast<std::size_t>(wrap(static_cast<std::int64_t>(i) + k,
                                                     static_cast<std::int64_t>(n)));
        out.omega[i] = b.omega[j];
        out.omega1[i] = b.omega1[j];
        out.omega2[i] = b.omega2[j];
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        const Hermite v = interpolate(b, b.x(i) + h);
        out.omega[i] = v.v;
        out.omega1[i] = v.d1;
        out.omega2[i] = v.d2;
      }
    }
    out.refresh_norms();
    return out;
  }
  const std::int64_t k = checked_ratio(h, b.step, "translation");
  const auto shift = static_cast<std::size_t>(std::abs(k));
  if (shift >= b.size()) throw DomainError("translation leaves no overlap with the window");
  RoughBoundary out;
  out.step = b.step;
  const std::size_t m = b.size() - shift;
  const std::size_t src = k >= 0 ? shift : 0;
  out.x0 = k >= 0 ? b.x0 : b.x0 + static_cast<double>(shift) * b.step;
  out.omega.assign(b.omega.begin() + src, b.omega.begin() + src + m);
  out.omega1.assign(b.omega1.begin() + src, b.omega1.begin() + src + m);
  out.omega2.assign(b.omega2.begin() + src, b.omega2.begin() + src + m);
  out.refresh_norms();
  return out;
}

RoughBoundary rescale(const RoughBoundary& b, double eps) {
  if (!(eps > 0)) throw ConfigError("scale must be positive");
  RoughBoundary out = b;
  out.x0 = b.x0 * eps;
  out.step = b.step * eps;
  if (b.period) out.period = *b.period * eps;
  for (std::size_t i = 0; i < b.size(); ++i) {
    out.omega[i] = eps * b.omega[i];
    out.omega2[i] = b.omega2[i] / eps;
  }
  out.refresh_norms();
  return out;
}

void write_csv(const RoughBoundary& b, std::ostream& os) {
  os << "x,omega,omega1,omega2\n";
  char line[160];
  for (std::size_t i = 0; i < b.size(); ++i) {
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g\n", b.x(i), b.omega[i], b.omega1[i],
                  b.omega2[i]);
    os << line;
  }
}

RoughBoundary read_csv(std::istream& is, std::optional<double> period) {
  std::string line;
  do {
    if (!std::getline(is, line)) throw ConfigError("empty boundary CSV");
  } while (line.empty() || line[0] == '#');
  std::vector<double> xs;
  RoughBoundary b;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double x, w, w1, w2;
    if (!(ss >> x >> w >> w1 >> w2)) throw ConfigError("malformed boundary CSV row: " + line);
    xs.push_back(x);
    b.omega.push_back(w);
    b.omega1.push_back(w1);
    b.omega2.push_back(w2);
  }
  if (xs.size() < 2) throw ConfigError("boundary CSV needs at least two rows");
  b.x0 = xs.front();
  b.step = (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1);
  b.period = period;
  b.refresh_norms();
  return b;
}

BoundaryCache::BoundaryCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path BoundaryCache::path_for(std::uint64_t spec_hash, std::uint64_t seed) const {
  char name[64];
  std::snprintf(name, sizeof name, "%016llx_%016llx.rwb", static_cast<unsigned long long>(spec_hash),
                static_cast<unsigned long long>(seed));
  return dir_ / name;
}

namespace {
constexpr char kMagic[4] = {'R', 'W', 'B', '1'};

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <class T>
bool get(std::istream& is, T& v) {
  return static_cast<bool>(is.read(reinterpret_cast<char*>(&v), sizeof v));
}
}  // namespace

std::optional<RoughBoundary> BoundaryCache::load(std::uint64_t spec_hash, std::uint64_t seed) const {
  std::ifstream in(path_for(spec_hash, seed), std::ios::binary);
  if (!in) return std::nullopt;
  char magic[4];
  in.read(magic, 4);
  if (!in || !std::equal(magic, magic + 4, kMagic)) return std::nullopt;
  RoughBoundary b;
  std::uint8_t has_period = 0;
  double period = 0;
  std::uint64_t n = 0;
  if (!get(in, b.x0) || !get(in, b.step) || !get(in, has_period) || !get(in, period) || !get(in, n)) {
    return std::nullopt;
  }
  if (has_period) b.period = period;
  for (auto* v : {&b.omega, &b.omega1, &b.omega2}) {
    v->resize(n);
    in.read(reinterpret_cast<char*>(v->data()), static_cast<std::streamsize>(n * sizeof(double)));
  }
  if (!in) return std::nullopt;
  b.refresh_norms();
  return b;
}

void BoundaryCache::store(std::uint64_t spec_hash, std::uint64_t seed, const RoughBoundary& b) const {
  std::ofstream out(path_for(spec_hash, seed), std::ios::binary | std::ios::trunc);
  out.write(kMagic, 4);
  put(out, b.x0);
  put(out, b.step);
  put(out, static_cast<std::uint8_t>(b.period ? 1 : 0));
  put(out, b.period.value_or(0.0));
  put(out, static_cast<std::uint64_t>(b.size()));
  for (const auto* v : {&b.omega, &b.omega1, &b.omega2}) {
    out.write(reinterpret_cast<const char*>(v->data()),
              static_cast<std::streamsize>(v->size() * sizeof(double)));
  }
}

RoughBoundary BoundaryCache::get_or_sample(std::uint64_t spec_hash, std::uint64_t seed,
                                           const std::function<RoughBoundary()>& sampler) const {
  if (auto b = load(spec_hash, seed)) return *b;
  RoughBoundary b = sampler();
  store(spec_hash, seed, b);
  return b;
}

}  // namespace roughwall::boundary
