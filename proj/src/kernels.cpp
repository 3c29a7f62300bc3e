#include "roughwall/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>

namespace roughwall::kernels {

namespace {
using std::pow;
#include "generated/kernel_derivs.inc"

void require_positive(double y2) {
  if (!(y2 > 0)) throw DomainError("y2 must be positive");
}

double max_entry_diff(const KernelMatrix& a, const KernelMatrix& b) {
  double m = 0;
  for (std::size_t i = 0; i < 4; ++i) m = std::max(m, std::abs(a.e[i] - b.e[i]));
  return m;
}

std::string fmt(const char* f, double a, double b = 0) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}
}  // namespace

double KernelMatrix::max_abs() const {
  double m = 0;
  for (double v : e) m = std::max(m, std::abs(v));
  return m;
}

KernelMatrix stokes_poisson(double t, double y2) {
  require_positive(y2);
  const double r2 = t * t + y2 * y2;
  const double c = 2 * y2 / (kPi * r2 * r2);
  return {{c * t * t, c * t * y2, c * t * y2, c * y2 * y2}};
}

KernelMatrix stokes_poisson_deriv(int b1, int b2, double t, double y2) {
  require_positive(y2);
  if (b1 < 0 || b2 < 0 || b1 + b2 > 3) throw DomainError("derivative order |beta| > 3 is unsupported");
  return {stokes_poisson_deriv_table(b1, b2, t, y2)};
}

std::array<std::complex<double>, 4> stokes_poisson_hat(double k, double y2) {
  require_positive(y2);
  const double a = std::abs(k) * y2;
  const double e = std::exp(-a);
  const std::complex<double> off(0.0, -k * y2 * e);
  return {std::complex<double>((1 - a) * e), off, off, std::complex<double>((1 + a) * e)};
}

KernelMatrix stokes_jump_data(Point2 z, double y1) {
  if (!(z.x2 > 0)) throw DomainError("z2 must be positive");
  const double d = z.x1 - y1;
  const double r2 = d * d + z.x2 * z.x2;
  const double c = 2 * z.x2 / (kPi * r2 * r2);
  constexpr double y2 = 0.0;  // evaluation on the wall
  return {{c * d * d, c * d * y2, c * d * y2, c * y2 * y2}};
}

double harmonic_poisson(double t, double y2) {
  require_positive(y2);
  return y2 / (kPi * (t * t + y2 * y2));
}

double HittingDensity::operator()(double t) const {
  const double a = level();
  if (t <= 0) return 0.0;
  return a / std::sqrt(2 * kPi * t * t * t) * std::exp(-a * a / (2 * t));
}

double HittingDensity::survival(double t) const {
  const double a = level();
  if (t <= 0) return 1.0;
  return std::erf(a / std::sqrt(2 * t));
}

double hitting_prob_lateral_before_down(double n) {
  if (!(n >= 0)) throw DomainError("n must be non-negative");
  if (n == 0) return 1.0;
  const HittingDensity lateral{n, HittingKind::Lateral};
  const HittingDensity down{1.0, HittingKind::Downward};
  const double a = lateral.level();
  // int_0^inf p_a(t) P(T_{-1} > t) dt with t = a^2 / (2 v^2), which maps p_a(t) dt to (2/sqrt(pi)) e^{-v^2} dv.
  auto integrand = [&](double v) {
    if (v <= 0) return 0.0;
    const double t = a * a / (2 * v * v);
    return lateral(t) * down.survival(t) * a * a / (v * v * v);
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-13);
}

double integrate_line(const std::function<double(double)>& f, double scale, double tol) {
  auto g = [&](double th) {
    const double c = std::cos(th);
    if (std::abs(c) < 1e-150) return 0.0;
    const double v = f(scale * std::tan(th));
    return v == 0.0 ? 0.0 : v * scale / (c * c);
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, -kPi / 2, kPi / 2, 20, tol);
}

std::vector<CheckItem> invariant_suite(std::uint64_t seed) {
  std::vector<CheckItem> items;
  for (double y2 : {0.5, 1.0, 4.0}) {
    double err = 0;
    for (int k = 0; k < 4; ++k) {
      const double v = integrate_line([&](double t) { return stokes_poisson(t, y2).e[k]; }, y2);
      err = std::max(err, std::abs(v - (k == 0 || k == 3 ? 1.0 : 0.0)));
    }
    items.push_back({fmt("stokes_poisson integrates to identity, y2=%g", y2), err, 1e-6, err < 1e-6});
  }

  // Each derivative is compared with a central difference of the derivative one order below.
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> ut(-3.0, 3.0), uy(0.5, 3.0);
  const double h = 1e-4;
  double worst = 0;
  for (int p = 0; p < 20; ++p) {
    const double t = ut(gen), y = uy(gen);
    for (int b1 = 0; b1 <= 3; ++b1) {
      for (int b2 = 0; b1 + b2 <= 3; ++b2) {
        if (b1 + b2 == 0) continue;
        KernelMatrix fd;
        const KernelMatrix exact = stokes_poisson_deriv(b1, b2, t, y);
        if (b1 > 0) {
          const auto hi = stokes_poisson_deriv(b1 - 1, b2, t + h, y);
          const auto lo = stokes_poisson_deriv(b1 - 1, b2, t - h, y);
          for (std::size_t i = 0; i < 4; ++i) fd.e[i] = (hi.e[i] - lo.e[i]) / (2 * h);
        } else {
          const auto hi = stokes_poisson_deriv(b1, b2 - 1, t, y + h);
          const auto lo = stokes_poisson_deriv(b1, b2 - 1, t, y - h);
          for (std::size_t i = 0; i < 4; ++i) fd.e[i] = (hi.e[i] - lo.e[i]) / (2 * h);
        }
        worst = std::max(worst, max_entry_diff(exact, fd) / exact.max_abs());
      }
    }
  }
  items.push_back({"derivative kernels match finite differences at 20 random points", worst, 1e-5,
                   worst < 1e-5});

  {
    const double v = integrate_line([](double t) { return stokes_poisson_deriv(1, 0, t, 2.0).e[0]; }, 2.0);
    items.push_back({"integral of d_t G11 at y2=2 vanishes", std::abs(v), 1e-8, std::abs(v) < 1e-8});
  }

  double herr = 0;
  for (double y2 : {0.5, 1.0, 4.0}) {
    herr = std::max(herr, std::abs(integrate_line([&](double t) { return harmonic_poisson(t, y2); }, y2) - 1));
  }
  items.push_back({"harmonic_poisson integrates to 1", herr, 1e-8, herr < 1e-8});

  double derr = 0;
  for (const HittingDensity d : {HittingDensity{2, HittingKind::Lateral}, HittingDensity{8, HittingKind::Lateral},
                                 HittingDensity{32, HittingKind::Lateral}, HittingDensity{1, HittingKind::Downward}}) {
    const double a = d.level();
    // t = a^2 / (2 v^2) again turns the density into (2/sqrt(pi)) e^{-v^2}.
    const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double s) { return s <= 0 ? 0.0 : d(a * a / (2 * s * s)) * a * a / (s * s * s); }, 0.0,
        std::numeric_limits<double>::infinity(), 15, 1e-13);
    derr = std::max(derr, std::abs(v - 1));
  }
  items.push_back({"hitting densities integrate to 1", derr, 1e-6, derr < 1e-6});

  {
    const double p2 = hitting_prob_lateral_before_down(2.0);
    const double p0 = hitting_prob_lateral_before_down(0.0);
    const double e = std::max(std::abs(p2 - 0.5), std::abs(p0 - 1.0));
    items.push_back({"hitting probability at n=2 is 1/2 and at n=0 is 1", e, 1e-9, e < 1e-9});
  }
  {
    double lo = 1e300, hi = 0;
    for (double n = 1; n <= 64; n *= 2) {
      const double s = hitting_prob_lateral_before_down(n) * std::sqrt(n * n + 1);
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    items.push_back({"hitting probability times sqrt(n^2+1) bounded on [1,64]", hi, 2.0, hi < 2.0,
                     false, fmt("range [%.4f, %.4f]", lo, hi)});
  }
  {
    double err = 0;
    boost::math::quadrature::ooura_fourier_cos<double> fcos;
    boost::math::quadrature::ooura_fourier_sin<double> fsin;
    for (double y2 : {0.7, 1.3}) {
      for (double k : {0.4, 1.9}) {
        const auto hat = stokes_poisson_hat(k, y2);
        // G11, G22 are even in t and G12 is odd.
        const double g11 = 2 * fcos.integrate([&](double t) { return stokes_poisson(t, y2).e[0]; }, k).first;
        const double g22 = 2 * fcos.integrate([&](double t) { return stokes_poisson(t, y2).e[3]; }, k).first;
        const double g12 = -2 * fsin.integrate([&](double t) { return stokes_poisson(t, y2).e[1]; }, k).first;
        err = std::max({err, std::abs(hat[0] - g11), std::abs(hat[3] - g22),
                        std::abs(hat[1] - std::complex<double>(0, g12))});
      }
    }
    items.push_back({"Fourier transform of G matches closed form", err, 1e-6, err < 1e-6});
  }
  {
    double disc = 0;
    for (double d : {0.0, 0.5, 1.0, 3.0, 10.0}) {
      const Point2 z{d, 1.0};
      disc = std::max(disc, max_entry_diff(stokes_jump_data(z, 0.0), stokes_poisson(d, 1.0)));
    }
    items.push_back({"jump data vs G(z1-y1, z2) discrepancy", disc, 0.0, true, true,
                     "the printed jump matrix, read at y2=0, keeps only the (1,1) entry of G"});
  }
  return items;
}

}  // namespace roughwall::kernels
