// Acceptance driver: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance [work_dir] [criterion ...]
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>

#include "roughwall/boundary.hpp"
#include "roughwall/kernels.hpp"
#include "roughwall/stokes.hpp"
#include "runner.hpp"

namespace fs = std::filesystem;
using namespace roughwall;

namespace {

fs::path g_work = "acceptance_runs";

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... v) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, v...);
  return buf;
}

cli::RunManifest run(const std::string& exp, const std::string& tag, std::initializer_list<std::pair<std::string, std::string>> sets = {},
                     int workers = 1) {
  auto cfg = cli::ExperimentConfig::defaults(exp);
  for (const auto& [k, v] : sets) cfg.set(k, v);
  cfg.workers = workers;
  return cli::run(cfg, g_work / tag);
}

// Composite Simpson for int_R f, t = s tan(theta); endpoints evaluated just inside +-pi/2.
double simpson_line(const std::function<double(double)>& f, double s, int n = 20000) {
  const double a = -kPi / 2, b = kPi / 2, h = (b - a) / n;
  auto g = [&](double th) {
    th = std::clamp(th, a + 1e-7, b - 1e-7);
    const double c = std::cos(th);
    return f(s * std::tan(th)) * s / (c * c);
  };
  double acc = g(a) + g(b);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * g(a + i * h);
  return acc * h / 3;
}

Outcome c1() {
  double worst_int = 0;
  for (double y2 : {0.5, 1.0, 4.0})
    for (std::size_t k = 0; k < 4; ++k) {
      const double v = simpson_line([&](double t) { return kernels::stokes_poisson(t, y2).e[k]; }, y2);
      worst_int = std::max(worst_int, std::abs(v - ((k == 0 || k == 3) ? 1.0 : 0.0)));
    }
  // derivatives of every order up to 3 against fourth-order central differences of the order below
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> ut(-3, 3), uy(0.3, 3);
  double worst_fd = 0;
  for (int p = 0; p < 20; ++p) {
    const double t = ut(gen), y = uy(gen), h = 1e-3 * y;
    for (int b1 = 0; b1 <= 2; ++b1)
      for (int b2 = 0; b1 + b2 <= 2; ++b2) {
        auto diff = [&](bool along_t) {
          std::array<double, 4> d{};
          const double w[4] = {1, -8, 8, -1};
          const double o[4] = {-2, -1, 1, 2};
          for (int i = 0; i < 4; ++i) {
            const auto m = along_t ? kernels::stokes_poisson_deriv(b1, b2, t + o[i] * h, y)
                                   : kernels::stokes_poisson_deriv(b1, b2, t, y + o[i] * h);
            for (std::size_t k = 0; k < 4; ++k) d[k] += w[i] * m.e[k] / (12 * h);
          }
          return d;
        };
        const auto at = kernels::stokes_poisson_deriv(b1 + 1, b2, t, y);
        const auto ay = kernels::stokes_poisson_deriv(b1, b2 + 1, t, y);
        const auto ft = diff(true), fy = diff(false);
        for (std::size_t k = 0; k < 4; ++k) {
          worst_fd = std::max(worst_fd, std::abs(at.e[k] - ft[k]) / at.max_abs());
          worst_fd = std::max(worst_fd, std::abs(ay.e[k] - fy[k]) / ay.max_abs());
        }
      }
  }
  return {worst_int <= 1e-6 && worst_fd <= 1e-5,
          fmt("max |int G - I| = %.2e (tol 1e-6), max derivative relative error = %.2e (tol 1e-5)", worst_int, worst_fd)};
}

Outcome c2() {
  const double c = 0.3;
  stokes::GridParams g;
  g.max_step = 1;
  const auto s = stokes::solve_cell({boundary::flat_boundary(-c, 4, 0.25), 16, g});
  double e_cell = 0;
  for (double v : s.field.u) e_cell = std::max(e_cell, std::abs(v - c));
  for (double v : s.field.w) e_cell = std::max(e_cell, std::abs(v));

  // MAC no-slip by reflection is exact up to U''h^2/8 for a quadratic profile: C = 12 phi / 8
  const double phi = 0.1, C = 12 * phi / 8;
  double worst_ratio = 0;
  for (double h : {1.0 / 8, 1.0 / 16, 1.0 / 32}) {
    stokes::ChannelOptions o;
    o.flat_step = h;
    const auto ch = stokes::solve_channel(boundary::flat_boundary(-0.5, 1, 0.25), 0, phi, stokes::ChannelMode::Stokes, o);
    double e = 0;
    for (int j = 0; j < ch.field.grid.n2; ++j)
      e = std::max(e, std::abs(ch.field.U(0, j) - stokes::poiseuille(phi, ch.field.grid.yu(0, j))));
    worst_ratio = std::max(worst_ratio, e / (h * h));
  }
  return {e_cell <= 1e-8 && worst_ratio <= C * (1 + 1e-6),
          fmt("flat cell max error = %.2e (tol 1e-8), Poiseuille max error / h^2 = %.4f (C = %.4f)", e_cell, worst_ratio, C)};
}

Outcome c3() {
  const auto m = run("decay", "c3");
  const double slope = m.summary.at("slope"), target = m.summary.at("target_slope"), r2 = m.summary.at("r_squared");
  const double rel = std::abs(slope - target) / std::abs(target);
  return {r2 > 0.98 && rel <= 0.25,
          fmt("semilog slope = %.4f vs -2pi/L = %.4f (rel %.3f, tol 0.25), r^2 = %.5f (> 0.98); spectral route slope %.4f",
              slope, target, rel, r2, m.summary.at("spectral_slope"))};
}

cli::RunManifest g_clt;

Outcome c4() {
  g_clt = run("clt", "c4");
  const double e = g_clt.summary.at("exponent");
  return {e >= -1.25 && e <= -0.75,
          fmt("variance exponent = %.4f in [-1.25, -0.75] (r^2 %.4f, ci95 %.3f, grid route %.4f)", e,
              g_clt.summary.at("r_squared"), g_clt.summary.at("ci95"), g_clt.summary.at("grid_exponent"))};
}

Outcome c5() {
  if (g_clt.summary.empty()) g_clt = run("clt", "c4");
  const double e = g_clt.summary.at("v_growth_exponent");
  return {e >= 0.75 && e <= 1.2, fmt("E|V(t)|^2 growth exponent = %.4f in [0.75, 1.2] (r^2 %.4f)", e, g_clt.summary.at("v_growth_r_squared"))};
}

Outcome c6() {
  const auto m = run("scalar-couple", "c6");
  const double e = m.summary.at("exponent"), v = m.summary.at("bound_violations");
  return {e >= -1.4 && e <= -0.7 && v == 0,
          fmt("coupled scalar exponent = %.4f in [-1.4, -0.7] (r^2 %.4f), bound violations = %.0f", e, m.summary.at("r_squared"), v)};
}

Outcome c7() {
  const auto m = run("couple", "c7");
  const double e = m.summary.at("exponent");
  return {e <= -0.5, fmt("coupled Stokes exponent = %.4f (<= -0.5, r^2 %.4f)", e, m.summary.at("r_squared"))};
}

Outcome c8() {
  const auto m = run("wall-law", "c8");
  const double d = m.summary.at("dirichlet_exponent"), n = m.summary.at("navier_exponent");
  return {d >= 0.8 && d <= 1.2 && n >= 1.35 && n >= d + 0.25,
          fmt("Dirichlet exponent = %.4f in [0.8, 1.2], Navier exponent = %.4f (>= 1.35 and >= Dirichlet + 0.25)", d, n)};
}

Outcome c9() {
  const auto m = run("green", "c9");
  const double e = m.summary.at("exponent"), r2 = m.summary.at("near_r_squared"),
               sc = m.summary.at("scaling_max_relative_difference");
  return {e >= -2.4 && e <= -1.6 && r2 > 0.95 && sc < 1e-6,
          fmt("far-field exponent = %.4f in [-2.4, -1.6], near-field log fit r^2 = %.4f (> 0.95), scaling relative difference = %.2e (< 1e-6)",
              e, r2, sc)};
}

Outcome c10() {
  const auto m = run("optimality", "c10");
  const double h = m.summary.at("H_ratio"), f = m.summary.at("floor"), lo = m.summary.at("floor_ci_low");
  return {h <= 3 && f > 0 && lo > 0,
          fmt("H max/min = %.4f (<= 3), floor = %.3e with 95%% CI [%.3e, %.3e] excluding 0", h, f, lo, m.summary.at("floor_ci_high"))};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome c11() {
  int compared = 0, differing = 0;
  auto compare = [&](const std::string& exp, std::initializer_list<std::pair<std::string, std::string>> sets) {
    const auto a = run(exp, "c11_" + exp + "_w1", sets, 1);
    const auto b = run(exp, "c11_" + exp + "_w2", sets, 2);
    const auto c = run(exp, "c11_" + exp + "_w1_again", sets, 1);
    for (const auto& f : a.files) {
      if (fs::path(f.name).extension() != ".csv") continue;
      const auto x = slurp(g_work / ("c11_" + exp + "_w1") / f.name);
      for (const char* other : {"_w2", "_w1_again"}) {
        ++compared;
        if (x != slurp(g_work / ("c11_" + exp + other) / f.name)) ++differing;
      }
    }
    (void)b;
    (void)c;
  };
  compare("kernels-check", {});
  compare("scalar-couple", {{"pairs", "8"}, {"paths", "2000"}});
  return {compared > 0 && differing == 0, fmt("%d CSV comparisons across reruns and worker counts 1/2, %d differ", compared, differing)};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_work = argv[1];
  std::set<std::string> only;
  for (int i = 2; i < argc; ++i) only.insert(argv[i]);
  fs::create_directories(g_work);

  // runtime limits in seconds; C5 shares the run of C4
  const std::vector<std::tuple<std::string, Outcome (*)(), double>> criteria{
      {"C1", c1, 1},       {"C2", c2, 10},     {"C3", c3, 60},     {"C4", c4, 1800},
      {"C5", c5, 1800},    {"C6", c6, 600},    {"C7", c7, 3600},   {"C8", c8, 3600},
      {"C9", c9, 1200},    {"C10", c10, 900},  {"C11", c11, 1e9},
  };
  int failed = 0;
  for (const auto& [name, fn, limit] : criteria) {
    if (!only.empty() && !only.count(name)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (sec > limit) {
      o.pass = false;
      o.detail += fmt("; runtime over %.0f s", limit);
    }
    failed += !o.pass;
    std::printf("%-4s %s  %s [%.1f s]\n", name.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str(), sec);
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
