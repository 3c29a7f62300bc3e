#include "runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "roughwall/boundary.hpp"
#include "roughwall/common.hpp"
#include "roughwall/kernels.hpp"
#include "roughwall/parallel.hpp"
#include "roughwall/rng.hpp"
#include "roughwall/scalar.hpp"
#include "roughwall/stats.hpp"
#include "roughwall/stokes.hpp"
#include "svg.hpp"

namespace roughwall::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;
using Defaults = std::map<std::string, std::string>;

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"gen-boundary", "cell",  "alpha",         "decay",      "clt",
                                              "couple",       "green", "wall-law",      "scalar-clt", "scalar-couple",
                                              "optimality",   "kernels-check"};
  return names;
}

namespace {

const Defaults& base_defaults() {
  static const Defaults d{
      {"seed", "1"},
      // ensemble
      {"bump_half_width", "1"},
      {"amplitude", "0.6"},
      {"kappa", "2"},
      {"grid_step", "0.25"},
      {"map", "tanh"},
      {"map_center", "-0.5"},
      {"map_half_range", "0.3"},
      // single boundary
      {"shape", "random"},
      {"period", "64"},
      {"depth", "0.5"},
      {"flat_height", "-0.5"},
      {"shape_samples", "64"},
      {"samples", "1"},
      // grid
      {"h", "0.25"},
      {"uniform_height", "2"},
      {"growth", "1.08"},
      {"max_step", "8"},
      {"blend", "3"},
      {"top_height", "64"},
      {"tol", "1e-9"},
      {"heights", "4,8,16,32"},
      {"fit_from", "0"},
      {"t_min", "4"},
      {"t_max", "64"},
      // coupled pairs
      {"n_list", "4,8,16,32"},
      {"pairs", "50"},
      {"window", "256"},
      {"paths", "10000"},
      {"delta_exit", "1e-3"},
      {"kill_height", "64"},
      // channel
      {"eps_list", "1/8,1/16,1/32,1/64"},
      {"phi", "0.1"},
      {"phi_max", "0.5"},
      {"mode", "stokes"},
      {"channel_max_step", "1/128"},
      // green
      {"separations", "4,8,16,32,64"},
      {"tau", "0.9"},
      {"delta", "1"},
      {"near_h", "1/32"},
      {"near_period", "16"},
      {"near_top", "16"},
      {"near_separations", "0.125,0.25,0.5,1"},
      {"scaling_eps", "0.5"},
      {"scaling_period", "32"},
      {"scaling_top", "32"},
      {"scaling_separations", "1,2,4,8"},
      // scalar
      {"geometry", "flat"},
  };
  return d;
}

const std::map<std::string, Defaults>& experiment_defaults() {
  static const std::map<std::string, Defaults> d{
      {"gen-boundary", {}},
      {"cell", {{"shape", "sinusoid"}, {"period", "8"}, {"h", "0.125"}, {"max_step", "1"}, {"heights", "1,2,4,8"}}},
      {"alpha", {{"samples", "20"}, {"top_height", "32"}}},
      {"decay",
       {{"shape", "sinusoid"},
        {"period", "8"},
        {"h", "0.125"},
        {"max_step", "1"},
        {"heights", "8,10,12,14,16,18,20"}}},
      {"clt", {{"period", "512"}, {"samples", "200"}, {"top_height", "256"}, {"t_max", "256"}}},
      {"couple", {{"top_height", "128"}}},
      {"green", {{"shape", "flat"}, {"period", "512"}, {"top_height", "512"}}},
      {"wall-law",
       {{"period", "8"}, {"h", "1/16"}, {"top_height", "32"}, {"max_step", "1"}, {"blend", "2"}, {"tol", "1e-10"}}},
      {"scalar-clt",
       {{"period", "1024"}, {"samples", "100"}, {"top_height", "4096"}, {"max_step", "64"}, {"heights", "4,8,16,32,64"}}},
      {"scalar-couple", {{"pairs", "200"}}},
      {"optimality",
       {{"period", "1024"}, {"samples", "200"}, {"top_height", "4096"}, {"max_step", "64"}, {"heights", "4,8,16,32,64"}}},
      {"kernels-check", {}},
  };
  return d;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Plain decimal or a fraction a/b.
bool parse_number(const std::string& s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const auto slash = t.find('/');
  try {
    std::size_t pos = 0;
    if (slash == std::string::npos) {
      out = std::stod(t, &pos);
      return pos == t.size() && std::isfinite(out);
    }
    double a = 0, b = 0;
    if (!parse_number(t.substr(0, slash), a) || !parse_number(t.substr(slash + 1), b) || b == 0) return false;
    out = a / b;
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

bool parse_list(const std::string& s, std::vector<double>& out) {
  out.clear();
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    double v = 0;
    if (!parse_number(item, v)) return false;
    out.push_back(v);
  }
  return true;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults(const std::string& experiment) {
  const auto& per = experiment_defaults();
  const auto it = per.find(experiment);
  if (it == per.end()) throw ConfigError("unknown experiment '" + experiment + "'");
  ExperimentConfig c;
  c.experiment = experiment;
  c.values = base_defaults();
  for (const auto& [k, v] : it->second) c.values[k] = v;
  return c;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text, const std::string& experiment) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::string exp = experiment;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "experiment") {
      if (!experiment.empty() && value != experiment)
        throw ConfigError("config names experiment '" + value + "' but '" + experiment + "' was requested");
      exp = value;
    } else {
      kv.emplace_back(key, value);
    }
  }
  if (exp.empty()) throw ConfigError("experiment: no experiment given");
  ExperimentConfig c = defaults(exp);
  for (const auto& [k, v] : kv) c.set(k, v);
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& file, const std::string& experiment) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config file " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), experiment);
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (key == "workers") {
    double w = 0;
    if (!parse_number(value, w) || w < 1) throw ConfigError("workers: expected a positive integer");
    workers = static_cast<int>(w);
    return;
  }
  if (!values.count(key)) throw ConfigError(key + ": unknown key");
  values[key] = value;
}

double ExperimentConfig::num(const std::string& key) const {
  double v = 0;
  if (!parse_number(text(key), v)) throw ConfigError(key + ": expected a number, got '" + text(key) + "'");
  return v;
}

long ExperimentConfig::integer(const std::string& key) const {
  const double v = num(key);
  if (v != std::floor(v)) throw ConfigError(key + ": expected an integer");
  return static_cast<long>(v);
}

std::uint64_t ExperimentConfig::seed() const {
  try {
    return std::stoull(text("seed"));
  } catch (const std::exception&) {
    throw ConfigError("seed: expected a non-negative integer");
  }
}

std::vector<double> ExperimentConfig::list(const std::string& key) const {
  std::vector<double> v;
  if (!parse_list(text(key), v)) throw ConfigError(key + ": expected a comma separated list of numbers");
  if (v.empty()) throw ConfigError(key + ": list is empty");
  return v;
}

const std::string& ExperimentConfig::text(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end()) throw ConfigError(key + ": unknown key");
  return it->second;
}

std::string ExperimentConfig::canonical() const {
  std::string s = "experiment = " + experiment + "\n";
  for (const auto& [k, v] : values) s += k + " = " + v + "\n";
  return s;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a(canonical()); }

// ---------------------------------------------------------------------------------------------------
// validation

namespace {

const std::map<std::string, std::vector<std::string>>& used_lists() {
  static const std::map<std::string, std::vector<std::string>> m{
      {"cell", {"heights"}},
      {"decay", {"heights"}},
      {"clt", {"heights"}},
      {"couple", {"n_list"}},
      {"green", {"separations", "near_separations", "scaling_separations"}},
      {"wall-law", {"eps_list"}},
      {"scalar-clt", {"heights"}},
      {"scalar-couple", {"n_list"}},
      {"optimality", {"heights"}},
  };
  return m;
}

bool uses_ensemble(const std::string& e) {
  return e == "clt" || e == "alpha" || e == "couple" || e == "scalar-clt" || e == "scalar-couple" ||
         e == "optimality";
}

bool pairs_experiment(const std::string& e) { return e == "couple" || e == "scalar-couple"; }

}  // namespace

std::vector<Diagnostic> validate(const ExperimentConfig& cfg) {
  std::vector<Diagnostic> out;
  auto diag = [&](std::string f, std::string m) { out.push_back({std::move(f), std::move(m)}); };

  std::map<std::string, double> n;
  for (const auto& [k, v] : cfg.values) {
    if (k == "map" || k == "shape" || k == "mode" || k == "geometry" || k == "seed") continue;
    std::vector<double> lst;
    if (!parse_list(v, lst)) {
      diag(k, "not a number or list of numbers: '" + v + "'");
    } else if (lst.size() == 1) {
      n[k] = lst[0];
    }
  }
  try {
    (void)cfg.seed();
  } catch (const ConfigError& e) {
    diag("seed", e.what());
  }
  auto one_of = [&](const std::string& key, std::initializer_list<const char*> opts) {
    const std::string& v = cfg.text(key);
    for (const char* o : opts)
      if (v == o) return;
    std::string all;
    for (const char* o : opts) all += std::string(all.empty() ? "" : "|") + o;
    diag(key, "expected one of " + all + ", got '" + v + "'");
  };
  one_of("map", {"tanh", "atan"});
  one_of("shape", {"random", "sinusoid", "bumps", "flat"});
  one_of("mode", {"stokes", "picard"});
  one_of("geometry", {"flat", "rough"});
  if (!out.empty()) return out;

  const auto lists = used_lists().find(cfg.experiment);
  if (lists != used_lists().end()) {
    for (const auto& key : lists->second) {
      std::vector<double> v;
      parse_list(cfg.text(key), v);
      if (v.empty()) diag(key, "list is empty");
      if (std::any_of(v.begin(), v.end(), [](double x) { return !(x > 0); })) diag(key, "entries must be positive");
    }
  }

  boundary::CovarianceSpec spec{n["bump_half_width"], n["amplitude"], n["kappa"], n["grid_step"]};
  try {
    spec.validate();
  } catch (const ConfigError& e) {
    diag("bump_half_width/kappa/grid_step", e.what());
  }

  if (pairs_experiment(cfg.experiment)) {
    const double window = n["window"], kappa = n["kappa"];
    if (window < 2 * kappa) diag("window/kappa", "window " + fmt(window) + " is shorter than 2*kappa = " + fmt(2 * kappa));
    std::vector<double> ns;
    parse_list(cfg.text("n_list"), ns);
    for (double v : ns)
      if (2 * (v + kappa) >= window)
        diag("window/n_list/kappa", "coupled pair n = " + fmt(v) + " needs window > 2 (n + kappa) = " + fmt(2 * (v + kappa)));
    if (n["pairs"] < 1) diag("pairs", "need at least one pair per n");
  }
  if (cfg.experiment == "scalar-couple" && n["paths"] < 1) diag("paths", "need at least one path");

  const std::string shape = cfg.text("shape");
  const double h = n["h"], period = n["period"];
  if (!(h > 0)) diag("h", "grid step must be positive");
  if (!(period > 0)) diag("period", "period must be positive");
  if (out.empty()) {
    if (shape == "random" && h > 0.5 * n["bump_half_width"])
      diag("h/bump_half_width", "grid step does not resolve the boundary bump (need h <= bump_half_width / 2)");
    if ((shape == "sinusoid" || shape == "bumps") && h > period / 16)
      diag("h/period", "grid step does not resolve the periodic shape (need h <= period / 16)");
    if (shape == "random" && uses_ensemble(cfg.experiment)) {
      const double cells = period / n["grid_step"];
      if (std::abs(cells - std::round(cells)) > 1e-9) diag("period/grid_step", "period must be a multiple of grid_step");
    }
    const double cols = period / h;
    if (std::abs(cols - std::round(cols)) > 1e-9) diag("period/h", "period must be a multiple of h");
  }
  if (n["top_height"] <= 2 * n["uniform_height"]) diag("top_height/uniform_height", "top must lie above twice the uniform layer");
  if (!(n["growth"] >= 1)) diag("growth", "growth factor must be >= 1");
  if (!(n["tol"] > 0 && n["tol"] < 1)) diag("tol", "tolerance must lie in (0, 1)");

  if (cfg.experiment == "wall-law") {
    if (n["phi"] > n["phi_max"]) diag("phi/phi_max", "flux above the smallness default phi_max");
    std::vector<double> eps;
    parse_list(cfg.text("eps_list"), eps);
    if (eps.size() < 4) diag("eps_list", "need at least 4 eps values for the error fits");
    if (std::any_of(eps.begin(), eps.end(), [](double e) { return e >= 1; })) diag("eps_list", "eps must be < 1");
  }
  if (cfg.experiment == "green") {
    if (!(n["tau"] > 0 && n["tau"] < 1)) diag("tau", "tau must lie in (0, 1)");
    std::vector<double> s;
    parse_list(cfg.text("separations"), s);
    for (double v : s)
      if (2 * v >= period) diag("separations/period", "separation " + fmt(v) + " reaches half the lateral period");
  }
  if ((cfg.experiment == "clt" || cfg.experiment == "scalar-clt" || cfg.experiment == "optimality") && n["samples"] < 100)
    diag("samples", "CLT diagnostics need at least 100 samples");
  if (cfg.experiment == "clt" && !(n["t_min"] > 0 && n["t_max"] > n["t_min"])) diag("t_min/t_max", "need 0 < t_min < t_max");
  if (n["samples"] < 1) diag("samples", "need at least one sample");
  return out;
}

// ---------------------------------------------------------------------------------------------------
// experiments

namespace {

class Output {
 public:
  Output(fs::path dir, std::uint64_t seed) : dir_(std::move(dir)), seed_(seed) { fs::create_directories(dir_); }

  void write(const std::string& name, const std::string& content) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir_ / name).string());
    f << content;
    files_.push_back({name, content.size(), hex(fnv1a(content))});
  }

  void csv(const std::string& name, const std::vector<std::string>& header,
           const std::vector<std::vector<std::string>>& rows) {
    std::string s = "# seed=" + std::to_string(seed_) + "\n";
    for (std::size_t k = 0; k < header.size(); ++k) s += (k ? "," : "") + header[k];
    s += "\n";
    for (const auto& r : rows) {
      for (std::size_t k = 0; k < r.size(); ++k) s += (k ? "," : "") + r[k];
      s += "\n";
    }
    write(name, s);
  }

  void json_file(const std::string& name, json j) {
    j["seed"] = seed_;
    write(name, j.dump(2) + "\n");
  }

  const std::vector<OutputFile>& files() const { return files_; }

 private:
  fs::path dir_;
  std::uint64_t seed_;
  std::vector<OutputFile> files_;
};

class Stages {
 public:
  template <class F>
  auto time(const std::string& name, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    auto done = [&] {
      list_.push_back({name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
    };
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      done();
    } else {
      auto r = f();
      done();
      return r;
    }
  }
  const std::vector<StageTiming>& list() const { return list_; }

 private:
  std::vector<StageTiming> list_;
};

json fit_json(const stats::DecayFit& f) {
  json pts = json::array();
  for (const auto& [x, y] : f.points) pts.push_back({x, y});
  return {{"exponent", f.exponent}, {"intercept", f.intercept}, {"r_squared", f.r_squared}, {"ci95", f.ci95},
          {"points", pts}};
}

struct Context {
  const ExperimentConfig& cfg;
  Output& out;
  Stages& stages;
  std::map<std::string, double>& summary;
  std::uint64_t seed;
  int workers;
};

boundary::CovarianceSpec covariance(const ExperimentConfig& c) {
  boundary::CovarianceSpec s{c.num("bump_half_width"), c.num("amplitude"), c.num("kappa"), c.num("grid_step")};
  s.validate();
  return s;
}

boundary::BoundaryMap boundary_map(const ExperimentConfig& c) {
  boundary::BoundaryMap m;
  m.kind = c.text("map") == "atan" ? boundary::MapKind::ScaledAtan : boundary::MapKind::ScaledTanh;
  m.center = c.num("map_center");
  m.half_range = c.num("map_half_range");
  m.validate();
  return m;
}

stokes::GridParams grid_params(const ExperimentConfig& c) {
  return {c.num("h"), c.num("uniform_height"), c.num("growth"), c.num("max_step"), c.num("blend")};
}

std::uint64_t member_seed(std::uint64_t seed, std::uint64_t m) { return rng::hash_combine(seed, 0x5eedULL, m); }

boundary::RoughBoundary make_boundary(const ExperimentConfig& c, std::uint64_t seed, double period, double h) {
  const std::string& shape = c.text("shape");
  if (shape == "random") return boundary::sample_periodized_boundary(covariance(c), boundary_map(c), period, seed, h);
  if (shape == "flat") return boundary::flat_boundary(c.num("flat_height"), period, h);
  const auto kind = shape == "sinusoid" ? boundary::PeriodicShape::Sinusoid : boundary::PeriodicShape::BumpTrain;
  return boundary::sample_periodic_boundary(kind, period, c.num("depth"), seed, static_cast<int>(c.integer("shape_samples")));
}

boundary::RoughBoundary make_boundary(const ExperimentConfig& c, std::uint64_t seed) {
  return make_boundary(c, seed, c.num("period"), c.num("h"));
}

std::vector<boundary::RoughBoundary> ensemble(const Context& x) {
  const long m = x.cfg.integer("samples");
  std::vector<boundary::RoughBoundary> ens(static_cast<std::size_t>(m));
  parallel_for(static_cast<int>(m), x.workers,
               [&](int k) { ens[static_cast<std::size_t>(k)] = make_boundary(x.cfg, member_seed(x.seed, static_cast<std::uint64_t>(k))); });
  return ens;
}

std::vector<boundary::CoupledPair> pairs(const Context& x) {
  const auto ns = x.cfg.list("n_list");
  const long per = x.cfg.integer("pairs");
  const auto spec = covariance(x.cfg);
  const auto map = boundary_map(x.cfg);
  const double window = x.cfg.num("window");
  std::vector<boundary::CoupledPair> out(ns.size() * static_cast<std::size_t>(per));
  parallel_for(static_cast<int>(out.size()), x.workers, [&](int k) {
    const std::size_t ni = static_cast<std::size_t>(k) / static_cast<std::size_t>(per);
    const std::uint64_t s = rng::hash_combine(x.seed, ni, static_cast<std::uint64_t>(k));
    out[static_cast<std::size_t>(k)] = boundary::couple_pair(spec, map, ns[ni], window, s, true);
  });
  return out;
}

void plot(Context& x, const std::string& name, const std::string& title, const std::string& xl, const std::string& yl,
          const std::vector<Series>& series, bool semilog = false) {
  x.out.write(name, render_svg(title, xl, yl, series, semilog, x.cfg.canonical()));
}

void run_gen_boundary(Context& x) {
  const auto b = x.stages.time("sample", [&] { return make_boundary(x.cfg, x.seed); });
  std::ostringstream os;
  boundary::write_csv(b, os);
  x.out.write("boundary.csv", "# seed=" + std::to_string(x.seed) + "\n" + os.str());
  x.summary["min"] = b.min();
  x.summary["max"] = b.max();
  x.summary["lipschitz_K"] = b.lipschitz_K;
  x.summary["c2a_norm_bound"] = b.c2a_norm_bound;
}

void run_cell(Context& x) {
  const auto b = make_boundary(x.cfg, x.seed);
  const auto sol = x.stages.time("solve", [&] {
    return stokes::solve_cell({b, x.cfg.num("top_height"), grid_params(x.cfg)}, x.cfg.num("tol"));
  });
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < sol.trace_x.size(); ++i)
    rows.push_back({fmt(sol.trace_x[i]), fmt(sol.trace0[i][0]), fmt(sol.trace0[i][1])});
  x.out.csv("trace.csv", {"x1", "v1", "v2"}, rows);

  rows.clear();
  const auto hs = x.cfg.list("heights");
  const auto spec = stokes::reconstruct_profile(sol.trace_x, sol.trace0, hs);
  for (std::size_t k = 0; k < hs.size(); ++k) {
    const auto g = sol.field.velocity_at(0, hs[k]);
    const auto q = stokes::reconstruct_above_quadrature(sol, hs[k]);
    rows.push_back({fmt(hs[k]), fmt(g[0]), fmt(g[1]), fmt(spec[k][0]), fmt(spec[k][1]), fmt(q[0]), fmt(q[1])});
  }
  x.out.csv("profile.csv", {"y2", "grid_v1", "grid_v2", "spectral_v1", "spectral_v2", "quadrature_v1", "quadrature_v2"},
            rows);
  x.summary["alpha"] = sol.alpha;
  x.summary["trace_mean"] = sol.trace_mean;
  x.summary["residual"] = sol.residual;
  x.summary["iterations"] = sol.iterations;
  x.summary["wall_residual"] = stokes::wall_residual(sol);
  x.summary["dirichlet_energy"] = sol.dirichlet_energy;
  x.summary["boundary_work"] = sol.boundary_work;
  x.out.json_file("cell.json", x.summary);
}

void run_alpha(Context& x) {
  const auto ens = x.stages.time("sample", [&] { return ensemble(x); });
  std::vector<stokes::CellSolution> sols(ens.size());
  x.stages.time("solve", [&] {
    parallel_for(static_cast<int>(ens.size()), x.workers, [&](int k) {
      const auto& b = ens[static_cast<std::size_t>(k)];
      sols[static_cast<std::size_t>(k)] = stokes::solve_cell({b, x.cfg.num("top_height"), grid_params(x.cfg)}, x.cfg.num("tol"));
    });
  });
  std::vector<std::vector<std::string>> rows;
  std::vector<double> alphas;
  for (std::size_t k = 0; k < sols.size(); ++k) {
    rows.push_back({std::to_string(k), fmt(sols[k].alpha), fmt(sols[k].trace_mean), std::to_string(sols[k].iterations),
                    fmt(sols[k].residual)});
    alphas.push_back(sols[k].alpha);
  }
  x.out.csv("alpha.csv", {"sample", "alpha", "trace_mean", "iterations", "residual"}, rows);
  const auto a = stats::estimate_alpha(alphas);
  x.summary["alpha"] = a.mean;
  x.summary["alpha_se"] = a.std_error;
  x.summary["samples"] = static_cast<double>(sols.size());
  x.out.json_file("alpha.json", x.summary);
}

void run_decay(Context& x) {
  const auto b = make_boundary(x.cfg, x.seed);
  const auto sol = x.stages.time("solve", [&] {
    return stokes::solve_cell({b, x.cfg.num("top_height"), grid_params(x.cfg)}, x.cfg.num("tol"));
  });
  const auto hs = x.cfg.list("heights");
  const auto spec = stokes::reconstruct_profile(sol.trace_x, sol.trace0, hs);
  std::vector<double> dg, ds;
  std::vector<std::vector<std::string>> rows;
  for (std::size_t k = 0; k < hs.size(); ++k) {
    const auto g = sol.field.velocity_at(0, hs[k]);
    dg.push_back(std::hypot(g[0] - sol.alpha, g[1]));
    ds.push_back(std::hypot(spec[k][0] - sol.trace_mean, spec[k][1]));
    rows.push_back({fmt(hs[k]), fmt(dg.back()), fmt(ds.back())});
  }
  x.out.csv("decay.csv", {"y2", "grid_deviation", "spectral_deviation"}, rows);
  const auto fg = stats::fit_semilog(hs, dg, x.seed);
  const auto fs_ = stats::fit_semilog(hs, ds, x.seed);
  const double target = -2 * kPi / b.period.value_or(x.cfg.num("period"));
  x.out.json_file("fits.json", {{"grid", fit_json(fg)}, {"spectral", fit_json(fs_)}, {"target_slope", target},
                                {"alpha", sol.alpha}});
  plot(x, "decay.svg", "boundary layer decay", "y2", "|v(0,y2) - alpha|", {{"grid", fg}, {"spectral", fs_}}, true);
  x.summary["slope"] = fg.exponent;
  x.summary["r_squared"] = fg.r_squared;
  x.summary["spectral_slope"] = fs_.exponent;
  x.summary["spectral_r_squared"] = fs_.r_squared;
  x.summary["target_slope"] = target;
  x.summary["alpha"] = sol.alpha;
}

void run_clt(Context& x) {
  const auto ens = x.stages.time("sample", [&] { return ensemble(x); });
  const auto hs = x.cfg.list("heights");
  const std::size_t m = ens.size();
  struct PerSample {
    double alpha = 0;
    std::vector<std::array<double, 2>> spectral, grid;
    stokes::TraceMoments moments;
  };
  std::vector<PerSample> res(m);
  x.stages.time("solve", [&] {
    parallel_for(static_cast<int>(m), x.workers, [&](int k) {
      const auto sol = stokes::solve_cell({ens[static_cast<std::size_t>(k)], x.cfg.num("top_height"), grid_params(x.cfg)},
                                          x.cfg.num("tol"));
      PerSample& r = res[static_cast<std::size_t>(k)];
      r.alpha = sol.alpha;
      r.spectral = stokes::reconstruct_profile(sol.trace_x, sol.trace0, hs);
      for (double y : hs) r.grid.push_back(sol.field.velocity_at(0, y));
      r.moments = stokes::trace_moments(sol);
    });
  });
  std::vector<double> alphas;
  for (const auto& r : res) alphas.push_back(r.alpha);
  const auto a = stats::estimate_alpha(alphas);

  std::vector<std::vector<std::array<double, 2>>> dev_s(hs.size()), dev_g(hs.size());
  std::vector<std::vector<std::string>> rows;
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t h = 0; h < hs.size(); ++h) {
      const auto& s = res[k].spectral[h];
      const auto& g = res[k].grid[h];
      dev_s[h].push_back({s[0] - a.mean, s[1]});
      dev_g[h].push_back({g[0] - a.mean, g[1]});
      rows.push_back({std::to_string(k), fmt(hs[h]), fmt(s[0]), fmt(s[1]), fmt(g[0]), fmt(g[1])});
    }
  x.out.csv("clt_samples.csv", {"sample", "y2", "spectral_v1", "spectral_v2", "grid_v1", "grid_v2"}, rows);
  const auto fit_from = static_cast<std::size_t>(x.cfg.integer("fit_from"));
  const auto rs = stats::variance_decay_fit(hs, dev_s, {0, 0}, fit_from);
  const auto rg = stats::variance_decay_fit(hs, dev_g, {0, 0}, fit_from);
  rows.clear();
  for (std::size_t h = 0; h < hs.size(); ++h)
    rows.push_back({fmt(hs[h]), fmt(rs.variances[h]), fmt(rg.variances[h]), fmt(rs.scaled[h]), fmt(rs.ks_stats[h]),
                    fmt(rs.ks_p[h])});
  x.out.csv("clt.csv", {"y2", "variance_spectral", "variance_grid", "scaled_variance", "ks_statistic", "ks_p"}, rows);

  // V with the ensemble alpha: V_a(t) = V_sample(t) - (a - alpha_sample) t
  const auto& tg = res[0].moments.t;
  std::vector<std::vector<std::array<double, 2>>> vs(m);
  for (std::size_t k = 0; k < m; ++k) {
    if (res[k].moments.t.size() != tg.size()) throw ConfigError("samples have different trace grids");
    for (std::size_t i = 0; i < tg.size(); ++i) {
      auto v = res[k].moments.V[i];
      v[0] -= (a.mean - res[k].alpha) * tg[i];
      vs[k].push_back(v);
    }
  }
  const auto vg = stats::v_growth_check(tg, vs, x.cfg.num("t_min"), x.cfg.num("t_max"));
  rows.clear();
  for (const auto& [lt, lv] : vg.points) rows.push_back({fmt(std::exp(lt)), fmt(std::exp(lv))});
  x.out.csv("v_growth.csv", {"t", "mean_sq_V"}, rows);

  x.out.json_file("fits.json", {{"variance_spectral", fit_json(rs.fit)},
                                {"variance_grid", fit_json(rg.fit)},
                                {"v_growth", fit_json(vg)},
                                {"alpha", a.mean},
                                {"alpha_se", a.std_error},
                                {"sigma_estimate", rs.sigma_beta_estimate}});
  plot(x, "clt.svg", "variance decay", "y2", "E|v(.,0,y2) - (alpha,0)|^2", {{"spectral", rs.fit}, {"grid", rg.fit}});
  plot(x, "v_growth.svg", "V growth", "t", "E|V(t)|^2", {{"V", vg}});
  x.summary["exponent"] = rs.fit.exponent;
  x.summary["r_squared"] = rs.fit.r_squared;
  x.summary["ci95"] = rs.fit.ci95;
  x.summary["grid_exponent"] = rg.fit.exponent;
  x.summary["v_growth_exponent"] = vg.exponent;
  x.summary["v_growth_r_squared"] = vg.r_squared;
  x.summary["alpha"] = a.mean;
  x.summary["alpha_se"] = a.std_error;
  x.summary["ks_p_top"] = rs.ks_p.back();
}

void run_couple(Context& x) {
  const auto ps = x.stages.time("sample", [&] { return pairs(x); });
  const auto scan = x.stages.time("solve", [&] {
    return stokes::coupled_decay_scan(ps, x.cfg.num("top_height"), grid_params(x.cfg), x.cfg.num("tol"), x.workers);
  });
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : scan.rows) rows.push_back({fmt(r.n), fmt(r.mean), fmt(r.std_error), std::to_string(r.pairs)});
  x.out.csv("couple.csv", {"n", "mean_abs_dv", "std_error", "pairs"}, rows);
  x.out.json_file("fit.json", fit_json(scan.fit));
  plot(x, "couple.svg", "Stokes coupled decay", "n", "E|v1(0,0) - v2(0,0)|", {{"pairs", scan.fit}});
  x.summary["exponent"] = scan.fit.exponent;
  x.summary["r_squared"] = scan.fit.r_squared;
  x.summary["ci95"] = scan.fit.ci95;
}

void run_green(Context& x) {
  const double period = x.cfg.num("period"), h = x.cfg.num("h"), delta = x.cfg.num("delta");
  const long m = x.cfg.integer("samples");
  std::vector<stokes::GreenDomain> doms;
  for (long k = 0; k < m; ++k)
    doms.push_back({make_boundary(x.cfg, member_seed(x.seed, static_cast<std::uint64_t>(k)), period, h),
                    x.cfg.num("top_height"), grid_params(x.cfg)});
  const auto seps = x.cfg.list("separations");
  const auto scan = x.stages.time("far_field", [&] {
    return stokes::green_decay_scan(doms, x.cfg.num("tau"), seps, delta, x.workers);
  });
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : scan.rows) rows.push_back({std::to_string(r.sample), fmt(r.separation), fmt(r.g_norm), fmt(r.ratio)});
  x.out.csv("green.csv", {"sample", "separation", "g_norm", "ratio"}, rows);

  // near field on a finer grid: |G(z, z + d e1)| against |ln d|
  const double nh = x.cfg.num("near_h");
  stokes::GridParams ng = grid_params(x.cfg);
  ng.h = nh;
  ng.max_step = std::min(ng.max_step, 1.0);
  const auto nb = make_boundary(x.cfg, member_seed(x.seed, 0), x.cfg.num("near_period"), nh);
  const Point2 z{0, nb.value_at(0) + delta};
  const auto near = x.stages.time("near_field", [&] {
    return stokes::estimate_green({nb, x.cfg.num("near_top"), ng}, z, x.cfg.num("tol"));
  });
  std::vector<std::pair<double, double>> np;
  rows.clear();
  for (double d : x.cfg.list("near_separations")) {
    const double g = near.norm_at({z.x1 + d, z.x2});
    np.emplace_back(std::abs(std::log(d)), g);
    rows.push_back({fmt(d), fmt(g)});
  }
  x.out.csv("green_near.csv", {"separation", "g_norm"}, rows);
  const auto nfit = stats::fit_line(np, x.seed);

  // G_{omega^eps}(eps z, eps y) against G_omega(z, y) on one rough sample
  ExperimentConfig rough = x.cfg;
  rough.values["shape"] = "random";
  const double eps = x.cfg.num("scaling_eps");
  const auto rb = make_boundary(rough, member_seed(x.seed, 1), x.cfg.num("scaling_period"), h);
  const auto sb = boundary::rescale(rb, eps);
  stokes::GridParams sg = grid_params(x.cfg);
  sg.max_step = std::min(sg.max_step, 2.0);
  stokes::GridParams sge{sg.h * eps, sg.uniform_height * eps, sg.growth, sg.max_step * eps, sg.blend * eps};
  const Point2 zs{0, rb.value_at(0) + delta};
  const double tol = x.cfg.num("tol");
  const auto [g1, g2] = x.stages.time("scaling", [&] {
    return std::pair{stokes::estimate_green({rb, x.cfg.num("scaling_top"), sg}, zs, tol),
                     stokes::estimate_green({sb, x.cfg.num("scaling_top") * eps, sge}, {eps * zs.x1, eps * zs.x2}, tol)};
  });
  double worst = 0;
  rows.clear();
  for (double s : x.cfg.list("scaling_separations")) {
    const Point2 y{s, rb.value_at(s) + delta};
    const auto a = g1.at(y);
    const auto b = g2.at({eps * y.x1, eps * y.x2});
    double diff = 0, norm = 0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        diff += std::pow(a[i][j] - b[i][j], 2);
        norm += a[i][j] * a[i][j];
      }
    const double rel = std::sqrt(diff / norm);
    worst = std::max(worst, rel);
    rows.push_back({fmt(s), fmt(std::sqrt(norm)), fmt(rel)});
  }
  x.out.csv("green_scaling.csv", {"separation", "g_norm", "relative_difference"}, rows);

  json ratios = json::array();
  for (double r : scan.max_ratio_by_separation) ratios.push_back(r);
  x.out.json_file("fits.json", {{"far_field", fit_json(scan.fit)},
                                {"near_field_log", fit_json(nfit)},
                                {"max_ratio", scan.max_ratio},
                                {"max_ratio_by_separation", ratios},
                                {"scaling_max_relative_difference", worst}});
  plot(x, "green.svg", "Green decay", "|z - y|", "|G(z,y)|", {{"far field", scan.fit}});
  x.summary["exponent"] = scan.fit.exponent;
  x.summary["r_squared"] = scan.fit.r_squared;
  x.summary["max_ratio"] = scan.max_ratio;
  x.summary["near_slope"] = nfit.exponent;
  x.summary["near_r_squared"] = nfit.r_squared;
  x.summary["scaling_max_relative_difference"] = worst;
}

void run_wall_law(Context& x) {
  const auto b = make_boundary(x.cfg, x.seed);
  const auto gp = grid_params(x.cfg);
  const double tol = x.cfg.num("tol"), phi = x.cfg.num("phi");
  const auto cell = x.stages.time("cell", [&] { return stokes::solve_cell({b, x.cfg.num("top_height"), gp}, tol); });
  stokes::ChannelOptions co;
  co.cell_grid = gp;
  co.max_step = x.cfg.num("channel_max_step");
  co.tol = tol;
  const auto mode = x.cfg.text("mode") == "picard" ? stokes::ChannelMode::NavierStokesPicard : stokes::ChannelMode::Stokes;
  const auto eps_list = x.cfg.list("eps_list");
  std::map<std::string, std::vector<std::pair<double, double>>> errors;
  std::vector<std::vector<std::string>> rows;
  x.stages.time("channels", [&] {
    for (double eps : eps_list) {
      const auto ch = stokes::solve_channel(b, eps, phi, mode, co);
      const auto nav = stokes::solve_channel_navier(phi, eps * cell.alpha);
      const double ed = stokes::l2_error(ch.field, [&](double, double y) { return std::array<double, 2>{stokes::poiseuille(phi, y), 0}; });
      const double en = stokes::l2_error(ch.field, [&](double, double y) { return std::array<double, 2>{nav(y), 0}; });
      const auto cor = stokes::build_corrector(cell, eps);
      const auto app = stokes::build_approximation([&](double y) { return stokes::poiseuille(phi, y); }, cell, cor, eps, phi,
                                                   ch.field.grid);
      const double ea = stokes::l2_difference(ch.field, app);
      errors["dirichlet"].emplace_back(eps, ed);
      errors["navier"].emplace_back(eps, en);
      errors["approximation"].emplace_back(eps, ea);
      for (const auto& [law, e] : {std::pair{"dirichlet", ed}, std::pair{"navier", en}, std::pair{"approximation", ea}})
        rows.push_back({fmt(eps), law, fmt(e), fmt(ch.max_flux_deviation), std::to_string(ch.picard_iterations)});
    }
  });
  x.out.csv("wall_law.csv", {"eps", "law", "l2_error", "flux_deviation", "picard_iterations"}, rows);
  const auto fits = stats::error_scaling_fit(errors);
  json j;
  for (const auto& [law, f] : fits) j[law] = fit_json(f);
  j["alpha"] = cell.alpha;
  x.out.json_file("fits.json", j);
  plot(x, "wall_law.svg", "wall law errors", "eps", "L2 error",
       {{"dirichlet", fits.at("dirichlet")}, {"navier", fits.at("navier")}, {"approximation", fits.at("approximation")}});
  x.summary["dirichlet_exponent"] = fits.at("dirichlet").exponent;
  x.summary["navier_exponent"] = fits.at("navier").exponent;
  x.summary["approximation_exponent"] = fits.at("approximation").exponent;
  x.summary["alpha"] = cell.alpha;
}

void write_scalar_clt(Context& x, const scalar::ScalarCLT& c, const std::string& prefix) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t h = 0; h < c.heights.size(); ++h)
    rows.push_back({fmt(c.heights[h]), fmt(c.variances[h]), fmt(c.scaled[h]), fmt(c.ks_stats[h]), fmt(c.ks_p[h])});
  x.out.csv(prefix + ".csv", {"y2", "variance", "scaled_variance", "ks_statistic", "ks_p"}, rows);
  rows.clear();
  for (std::size_t k = 0; k < c.values.front().size(); ++k)
    for (std::size_t h = 0; h < c.heights.size(); ++h) rows.push_back({std::to_string(k), fmt(c.heights[h]), fmt(c.values[h][k])});
  x.out.csv(prefix + "_samples.csv", {"sample", "y2", "u"}, rows);
  plot(x, prefix + ".svg", "scalar variance decay", "y2", "Var u(.,0,y2)", {{"variance", c.fit}});
}

scalar::Geometry geometry(const ExperimentConfig& c) {
  return c.text("geometry") == "rough" ? scalar::Geometry::Rough : scalar::Geometry::Flat;
}

void run_scalar_clt(Context& x) {
  const auto ens = x.stages.time("sample", [&] { return ensemble(x); });
  const auto c = x.stages.time("solve", [&] {
    return scalar::clt_scan(ens, x.cfg.list("heights"), x.cfg.num("top_height"), grid_params(x.cfg), geometry(x.cfg),
                            static_cast<std::size_t>(x.cfg.integer("fit_from")), x.workers);
  });
  write_scalar_clt(x, c, "scalar_clt");
  x.out.json_file("fit.json", {{"variance", fit_json(c.fit)}, {"alpha", c.alpha}, {"alpha_se", c.alpha_se}});
  x.summary["exponent"] = c.fit.exponent;
  x.summary["r_squared"] = c.fit.r_squared;
  x.summary["alpha"] = c.alpha;
  x.summary["ks_p_top"] = c.ks_p.back();
}

void run_scalar_couple(Context& x) {
  const auto ps = x.stages.time("sample", [&] { return pairs(x); });
  scalar::WalkOptions opt;
  opt.delta_exit = x.cfg.num("delta_exit");
  opt.kill_height = x.cfg.num("kill_height");
  const auto scan = x.stages.time("walk", [&] {
    return scalar::coupled_decay_scan(ps, x.cfg.integer("paths"), x.seed, opt, x.workers);
  });
  std::vector<std::vector<std::string>> rows;
  int violations = 0;
  for (const auto& r : scan.rows) {
    const double sigma = r.std_error;  // standard error of the per-n mean
    const bool ok = r.mean <= r.bound + 3 * sigma;
    violations += ok ? 0 : 1;
    rows.push_back({fmt(r.n), fmt(r.mean), fmt(r.std_error), std::to_string(r.pairs), fmt(r.sup_norm), fmt(r.bound),
                    ok ? "1" : "0"});
  }
  x.out.csv("scalar_couple.csv", {"n", "mean_abs_dv", "std_error", "pairs", "sup_norm", "bound", "within_bound"}, rows);
  x.out.json_file("fit.json", fit_json(scan.fit));
  plot(x, "scalar_couple.svg", "scalar coupled decay", "n", "E|v1(0,0) - v2(0,0)|", {{"pairs", scan.fit}});
  x.summary["exponent"] = scan.fit.exponent;
  x.summary["r_squared"] = scan.fit.r_squared;
  x.summary["ci95"] = scan.fit.ci95;
  x.summary["bound_violations"] = violations;
}

void run_optimality(Context& x) {
  const auto ens = x.stages.time("sample", [&] { return ensemble(x); });
  const auto rep = x.stages.time("solve", [&] {
    return scalar::optimality_experiment(covariance(x.cfg), ens, x.cfg.list("heights"), x.cfg.num("top_height"),
                                         grid_params(x.cfg), x.seed, x.workers);
  });
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : rep.rows)
    rows.push_back({fmt(r.y2), fmt(r.H), fmt(r.sqrt_y2_m0), fmt(r.lower_bound), fmt(r.scaled_variance), fmt(r.ci_low),
                    fmt(r.ci_high)});
  x.out.csv("optimality.csv", {"y2", "H", "sqrt_y2_m0", "lower_bound", "scaled_variance", "ci_low", "ci_high"}, rows);
  write_scalar_clt(x, rep.clt, "scalar_clt");
  x.out.json_file("optimality.json", {{"rho_integral", rep.rho_integral},
                                      {"H_ratio", rep.H_ratio},
                                      {"H_bounded", rep.H_bounded},
                                      {"floor", rep.floor},
                                      {"floor_ci", {rep.floor_ci_low, rep.floor_ci_high}},
                                      {"variance_fit", fit_json(rep.clt.fit)}});
  x.summary["H_ratio"] = rep.H_ratio;
  x.summary["floor"] = rep.floor;
  x.summary["floor_ci_low"] = rep.floor_ci_low;
  x.summary["floor_ci_high"] = rep.floor_ci_high;
  x.summary["exponent"] = rep.clt.fit.exponent;
}

void run_kernels_check(Context& x) {
  const auto items = x.stages.time("suite", [&] { return kernels::invariant_suite(x.seed); });
  json arr = json::array();
  std::vector<std::vector<std::string>> rows;
  int failed = 0, gating = 0;
  for (const auto& it : items) {
    arr.push_back({{"name", it.name}, {"value", it.value}, {"tolerance", it.tolerance}, {"pass", it.pass},
                   {"informational", it.informational}, {"note", it.note}});
    rows.push_back({it.name, fmt(it.value), fmt(it.tolerance), it.pass ? "1" : "0", it.informational ? "1" : "0"});
    if (!it.informational) {
      ++gating;
      failed += it.pass ? 0 : 1;
    }
  }
  x.out.csv("kernels_check.csv", {"check", "value", "tolerance", "pass", "informational"}, rows);
  x.out.json_file("kernels_check.json", {{"checks", arr}, {"all_pass", failed == 0}, {"seed", x.seed}});
  x.summary["checks"] = gating;
  x.summary["failed"] = failed;
}

}  // namespace

RunManifest run(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const auto diags = validate(cfg);
  if (!diags.empty()) {
    std::string msg = "invalid config for '" + cfg.experiment + "':";
    for (const auto& d : diags) msg += "\n  " + d.field + ": " + d.message;
    throw ConfigError(msg);
  }
  static const std::map<std::string, std::function<void(Context&)>> table{
      {"gen-boundary", run_gen_boundary}, {"cell", run_cell},
      {"alpha", run_alpha},               {"decay", run_decay},
      {"clt", run_clt},                   {"couple", run_couple},
      {"green", run_green},               {"wall-law", run_wall_law},
      {"scalar-clt", run_scalar_clt},     {"scalar-couple", run_scalar_couple},
      {"optimality", run_optimality},     {"kernels-check", run_kernels_check},
  };
  const auto t0 = std::chrono::steady_clock::now();
  Output out(out_dir, cfg.seed());
  Stages stages;
  RunManifest man;
  man.experiment = cfg.experiment;
  man.config_hash = hex(cfg.hash());
  man.seed = cfg.seed();
  man.workers = cfg.workers;
  Context ctx{cfg, out, stages, man.summary, man.seed, cfg.workers};
  try {
    table.at(cfg.experiment)(ctx);
  } catch (const SolverError& e) {
    throw SolverError(cfg.experiment + ": " + e.what(), e.last_residual());
  } catch (const ConfigError& e) {
    throw ConfigError(cfg.experiment + ": " + e.what());
  } catch (const DomainError& e) {
    throw DomainError(cfg.experiment + ": " + e.what());
  }
  man.stages = stages.list();
  man.files = out.files();
  man.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json files = json::array();
  for (const auto& f : man.files) files.push_back({{"name", f.name}, {"bytes", f.bytes}, {"fnv1a", f.fnv1a}});
  json st = json::array();
  for (const auto& s : man.stages) st.push_back({{"name", s.name}, {"seconds", s.seconds}});
  const json mj{{"tool", "roughwall"},    {"version", kToolVersion},  {"experiment", man.experiment},
                {"config", cfg.values},   {"config_hash", man.config_hash}, {"seed", man.seed},
                {"workers", man.workers}, {"wall_clock_s", man.wall_clock}, {"stages", st},
                {"files", files},         {"summary", man.summary}};
  std::ofstream(out_dir / "manifest.json") << mj.dump(2) << "\n";
  return man;
}

}  // namespace roughwall::cli
