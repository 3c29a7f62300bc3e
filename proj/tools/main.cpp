#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "roughwall/common.hpp"
#include "runner.hpp"

using namespace roughwall;

namespace {

struct Args {
  std::string config;
  std::string out = "out";
  std::vector<std::string> sets;
  long long seed = -1;
  int workers = 1;
  bool print_config = false;
};

void add_common(CLI::App* sub, Args& a) {
  sub->add_option("--config", a.config, "key = value config file");
  sub->add_option("--seed", a.seed, "overrides the config seed");
  sub->add_option("--out", a.out, "output directory");
  sub->add_option("--workers", a.workers, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
  sub->add_option("--set", a.sets, "key=value override, repeatable");
  sub->add_flag("--print-config", a.print_config, "print the resolved config and exit");
}

cli::ExperimentConfig resolve(const std::string& experiment, const Args& a) {
  cli::ExperimentConfig c = a.config.empty() ? cli::ExperimentConfig::defaults(experiment)
                                             : cli::ExperimentConfig::load(a.config, experiment);
  for (const auto& kv : a.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    c.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (a.seed >= 0) c.set("seed", std::to_string(a.seed));
  c.workers = a.workers;
  return c;
}

int report(const std::vector<cli::Diagnostic>& d) {
  for (const auto& x : d) std::cerr << x.field << ": " << x.message << "\n";
  return d.empty() ? 0 : 2;
}

int execute(const std::string& experiment, const Args& a) {
  const auto cfg = resolve(experiment, a);
  if (a.print_config) {
    std::cout << cfg.canonical();
    return 0;
  }
  const auto diags = cli::validate(cfg);
  if (!diags.empty()) return report(diags);
  const auto man = cli::run(cfg, a.out);
  std::printf("%s: %zu files in %s (%.1f s, config %s)\n", man.experiment.c_str(), man.files.size(), a.out.c_str(),
              man.wall_clock, man.config_hash.c_str());
  for (const auto& [k, v] : man.summary) std::printf("  %-34s %.6g\n", k.c_str(), v);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"roughwall experiment runner"};
  app.require_subcommand(1);
  Args args;
  std::string chosen;

  for (const auto& name : cli::experiment_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    add_common(sub, args);
    sub->callback([&chosen, name] { chosen = name; });
  }
  auto* run = app.add_subcommand("run", "run the experiment named in --config");
  add_common(run, args);
  run->callback([&chosen] { chosen = "run"; });
  auto* val = app.add_subcommand("validate", "check a config without running it");
  add_common(val, args);
  val->callback([&chosen] { chosen = "validate"; });

  CLI11_PARSE(app, argc, argv);
  try {
    if (chosen == "run" || chosen == "validate") {
      if (args.config.empty()) throw ConfigError("--config is required");
      const auto exp = cli::ExperimentConfig::load(args.config).experiment;
      if (chosen == "run") return execute(exp, args);
      const int rc = report(cli::validate(resolve(exp, args)));
      if (rc == 0) std::cout << "ok\n";
      return rc;
    }
    return execute(chosen, args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
