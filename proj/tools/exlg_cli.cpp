// exlg: command-line front end for the decentralized Langevin samplers.
//
//   exlg <validate|run|compare|sweep-h|theory|gen-data> --config FILE [options]
//
// Exit status: 0 ok, 2 config error, 3 assumption violation, 4 divergence, 1 other.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "exlg/error.hpp"
#include "exlg/harness.hpp"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::string seed;
  std::string replicas;
  std::string threads;
  std::vector<std::string> sets;
  bool allow = false;
};

exlg::ExperimentConfig resolve(const Options& o) {
  exlg::Config c = exlg::load_config_source(o.config);
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw exlg::ConfigError("--set expects key=value, got '" + kv + "'");
    c.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!o.out.empty()) c.set("run.out", o.out);
  if (!o.seed.empty()) c.set("run.seed", o.seed);
  if (!o.replicas.empty()) c.set("run.replicas", o.replicas);
  if (!o.threads.empty()) {
    c.set("run.threads", o.threads);
  } else if (const char* env = std::getenv("EXLG_THREADS"); env && *env) {
    c.set("run.threads", env);
  }
  if (o.allow) c.set("run.allow_assumption_violations", "true");
  return exlg::ExperimentConfig::from_config(c);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized Langevin sampling experiments"};
  app.set_version_flag("--version", std::string(exlg::kVersion));
  app.require_subcommand(1);

  Options opt;
  using Handler = int (*)(const exlg::ExperimentConfig&, std::ostream&);
  const std::vector<std::tuple<std::string, std::string, Handler>> commands = {
      {"validate", "check network and stepsize assumptions", exlg::cmd_validate},
      {"run", "run replicas of the configured sampler(s)", exlg::cmd_run},
      {"compare", "run several algorithms on shared data and rank plateaus", exlg::cmd_compare},
      {"sweep-h", "run over a grid of h values", exlg::cmd_sweep_h},
      {"theory", "evaluate theoretical constants and bound curves", exlg::cmd_theory},
      {"gen-data", "write the generated data set and exact target", exlg::cmd_gen_data},
  };
  Handler chosen = nullptr;
  for (const auto& [name, help, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config,-c", opt.config, "config file (.ini) or manifest.json")->required();
    sub->add_option("--out,-o", opt.out, "output directory (run.out)");
    sub->add_option("--seed", opt.seed, "master seed (run.seed)");
    sub->add_option("--replicas", opt.replicas, "number of replicas (run.replicas)");
    sub->add_option("--threads", opt.threads, "worker threads (run.threads; default EXLG_THREADS)");
    sub->add_option("--set", opt.sets, "override a config key, e.g. --set sampler.eta=0.01");
    sub->add_flag("--allow-violations", opt.allow, "run even when network assumptions fail");
    sub->callback([&chosen, f = fn] { chosen = f; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const exlg::ExperimentConfig cfg = resolve(opt);
    return chosen(cfg, std::cout);
  } catch (const exlg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const exlg::AssumptionError& e) {
    std::cerr << "assumption violated: " << e.what() << "\n";
    return 3;
  } catch (const exlg::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
