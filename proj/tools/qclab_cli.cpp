// qclab run <config> | qclab report <bundle>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "qclab/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Quasiconformal lab: Beltrami maps, elliptic and harmonic measure, capacity and gauge audits"};
  app.require_subcommand(1);
  // --h is the grid spacing, so help is long-form only
  app.set_help_flag("--help", "Print this help message and exit");

  std::string config_path, bundle_path;
  std::optional<long long> seed, samples;
  std::optional<double> h;
  std::optional<std::string> out;

  auto* run = app.add_subcommand("run", "Run an experiment config into an artifact bundle");
  run->set_help_flag("--help", "Print this help message and exit");
  run->add_option("config", config_path, "Config file (key = value)")->required();
  run->add_option("--seed", seed, "Override the seed");
  run->add_option("--h", h, "Override the grid spacing");
  run->add_option("--samples", samples, "Override the Monte Carlo sample count");
  run->add_option("--out", out, "Override the output directory");

  auto* report = app.add_subcommand("report", "Summarize a bundle; exit 0 all PASS, 1 any FAIL, 2 incomplete");
  report->add_option("bundle", bundle_path, "Bundle directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      qclab::Config cfg = qclab::load_config(config_path);
      if (seed) cfg.values["seed"] = std::to_string(*seed);
      if (samples) cfg.values["samples"] = std::to_string(*samples);
      if (h) {
        std::ostringstream os;
        os.precision(17);
        os << *h;
        cfg.values["h"] = os.str();
      }
      if (out) cfg.values["out"] = *out;
      const qclab::RunResult r = qclab::run_experiment(cfg);
      std::cout << "bundle " << r.out_dir << '\n';
      for (const auto& c : r.checks) std::cout << "  " << c.name << ' ' << (c.pass ? "PASS" : "FAIL") << '\n';
      return r.all_pass() ? 0 : 1;
    }
    const qclab::BundleReport rep = qclab::report_bundle(bundle_path);
    std::cout << rep.text;
    return rep.exit_code;
  } catch (const qclab::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == qclab::ErrorCode::IncompleteBundle ? 2 : (e.code() == qclab::ErrorCode::ConfigError ? 3 : 4);
  }
}
