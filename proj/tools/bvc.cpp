// Command-line front end: bvc <experiment> --config FILE [options]

#include <chrono>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bvc/config.hpp"
#include "bvc/experiments.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitError = 1;
constexpr int kExitGateFailed = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variation and kernel-bound experiments for fourth-order Schroedinger semigroups"};
  app.set_version_flag("--version", "bvc 1.0");
  std::string experiment, config_path, ladder, out;
  std::string seed;
  double rho = 0.0;
  int workers = 0;
  bool svg = false;
  std::vector<std::string> sets;

  std::string names;
  for (const auto& n : bvc::registered_experiments()) names += (names.empty() ? "" : ", ") + n;
  app.add_option("experiment", experiment, "One of: " + names)->required();
  app.add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "64-bit seed");
  app.add_option("--out", out, "Output directory");
  app.add_option("--ladder", ladder, "geometric:t_max,ratio,count or a comma list");
  app.add_option("--rho", rho, "Variation exponent")->check(CLI::PositiveNumber);
  app.add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--svg", svg, "Also write a log-log SVG plot");
  app.add_option("--set", sets, "Extra key=value overrides")->take_all();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitError;
  }

  try {
    bvc::KeyValues keys;
    if (!config_path.empty()) keys = bvc::load_key_values(config_path);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw std::invalid_argument("--set expects key=value, got " + s);
      keys[s.substr(0, eq)] = s.substr(eq + 1);
    }
    if (!seed.empty()) keys["seed"] = seed;
    if (!out.empty()) keys["out"] = out;
    if (!ladder.empty()) keys["ladder"] = ladder;
    if (rho > 0.0) keys["rho"] = std::to_string(rho);
    if (workers > 0) keys["workers"] = std::to_string(workers);
    if (svg) keys["svg"] = "1";

    const bvc::ExperimentConfig cfg = bvc::make_config(experiment, keys);
    const auto start = std::chrono::steady_clock::now();
    const bvc::ExperimentReport report = bvc::run_experiment(cfg);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto files = bvc::write_report(report, cfg.output_dir, cfg.svg);

    for (const auto& [k, v] : report.summary) std::cout << k << ": " << v << '\n';
    std::cout << "wall_time_s: " << seconds << '\n';
    for (const auto& f : files) std::cout << "wrote " << f.string() << '\n';
    if (!report.passed()) {
      for (const auto& f : report.failures) std::cerr << "gate failed: " << f << '\n';
      return kExitGateFailed;
    }
    std::cout << "all gates passed\n";
    return kExitPass;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}
