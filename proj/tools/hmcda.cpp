/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "hmcda/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Twin experiments with the HMC sampling smoother, 4D-Var and the EnKS"};
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
  std::optional<std::string> scheme;
  std::string verbosity = "info";
  bool validate_only = false;

  app.add_option("-c,--config", config_path, "Experiment YAML file")->required();
  app.add_option("-s,--seed", seed, "Override the configured seed");
  app.add_option("-o,--output", output, "Override the output directory");
  app.add_option("--scheme", scheme, "Run only one scheme")->check(CLI::IsMember({"hmc", "fourdvar", "enks", "all"}));
  app.add_option("-v,--verbosity", verbosity, "Log level")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));
  app.add_flag("--validate", validate_only, "Check the config and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? hmcda::kExitOk : hmcda::kExitValidation;
  }
  spdlog::set_level(spdlog::level::from_str(verbosity));

  hmcda::ConfigParse parsed = hmcda::load_config(config_path);
  if (!parsed.config) {
    for (const std::string& err : parsed.errors) std::cerr << "config error: " << err << '\n';
    return hmcda::kExitValidation;
  }
  hmcda::ExperimentConfig cfg = *parsed.config;
  if (seed) {
    cfg.seed = *seed;
    cfg.hmc.seed = *seed;
  }
  if (output) cfg.output_dir = *output;
  if (scheme) cfg.scheme = *hmcda::parse_scheme(*scheme);
  if (validate_only) {
    std::cout << "config ok\n";
    return hmcda::kExitOk;
  }

  const hmcda::RunOutcome outcome = hmcda::run_experiment(cfg);
  if (outcome.exit_code != hmcda::kExitOk) {
    std::cerr << (outcome.exit_code == hmcda::kExitValidation ? "config error: " : "run failed: ") << outcome.message
              << '\n';
  } else {
    std::cout << "run written to " << outcome.run_dir.string() << '\n';
  }
  return outcome.exit_code;
}
