/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hmcda/hmc.hpp"

namespace hmcda {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

/// Error size specification: an absolute standard deviation, or a fraction of
/// the mean magnitude of the reference initial state.
struct NoiseSpec {
  enum class Mode { Absolute, Relative };
  Mode mode = Mode::Absolute;
  double value = 1.0;

  double resolve(double reference_magnitude) const {
    return mode == Mode::Absolute ? value : value * reference_magnitude;
  }
  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

struct WindowConfig {
  double t0 = 0.0;
  double tF = 0.0;
  /// Explicit observation times; used when non-empty.
  std::vector<double> obs_times;
  /// Observation spacing from t0 (first at t0 + obs_every, last <= tF).
  double obs_every = 0.0;

  friend bool operator==(const WindowConfig&, const WindowConfig&) = default;
};

struct ExperimentConfig {
  enum class ModelKind { DoubleWell, Lorenz96 };
  enum class Scheme { HmcSmoother, FourDVar, Enks, All };
  enum class Operator { Identity, Quadratic };
  enum class B0Mode { Fixed, Hybrid };
  enum class Init { Background, FourDVarWarmStart };

  ModelKind model = ModelKind::DoubleWell;
  double model_step = 1e-3;
  int lorenz_n = 40;
  double lorenz_forcing = 8.0;

  Operator obs_operator = Operator::Identity;
  NoiseSpec obs_error;
  /// Multiplies the drawn observation noise; 0 gives noise-free data.
  double noise_scale = 1.0;

  /// Reference initial state; when empty, a spun-up Lorenz-96 state.
  std::vector<double> truth_x0;
  double spinup_time = 5.0;

  /// Background initial state; when empty, truth plus a draw from N(0, B0).
  std::vector<double> background_x0;
  NoiseSpec background_error;
  /// Gaspari-Cohn correlation length (grid points) of the modeled B0; 0 = diagonal.
  double background_correlation = 0.0;
  /// When > 0, B0 is bootstrapped: an EnKF cycled this many times from
  /// truth + N(0, B_modeled), localized with the correlation length, and its
  /// covariances averaged over the last `bootstrap_average` cycles.
  int bootstrap_cycles = 0;
  int bootstrap_members = 50;
  int bootstrap_average = 6;
  /// Cycle spacing, in window time units.
  double bootstrap_every = 1.0;

  /// Window times are multiplied by this factor (e.g. 0.05 per hour).
  double time_scale = 1.0;
  std::vector<WindowConfig> windows;

  Scheme scheme = Scheme::All;

  HmcConfig hmc;
  B0Mode b0_mode = B0Mode::Fixed;
  double gamma = 1.0;
  /// Localization length for the forecast covariance; 0 = none.
  double taper_length = 0.0;
  Init init = Init::Background;
  int warm_start_iterations = 5;

  int fourdvar_max_iterations = 100;
  int fourdvar_memory = 10;
  double fourdvar_grad_norm_tol = 1e-10;
  double fourdvar_rel_f_tol = 1e-6;

  int enks_members = 100;

  double histogram_lo = -2.0;
  double histogram_hi = 2.0;
  int histogram_bins = 40;
  double kernel_lo = -2.0;
  double kernel_hi = 2.0;
  double kernel_step = 1e-3;

  std::uint64_t seed = 0;
  std::string output_dir = "runs/experiment";

  bool runs(Scheme s) const { return scheme == Scheme::All || scheme == s; }
  /// Observation times of window `i` in model time units.
  std::vector<double> observation_times(std::size_t i) const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

struct ConfigParse {
  std::optional<ExperimentConfig> config;
  /// Every problem found; empty exactly when `config` is set.
  std::vector<std::string> errors;
};

/// Parses and validates YAML text, collecting all errors.
ConfigParse validate_config(const std::string& raw);
ConfigParse load_config(const std::filesystem::path& path);

/// YAML text that validate_config maps back to an equal config.
std::string emit_config(const ExperimentConfig& cfg);

std::string_view to_string(ExperimentConfig::Scheme s);
std::optional<ExperimentConfig::Scheme> parse_scheme(std::string_view text);

struct RunOutcome {
  int exit_code = kExitOk;
  std::filesystem::path run_dir;
  std::string message;
};

/**
 * Twin experiment: truth and observations, then every selected scheme over
 * all windows. Writes into cfg.output_dir:
 *   config.yaml, truth.csv, observations.csv, rmse.csv, window_rmse.csv,
 *   histogram.csv and kernel.csv (scalar models), cost_ledger.csv/.txt,
 *   <scheme>/window_<i>/..., manifest.yaml.
 * Runtime failures leave partial outputs and a manifest with status "failed".
 */
RunOutcome run_experiment(const ExperimentConfig& cfg);

}  // namespace hmcda
