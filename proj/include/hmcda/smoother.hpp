/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "hmcda/cost.hpp"
#include "hmcda/covariance.hpp"
#include "hmcda/fourdvar.hpp"
#include "hmcda/hmc.hpp"

namespace hmcda {

struct SmootherConfig {
  enum class B0Mode { Fixed, Hybrid };
  enum class Init { Background, FourDVarWarmStart };

  HmcConfig hmc;
  B0Mode b0_mode = B0Mode::Fixed;
  /// Weight of the modeled covariance when Hybrid.
  double gamma = 1.0;
  /// Localization applied to the forecast covariance before blending.
  std::optional<TaperSpec> taper;
  Init init = Init::Background;
  /// L-BFGS iterations for the warm start.
  int warm_start_iterations = 5;

  void validate() const;
};

struct WindowResult {
  Ensemble analysis_ensemble;
  StateVector analysis_mean;
  CovarianceModel analysis_cov = CovarianceModel::identity(1);
  Ensemble forecast_ensemble;
  ChainRecord chain;
  StateVector background;
  std::shared_ptr<const CovarianceModel> b0_used;
  std::optional<FourDVarResult> warm_start;
};

/// Diagonal of B0⁻¹ (from the inverse Cholesky factor).
MassMatrix build_mass_matrix(const CovarianceModel& b0);

/// B0 for one window: `win.b0` when Fixed, the tapered hybrid blend with the
/// forecast ensemble covariance when Hybrid.
std::shared_ptr<const CovarianceModel> assemble_b0(const AssimilationWindow& win, const SmootherConfig& cfg,
                                                   const std::optional<Ensemble>& forecast_ens);

/// Samples the window posterior exp(−J). The forecast ensemble is only read
/// in Hybrid mode. `substream` separates the random draws of distinct windows.
/// The returned forecast ensemble is empty; see forecast_step.
WindowResult analyze_window(const AssimilationWindow& win, const SmootherConfig& cfg,
                            const std::optional<Ensemble>& forecast_ens = std::nullopt, std::uint64_t substream = 0);

/// Member-wise propagation from t0 to tF. Diverged members are dropped with a
/// warning; losing more than half of the ensemble throws Diverged.
Ensemble forecast_step(const Ensemble& ens, const Model& model, double t0, double tF);

struct WindowSpec {
  double t0 = 0.0;
  double tF = 0.0;
  ObservationSet observations;
};

struct SequentialProblem {
  std::shared_ptr<const Model> model;
  std::shared_ptr<const ObservationOperator> obs_operator;
  /// Background and modeled covariance of the first window.
  StateVector background;
  std::shared_ptr<const CovarianceModel> b0;
  std::vector<WindowSpec> windows;
  std::shared_ptr<CostLedger> ledger;
};

/// Throws NonContiguousWindows unless tF of each window equals t0 of the next.
void check_contiguous(const std::vector<WindowSpec>& windows);

/// Window i > 0 takes the mean of the previous forecast ensemble as background.
std::vector<WindowResult> run_sequential(const SequentialProblem& problem, const SmootherConfig& cfg);

/// samples.bin, mean.csv, mean.bin, cov.csv, cov.bin, chain.csv in `dir`.
void write_window_result(const std::filesystem::path& dir, const WindowResult& result);

}  // namespace hmcda
