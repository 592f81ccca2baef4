/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "hmcda/smoother.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "hmcda/error.hpp"
#include "hmcda/matrix_io.hpp"

namespace hmcda {

void SmootherConfig::validate() const {
  hmc.validate();
  if (b0_mode == B0Mode::Hybrid) {
    require(gamma >= 0.0 && gamma <= 1.0, ErrorCode::InvalidWeight,
            fmt::format("hybrid weight gamma must lie in [0,1] (got {})", gamma));
  }
  require(hmc.n_samples >= 2, ErrorCode::InsufficientMembers, "the smoother needs at least 2 samples per window");
  if (init == Init::FourDVarWarmStart) {
    require(warm_start_iterations >= 1, ErrorCode::InvalidArgument, "warm start needs at least one iteration");
  }
}

MassMatrix build_mass_matrix(const CovarianceModel& b0) { return MassMatrix(b0.inverse_diagonal()); }

std::shared_ptr<const CovarianceModel> assemble_b0(const AssimilationWindow& win, const SmootherConfig& cfg,
                                                   const std::optional<Ensemble>& forecast_ens) {
  if (cfg.b0_mode == SmootherConfig::B0Mode::Fixed) return win.b0;
  require(forecast_ens.has_value(), ErrorCode::InvalidArgument, "hybrid B0 needs a forecast ensemble");
  require(forecast_ens->size() >= 2, ErrorCode::InsufficientMembers, "hybrid B0 needs at least 2 forecast members");
  require(forecast_ens->nvar() == win.b0->dim(), ErrorCode::DimensionMismatch,
          "forecast ensemble and B0 dimensions differ");
  if (cfg.gamma == 1.0) return win.b0;
  CovarianceModel ens_cov = ensemble_covariance(*forecast_ens);
  if (cfg.taper) ens_cov = apply_taper(ens_cov, *cfg.taper);
  return std::make_shared<const CovarianceModel>(hybrid_update(*win.b0, ens_cov, cfg.gamma));
}

WindowResult analyze_window(const AssimilationWindow& win_in, const SmootherConfig& cfg,
                            const std::optional<Ensemble>& forecast_ens, std::uint64_t substream) {
  cfg.validate();
  win_in.validate();

  AssimilationWindow win = win_in;
  win.b0 = assemble_b0(win_in, cfg, forecast_ens);

  WindowResult result;
  result.background = win.background;
  result.b0_used = win.b0;
  const MassMatrix mass = build_mass_matrix(*win.b0);

  StateVector x_init = win.background;
  if (cfg.init == SmootherConfig::Init::FourDVarWarmStart) {
    LbfgsConfig lb;
    lb.max_iterations = cfg.warm_start_iterations;
    result.warm_start = minimize(win, win.background, lb);
    x_init = result.warm_start->analysis;
  }

  Potential potential;
  potential.value = [&win](const Vector& x) { return cost(win, StateVector(x)); };
  potential.gradient = [&win](const Vector& x) { return gradient(win, StateVector(x)).values(); };

  StreamRandomSource rng(cfg.hmc.seed, substream);
  result.chain = run_chain(x_init, mass, potential, cfg.hmc, rng);
  result.analysis_ensemble = Ensemble(result.chain.samples.members(), win.t0);
  result.chain.samples = result.analysis_ensemble;
  result.analysis_mean = ensemble_mean(result.analysis_ensemble);
  result.analysis_cov = ensemble_covariance(result.analysis_ensemble);
  return result;
}

Ensemble forecast_step(const Ensemble& ens, const Model& model, double t0, double tF) {
  require(!ens.empty(), ErrorCode::EmptyEnsemble, "cannot forecast an empty ensemble");
  std::vector<StateVector> out;
  out.reserve(static_cast<std::size_t>(ens.size()));
  Index dropped = 0;
  for (Index e = 0; e < ens.size(); ++e) {
    try {
      out.push_back(model.propagate(ens[e], t0, tF));
    } catch (const Error& err) {
      if (err.code() != ErrorCode::Diverged && err.code() != ErrorCode::NonFinite) throw;
      ++dropped;
      spdlog::warn("forecast member {} diverged and was dropped: {}", e, err.what());
    }
  }
  if (2 * dropped > ens.size()) {
    fail(ErrorCode::Diverged, fmt::format("{} of {} forecast members diverged", dropped, ens.size()));
  }
  return Ensemble(std::move(out), tF);
}

void check_contiguous(const std::vector<WindowSpec>& windows) {
  for (std::size_t i = 0; i + 1 < windows.size(); ++i) {
    const double a = windows[i].tF;
    const double b = windows[i + 1].t0;
    if (std::abs(a - b) > 1e-12 * std::max(1.0, std::abs(a))) {
      fail(ErrorCode::NonContiguousWindows, fmt::format("window {} ends at {} but window {} starts at {}", i, a,
                                                        i + 1, b));
    }
  }
}

std::vector<WindowResult> run_sequential(const SequentialProblem& problem, const SmootherConfig& cfg) {
  require(!problem.windows.empty(), ErrorCode::InvalidArgument, "no windows to assimilate");
  require(problem.model && problem.obs_operator && problem.b0, ErrorCode::InvalidArgument,
          "problem needs a model, an operator and B0");
  check_contiguous(problem.windows);
  cfg.validate();

  std::vector<WindowResult> results;
  results.reserve(problem.windows.size());
  std::optional<Ensemble> forecast;
  for (std::size_t i = 0; i < problem.windows.size(); ++i) {
    const WindowSpec& spec = problem.windows[i];
    AssimilationWindow win;
    win.t0 = spec.t0;
    win.tF = spec.tF;
    win.background = forecast ? ensemble_mean(*forecast) : problem.background;
    win.b0 = problem.b0;
    win.observations = spec.observations;
    win.model = problem.model;
    win.obs_operator = problem.obs_operator;
    win.ledger = problem.ledger;

    SmootherConfig window_cfg = cfg;
    if (!forecast) window_cfg.b0_mode = SmootherConfig::B0Mode::Fixed;
    spdlog::info("window {} [{}, {}]: sampling {} states", i, spec.t0, spec.tF, cfg.hmc.n_samples);
    WindowResult r = analyze_window(win, window_cfg, forecast, i);
    r.forecast_ensemble = forecast_step(r.analysis_ensemble, *problem.model, spec.t0, spec.tF);
    spdlog::info("window {}: acceptance rate {:.3f}", i, r.chain.acceptance_rate());
    forecast = r.forecast_ensemble;
    results.push_back(std::move(r));
  }
  return results;
}

void write_window_result(const std::filesystem::path& dir, const WindowResult& result) {
  std::filesystem::create_directories(dir);
  write_matrix_binary(dir / "samples.bin", result.analysis_ensemble.as_matrix());
  const Matrix mean = result.analysis_mean.values().transpose();
  write_matrix_csv(dir / "mean.csv", mean);
  write_matrix_binary(dir / "mean.bin", mean);
  write_matrix_csv(dir / "cov.csv", result.analysis_cov.to_dense());
  write_matrix_binary(dir / "cov.bin", result.analysis_cov.to_dense());
  if (!result.forecast_ensemble.empty()) write_matrix_binary(dir / "forecast.bin", result.forecast_ensemble.as_matrix());
  write_chain_csv(dir / "chain.csv", result.chain);
}

}  // namespace hmcda
