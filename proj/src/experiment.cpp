/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "hmcda/experiment.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include "hmcda/diagnostics.hpp"
#include "hmcda/enks.hpp"
#include "hmcda/error.hpp"
#include "hmcda/fourdvar.hpp"
#include "hmcda/matrix_io.hpp"
#include "hmcda/smoother.hpp"

namespace hmcda {

namespace {

namespace fs = std::filesystem;
using Scheme = ExperimentConfig::Scheme;

struct Setup {
  std::shared_ptr<const Model> model;
  std::shared_ptr<const ObservationOperator> op;
  StateVector truth0;
  StateVector background;
  std::shared_ptr<const CovarianceModel> b0;
  std::vector<WindowSpec> windows;
};

// Estimates of the t0 state of each window, as produced by one scheme.
struct SchemeRun {
  Scheme scheme = Scheme::All;
  std::vector<StateVector> backgrounds;
  std::vector<StateVector> analyses;
  std::vector<Ensemble> ensembles;
  SchemeCost cost;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorCode::Io, "cannot open " + path.string());
  out << text;
  require(out.good(), ErrorCode::Io, "failed writing " + path.string());
}

// EnKF cycled along the reference trajectory from truth + N(0, diag σ_b²);
// the localized analysis covariances of the last cycles are averaged.
CovarianceModel bootstrap_b0(const ExperimentConfig& cfg, const Setup& s, double sigma_b, const CovarianceModel& r) {
  const Index n = s.model->nvar();
  const double dt = cfg.bootstrap_every * cfg.time_scale;
  const CovarianceModel initial = CovarianceModel::diagonal(Vector::Constant(n, sigma_b * sigma_b));
  RandomStream init(cfg.seed, Stream::EnsembleInit, 1);
  RandomStream noise(cfg.seed, Stream::ObservationNoise, 1);
  RandomStream perturb(cfg.seed, Stream::EnkfPerturbation, 1);
  std::vector<StateVector> members;
  for (int e = 0; e < cfg.bootstrap_members; ++e) {
    members.emplace_back(s.truth0.values() + initial.sample_transform(init.normal_vector(n)));
  }
  Ensemble ens(std::move(members), 0.0);
  TaperSpec taper;
  taper.decorrelation_length = cfg.background_correlation > 0.0 ? cfg.background_correlation : 1.0;
  const Matrix rho = taper_matrix(n, taper);
  Matrix average = Matrix::Zero(n, n);
  Vector truth = s.truth0.values();
  const Index nsteps = s.model->steps_between(0.0, dt);
  for (int c = 1; c <= cfg.bootstrap_cycles; ++c) {
    s.model->advance(truth, nsteps);
    ens = forecast_step(ens, *s.model, ens.time(), ens.time() + dt);
    const Vector y = s.op->apply(truth) + r.sample_transform(noise.normal_vector(s.op->output_dim()));
    ens = enkf_update(ens, y, r, *s.op, perturb).analysis;
    if (c > cfg.bootstrap_cycles - cfg.bootstrap_average) {
      average += ensemble_covariance(ens).matrix().cwiseProduct(rho);
    }
  }
  return CovarianceModel::dense(average / static_cast<double>(cfg.bootstrap_average));
}

Setup build_setup(const ExperimentConfig& cfg, const fs::path& dir) {
  Setup s;
  const bool lorenz = cfg.model == ExperimentConfig::ModelKind::Lorenz96;
  if (lorenz) {
    s.model = std::make_shared<Lorenz96Model>(cfg.lorenz_n, cfg.lorenz_forcing, cfg.model_step);
  } else {
    s.model = std::make_shared<DoubleWellModel>(cfg.model_step);
  }
  const Index n = s.model->nvar();
  if (cfg.obs_operator == ExperimentConfig::Operator::Quadratic) {
    s.op = std::make_shared<QuadraticObservation>(n);
  } else {
    s.op = std::make_shared<LinearObservation>(n);
  }

  if (!cfg.truth_x0.empty()) {
    s.truth0 = StateVector(Eigen::Map<const Vector>(cfg.truth_x0.data(), n));
  } else {
    Vector x = Vector::Constant(n, cfg.lorenz_forcing);
    x(0) += 0.01;
    s.model->advance(x, s.model->steps_between(0.0, cfg.spinup_time));
    s.truth0 = StateVector(std::move(x));
  }
  const double magnitude = s.truth0.values().cwiseAbs().mean();

  const double sigma_b = cfg.background_error.resolve(magnitude);
  const double sigma_o = cfg.obs_error.resolve(magnitude);
  auto r = std::make_shared<const CovarianceModel>(
      CovarianceModel::diagonal(Vector::Constant(s.op->output_dim(), sigma_o * sigma_o)));
  if (cfg.bootstrap_cycles > 0) {
    s.b0 = std::make_shared<const CovarianceModel>(bootstrap_b0(cfg, s, sigma_b, *r));
  } else if (cfg.background_correlation > 0.0) {
    TaperSpec taper;
    taper.decorrelation_length = cfg.background_correlation;
    s.b0 = std::make_shared<const CovarianceModel>(
        CovarianceModel::dense(sigma_b * sigma_b * taper_matrix(n, taper)));
  } else {
    s.b0 = std::make_shared<const CovarianceModel>(CovarianceModel::diagonal(Vector::Constant(n, sigma_b * sigma_b)));
  }
  if (!cfg.background_x0.empty()) {
    s.background = StateVector(Eigen::Map<const Vector>(cfg.background_x0.data(), n));
  } else {
    RandomStream rng(cfg.seed, Stream::BackgroundPerturbation);
    s.background = StateVector(s.truth0.values() + s.b0->sample_transform(rng.normal_vector(n)));
  }

  std::vector<double> all_times;
  std::vector<std::size_t> owner;
  for (std::size_t i = 0; i < cfg.windows.size(); ++i) {
    for (double t : cfg.observation_times(i)) {
      all_times.push_back(t);
      owner.push_back(i);
    }
  }
  const double t_start = cfg.windows.front().t0 * cfg.time_scale;
  RandomStream noise(cfg.seed, Stream::ObservationNoise);
  const TwinData twin =
      generate_truth_and_observations(*s.model, *s.op, s.truth0, t_start, all_times, r, noise, cfg.noise_scale);

  for (std::size_t i = 0; i < cfg.windows.size(); ++i) {
    WindowSpec w;
    w.t0 = cfg.windows[i].t0 * cfg.time_scale;
    w.tF = cfg.windows[i].tF * cfg.time_scale;
    s.windows.push_back(std::move(w));
  }
  for (std::size_t k = 0; k < all_times.size(); ++k) {
    ObservationSet& o = s.windows[owner[k]].observations;
    o.times.push_back(all_times[k]);
    o.values.push_back(twin.observations.values[k]);
    o.error_cov.push_back(r);
  }

  // Truth at every model step over all windows.
  const double t_end = s.windows.back().tF;
  const Index nsteps = s.model->steps_between(t_start, t_end);
  std::vector<double> grid;
  for (Index k = 0; k <= nsteps; ++k) grid.push_back(t_start + static_cast<double>(k) * s.model->step_size());
  grid.back() = t_end;
  write_trajectory_csv(dir / "truth.csv", grid, s.model->trajectory(s.truth0, t_start, grid));
  std::vector<StateVector> observed;
  for (const Vector& y : twin.observations.values) observed.emplace_back(y);
  write_trajectory_csv(dir / "observations.csv", twin.times, observed);
  return s;
}

AssimilationWindow make_window(const Setup& s, std::size_t i, const StateVector& background,
                               std::shared_ptr<CostLedger> ledger) {
  AssimilationWindow win;
  win.t0 = s.windows[i].t0;
  win.tF = s.windows[i].tF;
  win.background = background;
  win.b0 = s.b0;
  win.observations = s.windows[i].observations;
  win.model = s.model;
  win.obs_operator = s.op;
  win.ledger = std::move(ledger);
  return win;
}

SchemeRun run_hmc(const ExperimentConfig& cfg, const Setup& s, const fs::path& dir) {
  SchemeRun run;
  run.scheme = Scheme::HmcSmoother;
  run.cost.scheme = "hmc";
  auto ledger = std::make_shared<CostLedger>();

  SmootherConfig sc;
  sc.hmc = cfg.hmc;
  sc.hmc.seed = cfg.seed;
  sc.b0_mode = cfg.b0_mode == ExperimentConfig::B0Mode::Hybrid ? SmootherConfig::B0Mode::Hybrid
                                                               : SmootherConfig::B0Mode::Fixed;
  sc.gamma = cfg.gamma;
  if (cfg.taper_length > 0.0) {
    TaperSpec taper;
    taper.decorrelation_length = cfg.taper_length;
    sc.taper = taper;
  }
  sc.init = cfg.init == ExperimentConfig::Init::FourDVarWarmStart ? SmootherConfig::Init::FourDVarWarmStart
                                                                  : SmootherConfig::Init::Background;
  sc.warm_start_iterations = cfg.warm_start_iterations;

  SequentialProblem problem;
  problem.model = s.model;
  problem.obs_operator = s.op;
  problem.background = s.background;
  problem.b0 = s.b0;
  problem.windows = s.windows;
  problem.ledger = ledger;
  const std::vector<WindowResult> results = run_sequential(problem, sc);
  for (std::size_t i = 0; i < results.size(); ++i) {
    write_window_result(dir / "hmc" / fmt::format("window_{}", i), results[i]);
    run.backgrounds.push_back(results[i].background);
    run.analyses.push_back(results[i].analysis_mean);
    run.ensembles.push_back(results[i].analysis_ensemble);
    run.cost.proposals += results[i].chain.proposals_total;
    const ChainSummary summary = chain_diagnostics(results[i].chain);
    spdlog::info("hmc window {}: acceptance {:.3f}, mean |dH| {:.4g}, IACT {:.3g}", i, summary.acceptance_rate,
                 summary.mean_abs_delta_h, summary.iact);
  }
  run.cost.ledger = *ledger;
  return run;
}

SchemeRun run_fourdvar(const ExperimentConfig& cfg, const Setup& s, const fs::path& dir) {
  SchemeRun run;
  run.scheme = Scheme::FourDVar;
  run.cost.scheme = "fourdvar";
  auto ledger = std::make_shared<CostLedger>();
  StateVector background = s.background;
  for (std::size_t i = 0; i < s.windows.size(); ++i) {
    const fs::path wdir = dir / "fourdvar" / fmt::format("window_{}", i);
    fs::create_directories(wdir);
    const AssimilationWindow win = make_window(s, i, background, ledger);
    LbfgsConfig lb;
    lb.max_iterations = cfg.fourdvar_max_iterations;
    lb.memory = cfg.fourdvar_memory;
    lb.grad_norm_tol = cfg.fourdvar_grad_norm_tol;
    lb.rel_f_tol = cfg.fourdvar_rel_f_tol;
    lb.log_path = wdir / "optimizer.csv";
    const FourDVarResult res = minimize(win, background, lb);
    spdlog::info("fourdvar window {}: J = {:.6g} after {} iterations ({})", i, res.optim.value, res.optim.iterations,
                 to_string(res.optim.termination));
    write_matrix_csv(wdir / "analysis.csv", res.analysis.values().transpose());
    run.backgrounds.push_back(background);
    run.analyses.push_back(res.analysis);
    run.cost.function_evaluations += res.optim.function_evaluations;
    run.cost.iterations += res.optim.iterations;
    background = s.model->propagate(res.analysis, win.t0, win.tF);
  }
  run.cost.ledger = *ledger;
  return run;
}

SchemeRun run_enks(const ExperimentConfig& cfg, const Setup& s, const fs::path& dir) {
  SchemeRun run;
  run.scheme = Scheme::Enks;
  run.cost.scheme = "enks";
  auto ledger = std::make_shared<CostLedger>();
  const Index n = s.model->nvar();
  RandomStream init(cfg.seed, Stream::EnsembleInit);
  std::vector<StateVector> members;
  for (int e = 0; e < cfg.enks_members; ++e) {
    members.emplace_back(s.background.values() + s.b0->sample_transform(init.normal_vector(n)));
  }
  Ensemble ens(std::move(members), s.windows.front().t0);
  for (std::size_t i = 0; i < s.windows.size(); ++i) {
    const StateVector background = ensemble_mean(ens);
    const AssimilationWindow win = make_window(s, i, background, ledger);
    RandomStream rng(cfg.seed, Stream::EnkfPerturbation, i);
    const EnksResult res = enks_fixed_point_run(ens, win, rng);
    const fs::path wdir = dir / "enks" / fmt::format("window_{}", i);
    fs::create_directories(wdir);
    const StateVector mean = ensemble_mean(res.smoothed);
    write_matrix_binary(wdir / "samples.bin", res.smoothed.as_matrix());
    write_matrix_csv(wdir / "mean.csv", mean.values().transpose());
    write_matrix_binary(wdir / "mean.bin", mean.values().transpose());
    const Matrix cov = ensemble_covariance(res.smoothed).to_dense();
    write_matrix_csv(wdir / "cov.csv", cov);
    write_matrix_binary(wdir / "cov.bin", cov);
    run.backgrounds.push_back(background);
    run.analyses.push_back(mean);
    run.ensembles.push_back(res.smoothed);
    ens = forecast_step(res.filtered, *s.model, res.filtered.time(), win.tF);
    ledger->add_forward(ens.size());
  }
  run.cost.ledger = *ledger;
  return run;
}

void write_rmse(const ExperimentConfig& cfg, const Setup& s, const std::vector<SchemeRun>& runs, const fs::path& dir) {
  std::string header = "window,time,free_run";
  for (const SchemeRun& r : runs) header += fmt::format(",{}", to_string(r.scheme));
  std::string body;
  StateVector free_run = s.background;
  StateVector truth = s.truth0;
  for (std::size_t i = 0; i < s.windows.size(); ++i) {
    const WindowSpec& w = s.windows[i];
    std::vector<double> rows{w.t0};
    rows.insert(rows.end(), w.observations.times.begin(), w.observations.times.end());
    const std::vector<StateVector> truth_traj = s.model->trajectory(truth, w.t0, rows);
    const std::vector<StateVector> free_traj = s.model->trajectory(free_run, w.t0, rows);
    std::vector<std::vector<StateVector>> scheme_traj;
    for (const SchemeRun& r : runs) scheme_traj.push_back(s.model->trajectory(r.analyses[i], w.t0, rows));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      body += fmt::format("{},{},{}", i, format_double(rows[k] / cfg.time_scale),
                          format_double(rmse(free_traj[k], truth_traj[k])));
      for (const auto& traj : scheme_traj) body += "," + format_double(rmse(traj[k], truth_traj[k]));
      body += "\n";
    }
    truth = s.model->propagate(truth, w.t0, w.tF);
    free_run = s.model->propagate(free_run, w.t0, w.tF);
  }
  write_text(dir / "rmse.csv", header + "\n" + body);

  std::string summary = "scheme,window,background_rmse,analysis_rmse\n";
  for (const SchemeRun& r : runs) {
    StateVector t0_truth = s.truth0;
    for (std::size_t i = 0; i < s.windows.size(); ++i) {
      summary += fmt::format("{},{},{},{}\n", to_string(r.scheme), i, format_double(rmse(r.backgrounds[i], t0_truth)),
                             format_double(rmse(r.analyses[i], t0_truth)));
      t0_truth = s.model->propagate(t0_truth, s.windows[i].t0, s.windows[i].tF);
    }
  }
  write_text(dir / "window_rmse.csv", summary);
}

void write_scalar_outputs(const ExperimentConfig& cfg, const Setup& s, const std::vector<SchemeRun>& runs,
                          const fs::path& dir) {
  std::string header = "window,bin_lo,bin_hi";
  std::vector<const SchemeRun*> with_ensembles;
  for (const SchemeRun& r : runs) {
    if (!r.ensembles.empty()) {
      with_ensembles.push_back(&r);
      header += fmt::format(",{}", to_string(r.scheme));
    }
  }
  std::string body;
  for (std::size_t i = 0; i < s.windows.size(); ++i) {
    std::vector<Histogram> hists;
    for (const SchemeRun* r : with_ensembles) {
      std::vector<double> values;
      for (const StateVector& m : r->ensembles[i].members()) values.push_back(m[0]);
      hists.push_back(histogram(values, cfg.histogram_lo, cfg.histogram_hi, cfg.histogram_bins));
    }
    const Histogram edges = histogram({}, cfg.histogram_lo, cfg.histogram_hi, cfg.histogram_bins);
    for (std::size_t b = 0; b < edges.counts.size(); ++b) {
      body += fmt::format("{},{},{}", i, format_double(edges.edges[b]), format_double(edges.edges[b + 1]));
      for (const Histogram& h : hists) body += fmt::format(",{}", h.counts[b]);
      body += "\n";
    }
  }
  write_text(dir / "histogram.csv", header + "\n" + body);

  const AssimilationWindow win = make_window(s, 0, s.background, nullptr);
  const KernelGrid grid = evaluate_kernel_grid(win, cfg.kernel_lo, cfg.kernel_hi, cfg.kernel_step);
  std::string kernel = "x,log_kernel\n";
  for (std::size_t k = 0; k < grid.x.size(); ++k) {
    kernel += format_double(grid.x[k]) + "," + format_double(grid.log_kernel[k]) + "\n";
  }
  write_text(dir / "kernel.csv", kernel);
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(now));
}

void write_manifest(const fs::path& dir, const ExperimentConfig& cfg, std::string_view status,
                    const std::string& message) {
  std::string m;
  m += fmt::format("status: {}\n", status);
  m += fmt::format("seed: {}\n", cfg.seed);
  m += fmt::format("version: {}\n", HMCDA_VERSION);
  m += fmt::format("gaussian_method: {}\n", kGaussianMethod);
  m += fmt::format("scheme: {}\n", to_string(cfg.scheme));
  m += fmt::format("windows: {}\n", cfg.windows.size());
  m += fmt::format("timestamp: {}\n", timestamp());
  m += "config: config.yaml\n";
  if (!message.empty()) {
    std::string escaped;
    for (char ch : message) {
      if (ch == '"' || ch == '\\') escaped += '\\';
      escaped += ch == '\n' ? ' ' : ch;
    }
    m += fmt::format("message: \"{}\"\n", escaped);
  }
  write_text(dir / "manifest.yaml", m);
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& cfg) {
  RunOutcome outcome;
  const std::string echo = emit_config(cfg);
  const ConfigParse check = validate_config(echo);
  if (!check.errors.empty()) {
    outcome.exit_code = kExitValidation;
    outcome.message = fmt::format("{}", fmt::join(check.errors, "\n"));
    return outcome;
  }

  const fs::path dir = cfg.output_dir;
  outcome.run_dir = dir;
  try {
    fs::create_directories(dir);
    write_text(dir / "config.yaml", echo);
  } catch (const std::exception& e) {
    outcome.exit_code = kExitRuntime;
    outcome.message = e.what();
    return outcome;
  }

  try {
    const Setup s = build_setup(cfg, dir);
    std::vector<SchemeRun> runs;
    if (cfg.runs(Scheme::HmcSmoother)) runs.push_back(run_hmc(cfg, s, dir));
    if (cfg.runs(Scheme::FourDVar)) runs.push_back(run_fourdvar(cfg, s, dir));
    if (cfg.runs(Scheme::Enks)) runs.push_back(run_enks(cfg, s, dir));

    write_rmse(cfg, s, runs, dir);
    if (s.model->nvar() == 1) write_scalar_outputs(cfg, s, runs, dir);

    std::vector<SchemeCost> costs;
    for (const SchemeRun& r : runs) costs.push_back(r.cost);
    const CostReport report = cost_ledger_report(costs);
    report.write_csv(dir / "cost_ledger.csv");
    write_text(dir / "cost_ledger.txt", report.text_table());
    write_manifest(dir, cfg, "ok", "");
  } catch (const std::exception& e) {
    spdlog::error("run failed: {}", e.what());
    outcome.exit_code = kExitRuntime;
    outcome.message = e.what();
    try {
      write_manifest(dir, cfg, "failed", e.what());
    } catch (const std::exception&) {
    }
  }
  return outcome;
}

}  // namespace hmcda
