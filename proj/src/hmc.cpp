/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "hmcda/hmc.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "hmcda/error.hpp"
#include "hmcda/matrix_io.hpp"

namespace hmcda {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

long long HmcConfig::total_proposals() const {
  return static_cast<long long>(burn_in) + static_cast<long long>(n_samples) * (static_cast<long long>(thin) + 1);
}

void HmcConfig::validate() const {
  require(trajectory_steps >= 1, ErrorCode::InvalidArgument, "trajectory_steps must be >= 1");
  require(base_step > 0.0 && std::isfinite(base_step), ErrorCode::InvalidArgument, "base_step must be > 0");
  require(step_jitter >= 0.0 && step_jitter < 1.0, ErrorCode::InvalidArgument, "step_jitter must lie in [0, 1)");
  require(burn_in >= 0, ErrorCode::InvalidArgument, "burn_in must be >= 0");
  require(thin >= 0, ErrorCode::InvalidArgument, "thin must be >= 0");
  require(n_samples >= 1, ErrorCode::InvalidArgument, "n_samples must be >= 1");
}

double suggest_step_size(Index nvar, double reference_step, Index reference_nvar) {
  require(nvar >= 1 && reference_nvar >= 1, ErrorCode::InvalidArgument, "dimensions must be >= 1");
  require(reference_step > 0.0, ErrorCode::InvalidArgument, "reference step must be > 0");
  return reference_step * std::pow(static_cast<double>(reference_nvar) / static_cast<double>(nvar), 0.25);
}

MassMatrix::MassMatrix(Vector diagonal) : diagonal_(std::move(diagonal)) {
  require(diagonal_.size() > 0, ErrorCode::InvalidArgument, "mass matrix must not be empty");
  require(all_finite(diagonal_) && (diagonal_.array() > 0.0).all(), ErrorCode::InvalidArgument,
          "mass matrix entries must be finite and > 0");
}

MassMatrix MassMatrix::identity(Index n) { return MassMatrix(Vector::Ones(n)); }

double hamiltonian(const PhasePoint& phase, const MassMatrix& mass, const Potential& potential) {
  require(phase.momentum.size() == mass.dim() && phase.position.size() == mass.dim(), ErrorCode::DimensionMismatch,
          "phase point and mass matrix dimensions differ");
  require(all_finite(phase.momentum), ErrorCode::NonFinite, "momentum is not finite");
  const double kinetic = 0.5 * phase.momentum.dot(mass.apply_inverse(phase.momentum));
  return kinetic + potential.value(phase.position.values());
}

PhasePoint verlet_trajectory(const PhasePoint& start, const MassMatrix& mass, const Potential& potential, double h,
                             int m) {
  require(h > 0.0 && m >= 1, ErrorCode::InvalidArgument, "Verlet needs h > 0 and m >= 1");
  require(start.momentum.size() == mass.dim() && start.position.size() == mass.dim(), ErrorCode::DimensionMismatch,
          "phase point and mass matrix dimensions differ");
  Vector x = start.position.values();
  Vector p = start.momentum;
  for (int j = 0; j < m; ++j) {
    x += 0.5 * h * mass.apply_inverse(p);
    const Vector g = potential.gradient(x);
    require(g.size() == x.size(), ErrorCode::DimensionMismatch, "gradient has the wrong dimension");
    p -= h * g;
    x += 0.5 * h * mass.apply_inverse(p);
    if (!all_finite(x) || !all_finite(p)) fail(ErrorCode::Diverged, fmt::format("Verlet step {} is not finite", j));
  }
  return {StateVector(std::move(x)), std::move(p)};
}

StreamRandomSource::StreamRandomSource(std::uint64_t seed, std::uint64_t substream)
    : momentum_(seed, Stream::Momentum, substream),
      jitter_(seed, Stream::Jitter, substream),
      acceptance_(seed, Stream::Acceptance, substream) {}

Vector StreamRandomSource::momentum(const MassMatrix& mass) {
  return mass.diagonal().cwiseSqrt().cwiseProduct(momentum_.normal_vector(mass.dim()));
}

double StreamRandomSource::step_perturbation(double amplitude) { return jitter_.uniform(-amplitude, amplitude); }

double StreamRandomSource::acceptance_uniform() { return acceptance_.uniform(); }

StepOutcome hmc_step(const StateVector& current, const MassMatrix& mass, const Potential& potential,
                     const HmcConfig& cfg, HmcRandomSource& rng, std::optional<double> current_potential) {
  require(current.size() == mass.dim(), ErrorCode::DimensionMismatch, "state and mass matrix dimensions differ");
  const double j_current = current_potential ? *current_potential : potential.value(current.values());
  require(std::isfinite(j_current), ErrorCode::NonFinite, "potential is not finite at the current state");

  PhasePoint start{current, rng.momentum(mass)};
  const double r = rng.step_perturbation(cfg.step_jitter);
  const double h = (1.0 + r) * cfg.base_step;
  const double u = rng.acceptance_uniform();

  ChainEntry entry;
  entry.step_size = h;
  entry.h_current = 0.5 * start.momentum.dot(mass.apply_inverse(start.momentum)) + j_current;

  double j_proposal = kInf;
  std::optional<PhasePoint> proposal;
  try {
    proposal = verlet_trajectory(start, mass, potential, h, cfg.trajectory_steps);
    j_proposal = potential.value(proposal->position.values());
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Diverged && e.code() != ErrorCode::NonFinite) throw;
    proposal.reset();
  }

  if (proposal && std::isfinite(j_proposal)) {
    entry.h_proposal = 0.5 * proposal->momentum.dot(mass.apply_inverse(proposal->momentum)) + j_proposal;
    entry.delta_h = entry.h_proposal - entry.h_current;
  } else {
    entry.h_proposal = kInf;
    entry.delta_h = kInf;
  }
  if (std::isnan(entry.delta_h)) entry.delta_h = kInf;

  entry.acceptance_probability = entry.delta_h <= 0.0 ? 1.0 : std::exp(-entry.delta_h);
  entry.accepted = u < entry.acceptance_probability;
  if (entry.accepted) return {std::move(proposal->position), j_proposal, entry};
  return {current, j_current, entry};
}

double ChainRecord::acceptance_rate() const {
  return proposals_total > 0 ? static_cast<double>(accepted_total) / static_cast<double>(proposals_total) : 0.0;
}

ChainRecord run_chain(const StateVector& x_init, const MassMatrix& mass, const Potential& potential,
                      const HmcConfig& cfg) {
  StreamRandomSource rng(cfg.seed);
  return run_chain(x_init, mass, potential, cfg, rng);
}

ChainRecord run_chain(const StateVector& x_init, const MassMatrix& mass, const Potential& potential,
                      const HmcConfig& cfg, HmcRandomSource& rng) {
  cfg.validate();
  require(potential.value && potential.gradient, ErrorCode::InvalidArgument, "potential needs value and gradient");

  ChainRecord rec;
  rec.seed = cfg.seed;
  rec.gaussian_method = std::string(kGaussianMethod);
  const long long total = cfg.total_proposals();
  rec.trace.reserve(static_cast<std::size_t>(total));

  std::vector<StateVector> kept;
  kept.reserve(static_cast<std::size_t>(cfg.n_samples));
  StateVector x = x_init;
  double jx = potential.value(x.values());
  for (long long k = 0; k < total; ++k) {
    StepOutcome out = hmc_step(x, mass, potential, cfg, rng, jx);
    x = std::move(out.next);
    jx = out.next_potential;
    if (out.entry.accepted) ++rec.accepted_total;
    if (k >= cfg.burn_in && (k - cfg.burn_in + 1) % (cfg.thin + 1) == 0) {
      out.entry.kept = true;
      kept.push_back(x);
    }
    rec.trace.push_back(out.entry);
  }
  rec.proposals_total = total;
  rec.samples = Ensemble(std::move(kept));
  return rec;
}

void write_chain_csv(const std::filesystem::path& path, const ChainRecord& record) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorCode::Io, "cannot open " + path.string());
  out << "index,delta_h,accepted,kept,h_current,h_proposal,step_size\n";
  for (std::size_t i = 0; i < record.trace.size(); ++i) {
    const ChainEntry& e = record.trace[i];
    out << i << ',' << format_double(e.delta_h) << ',' << int{e.accepted} << ',' << int{e.kept} << ','
        << format_double(e.h_current) << ',' << format_double(e.h_proposal) << ',' << format_double(e.step_size)
        << '\n';
  }
  require(out.good(), ErrorCode::Io, "failed writing " + path.string());
}

}  // namespace hmcda
