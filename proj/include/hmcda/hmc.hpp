/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hmcda/covariance.hpp"
#include "hmcda/random.hpp"
#include "hmcda/state.hpp"

namespace hmcda {

struct HmcConfig {
  /// Position-Verlet steps per trajectory (m).
  int trajectory_steps = 10;
  /// Nominal step h*; the nominal trajectory length is T = m h*.
  double base_step = 0.01;
  /// Per-trajectory step perturbation h = (1 + r) h*, r ~ U(-jitter, jitter).
  double step_jitter = 0.2;
  int burn_in = 0;
  /// States dropped between consecutive kept samples.
  int thin = 4;
  int n_samples = 100;
  std::uint64_t seed = 0;

  double trajectory_length() const { return trajectory_steps * base_step; }
  /// burn_in + n_samples (thin + 1)
  long long total_proposals() const;
  void validate() const;

  friend bool operator==(const HmcConfig&, const HmcConfig&) = default;
};

/// Step h* suggested by the (1/Nvar)^{1/4} scaling rule, anchored so that
/// `reference_step` is returned for `reference_nvar`.
double suggest_step_size(Index nvar, double reference_step = 0.01, Index reference_nvar = 1);

/// Diagonal mass matrix; entries are precisions (M_ii > 0).
class MassMatrix {
 public:
  explicit MassMatrix(Vector diagonal);
  static MassMatrix identity(Index n);

  Index dim() const { return diagonal_.size(); }
  const Vector& diagonal() const { return diagonal_; }
  Vector apply_inverse(const Vector& p) const { return p.cwiseQuotient(diagonal_); }

 private:
  Vector diagonal_;
};

struct PhasePoint {
  StateVector position;
  Vector momentum;
};

/// Potential energy J(x) and its gradient. Either may throw hmcda::Error with
/// code Diverged; callbacks must be reentrant when chains run in parallel.
struct Potential {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
};

/// H(p, x) = ½ pᵀM⁻¹p + J(x)
double hamiltonian(const PhasePoint& phase, const MassMatrix& mass, const Potential& potential);

/// m position-Verlet steps of size h (exactly m gradient evaluations).
/// Throws Diverged on a non-finite intermediate state.
PhasePoint verlet_trajectory(const PhasePoint& start, const MassMatrix& mass, const Potential& potential, double h,
                             int m);

/// Random draws consumed by one HMC transition. Tests substitute stubs to
/// force acceptance or rejection.
class HmcRandomSource {
 public:
  virtual ~HmcRandomSource() = default;
  /// p ~ N(0, M)
  virtual Vector momentum(const MassMatrix& mass) = 0;
  /// r ~ U(-amplitude, amplitude)
  virtual double step_perturbation(double amplitude) = 0;
  /// u ~ U(0, 1)
  virtual double acceptance_uniform() = 0;
};

/// Default source: independent seeded streams for momentum, jitter and
/// acceptance draws. `substream` separates chains sharing one seed.
class StreamRandomSource final : public HmcRandomSource {
 public:
  explicit StreamRandomSource(std::uint64_t seed, std::uint64_t substream = 0);

  Vector momentum(const MassMatrix& mass) override;
  double step_perturbation(double amplitude) override;
  double acceptance_uniform() override;

 private:
  RandomStream momentum_;
  RandomStream jitter_;
  RandomStream acceptance_;
};

struct ChainEntry {
  double h_current = 0.0;
  double h_proposal = 0.0;
  /// H(proposal) − H(current); +∞ for a diverged trajectory.
  double delta_h = 0.0;
  double acceptance_probability = 0.0;
  double step_size = 0.0;
  bool accepted = false;
  bool kept = false;
};

struct StepOutcome {
  StateVector next;
  double next_potential = 0.0;
  ChainEntry entry;
};

/// One HMC transition from `current`. `current_potential` is J(current) when
/// already known (it is evaluated otherwise).
StepOutcome hmc_step(const StateVector& current, const MassMatrix& mass, const Potential& potential,
                     const HmcConfig& cfg, HmcRandomSource& rng, std::optional<double> current_potential = {});

struct ChainRecord {
  Ensemble samples;
  long long proposals_total = 0;
  long long accepted_total = 0;
  std::vector<ChainEntry> trace;
  std::uint64_t seed = 0;
  std::string gaussian_method;

  double acceptance_rate() const;
};

/// Runs burn-in, then keeps every (thin+1)-th state until n_samples are kept.
ChainRecord run_chain(const StateVector& x_init, const MassMatrix& mass, const Potential& potential,
                      const HmcConfig& cfg);
ChainRecord run_chain(const StateVector& x_init, const MassMatrix& mass, const Potential& potential,
                      const HmcConfig& cfg, HmcRandomSource& rng);

/// One row per proposal: index,delta_h,accepted,kept (plus energies and step).
void write_chain_csv(const std::filesystem::path& path, const ChainRecord& record);

}  // namespace hmcda
