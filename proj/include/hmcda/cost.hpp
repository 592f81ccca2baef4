/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include <memory>

#include "hmcda/covariance.hpp"
#include "hmcda/ledger.hpp"
#include "hmcda/model.hpp"
#include "hmcda/observation.hpp"

namespace hmcda {

/// Everything the strong-constraint cost needs for one window [t0, tF].
struct AssimilationWindow {
  double t0 = 0.0;
  double tF = 0.0;
  StateVector background;
  std::shared_ptr<const CovarianceModel> b0;
  ObservationSet observations;
  std::shared_ptr<const Model> model;
  std::shared_ptr<const ObservationOperator> obs_operator;
  /// Optional instrumentation: one forward run per cost evaluation, one
  /// forward plus one adjoint run per gradient evaluation.
  std::shared_ptr<CostLedger> ledger;

  /// Throws on inconsistent times, dimensions or observation layout
  /// (including observation times off the model step grid).
  void validate() const;
};

/// How the forward sweep keeps states for the adjoint sweep.
enum class TrajectoryStorage {
  /// States at observation times only; inner steps recomputed backwards.
  Checkpoints,
  /// Every inner step stored.
  Full,
};

struct CostGradient {
  double value = 0.0;
  StateVector gradient;
};

/// J(x0) = ½‖x0 − x_b‖²_{B0⁻¹} + ½ Σ_k ‖H(x_k) − y_k‖²_{R_k⁻¹}, accumulated
/// with compensated summation.
double cost(const AssimilationWindow& win, const StateVector& x0);

/// ∇J(x0) from one forward sweep and one adjoint sweep.
StateVector gradient(const AssimilationWindow& win, const StateVector& x0,
                     TrajectoryStorage storage = TrajectoryStorage::Checkpoints);

/// Value and gradient sharing one forward sweep.
CostGradient cost_and_gradient(const AssimilationWindow& win, const StateVector& x0,
                               TrajectoryStorage storage = TrajectoryStorage::Checkpoints);

/// log of the unnormalized posterior density, −J(x0).
double posterior_log_kernel(const AssimilationWindow& win, const StateVector& x0);

}  // namespace hmcda
