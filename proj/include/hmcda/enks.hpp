/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include <vector>

#include "hmcda/cost.hpp"
#include "hmcda/covariance.hpp"
#include "hmcda/observation.hpp"
#include "hmcda/random.hpp"

namespace hmcda {

struct EnkfUpdate {
  Ensemble analysis;
  /// Nens × Nens weights with X_a = X_b T.
  Matrix transform;
};

/// Stochastic (perturbed-observations) EnKF analysis of `forecast` against y
/// with error covariance R.
EnkfUpdate enkf_update(const Ensemble& forecast, const Vector& y, const CovarianceModel& r,
                       const ObservationOperator& op, RandomStream& rng);

/// Weight matrix T = I + ΔX_b⁺ (X_a − X_b) with ΔX_b the forecast deviations.
Matrix recover_transform(const Matrix& forecast, const Matrix& analysis);

struct EnksResult {
  /// t0 ensemble conditioned on every observation of the window.
  Ensemble smoothed;
  /// Filter ensemble at the last observation time.
  Ensemble filtered;
  /// T_k in chronological order.
  std::vector<Matrix> transforms;
};

/// Fixed-point smoother at t0: propagates the ensemble through the window
/// observation times, applies enkf_update at each and right-multiplies the t0
/// anchor by each T_k as it is produced.
EnksResult enks_fixed_point_run(const Ensemble& initial_ens, const AssimilationWindow& win, RandomStream& rng);

Ensemble enks_fixed_point(const Ensemble& initial_ens, const AssimilationWindow& win, RandomStream& rng);

}  // namespace hmcda
