/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include "hmcda/cost.hpp"
#include "hmcda/lbfgs.hpp"

namespace hmcda {

struct FourDVarResult {
  /// x₀ᵃ, the minimizer found.
  StateVector analysis;
  OptimResult optim;
};

/// Strong-constraint 4D-Var: minimizes `cost` over the initial state with
/// L-BFGS, using the adjoint gradient.
FourDVarResult minimize(const AssimilationWindow& win, const StateVector& x_init, const LbfgsConfig& cfg);

}  // namespace hmcda
