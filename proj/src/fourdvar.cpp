/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "hmcda/fourdvar.hpp"

namespace hmcda {

FourDVarResult minimize(const AssimilationWindow& win, const StateVector& x_init, const LbfgsConfig& cfg) {
  win.validate();
  Objective objective;
  objective.value = [&win](const Vector& x) { return cost(win, StateVector(x)); };
  objective.value_and_gradient = [&win](const Vector& x, Vector& g) {
    CostGradient cg = cost_and_gradient(win, StateVector(x));
    g = cg.gradient.values();
    return cg.value;
  };
  FourDVarResult out;
  out.optim = lbfgs_minimize(objective, x_init.values(), cfg);
  out.analysis = StateVector(out.optim.x);
  return out;
}

}  // namespace hmcda
