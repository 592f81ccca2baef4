/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "hmcda/state.hpp"

namespace hmcda {

struct LbfgsConfig {
  /// Stored correction pairs; 0 falls back to steepest descent.
  int memory = 10;
  int max_iterations = 100;
  double grad_norm_tol = 1e-10;
  double rel_f_tol = 1e-6;
  /// Sufficient-decrease (Armijo) constant.
  double c1 = 1e-4;
  /// Curvature constant of the strong Wolfe conditions.
  double c2 = 0.9;
  /// Trial steps per line search before giving up.
  int max_line_search_trials = 40;
  /// Iteration log (CSV: iter,J,grad_norm,step) written when set.
  std::optional<std::filesystem::path> log_path;

  void validate() const;
};

enum class Termination { GradNorm, RelF, MaxIter, LineSearchFail };

std::string_view to_string(Termination t);

struct IterationRecord {
  int iteration = 0;
  double value = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
  /// f(x_k + αp) <= f(x_k) + c1 α ∇fᵀp held for the accepted step.
  bool armijo = true;
};

struct OptimResult {
  Vector x;
  double value = 0.0;
  int iterations = 0;
  int function_evaluations = 0;
  int gradient_evaluations = 0;
  Termination termination = Termination::MaxIter;
  /// Row 0 is the initial iterate (step 0).
  std::vector<IterationRecord> history;
};

/**
 * Objective for the minimizer. `value` alone is used where the line search
 * only needs f; `value_and_gradient` whenever a gradient is required. A
 * thrown hmcda::Error with code Diverged, or a non-finite value, is treated
 * as f = +∞ at that trial point.
 */
struct Objective {
  std::function<double(const Vector&)> value;
  std::function<double(const Vector&, Vector&)> value_and_gradient;
};

/// Limited-memory BFGS with a strong-Wolfe line search (bracketing plus
/// cubic-interpolation zoom) and initial Hessian scaling sᵀy / yᵀy.
OptimResult lbfgs_minimize(const Objective& objective, const Vector& x0, const LbfgsConfig& cfg);

}  // namespace hmcda
