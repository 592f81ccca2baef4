/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "hmcda/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "hmcda/error.hpp"
#include "hmcda/matrix_io.hpp"

namespace hmcda {

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::GradNorm: return "GradNorm";
    case Termination::RelF: return "RelF";
    case Termination::MaxIter: return "MaxIter";
    case Termination::LineSearchFail: return "LineSearchFail";
  }
  return "Unknown";
}

void LbfgsConfig::validate() const {
  require(memory >= 0, ErrorCode::InvalidArgument, "L-BFGS memory must be >= 0");
  require(max_iterations > 0, ErrorCode::InvalidArgument, "L-BFGS max_iterations must be > 0");
  require(grad_norm_tol > 0.0 && rel_f_tol > 0.0, ErrorCode::InvalidArgument, "L-BFGS tolerances must be > 0");
  require(0.0 < c1 && c1 < c2 && c2 < 1.0, ErrorCode::InvalidArgument, "line search needs 0 < c1 < c2 < 1");
  require(max_line_search_trials > 0, ErrorCode::InvalidArgument, "line search needs at least one trial");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Wraps the objective: counts calls and maps divergence to +∞.
class Evaluator {
 public:
  explicit Evaluator(const Objective& objective) : objective_(objective) {}

  double value(const Vector& x) {
    ++function_evaluations;
    try {
      const double f = objective_.value(x);
      return std::isfinite(f) ? f : kInf;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Diverged && e.code() != ErrorCode::NonFinite) throw;
      return kInf;
    }
  }

  double value_and_gradient(const Vector& x, Vector& g) {
    ++function_evaluations;
    ++gradient_evaluations;
    try {
      const double f = objective_.value_and_gradient(x, g);
      return std::isfinite(f) && all_finite(g) ? f : kInf;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Diverged && e.code() != ErrorCode::NonFinite) throw;
      return kInf;
    }
  }

  int function_evaluations = 0;
  int gradient_evaluations = 0;

 private:
  const Objective& objective_;
};

struct TrialPoint {
  double alpha = 0.0;
  double value = 0.0;
  double slope = 0.0;  // φ'(α); meaningful only when has_slope
  bool has_slope = false;
  Vector x;
  Vector g;
};

struct LineSearchResult {
  bool success = false;
  TrialPoint point;
};

// Minimizer of the cubic (or quadratic when the hi slope is unknown)
// interpolant on [lo, hi], safeguarded to stay inside the interval.
double interpolate(const TrialPoint& lo, const TrialPoint& hi) {
  const double a = lo.alpha;
  const double b = hi.alpha;
  const double width = b - a;
  double alpha = std::numeric_limits<double>::quiet_NaN();
  if (!std::isfinite(hi.value)) {
    alpha = a + 0.5 * width;
  } else if (hi.has_slope) {
    const double d1 = lo.slope + hi.slope - 3.0 * (lo.value - hi.value) / (a - b);
    const double disc = d1 * d1 - lo.slope * hi.slope;
    if (disc >= 0.0) {
      const double d2 = std::copysign(std::sqrt(disc), b - a);
      alpha = b - (b - a) * (hi.slope + d2 - d1) / (hi.slope - lo.slope + 2.0 * d2);
    }
  } else {
    const double denom = 2.0 * (hi.value - lo.value - lo.slope * width);
    if (denom > 0.0) alpha = a - lo.slope * width * width / denom;
  }
  const double lo_edge = std::min(a, b) + 0.1 * std::abs(width);
  const double hi_edge = std::max(a, b) - 0.1 * std::abs(width);
  if (!std::isfinite(alpha) || alpha < lo_edge || alpha > hi_edge) alpha = a + 0.5 * width;
  return alpha;
}

LineSearchResult strong_wolfe(Evaluator& eval, const Vector& x, double f0, const Vector& g0, const Vector& p,
                              double alpha_init, const LbfgsConfig& cfg) {
  const double slope0 = g0.dot(p);
  int trials = 0;

  auto evaluate_value = [&](double alpha) {
    TrialPoint t;
    t.alpha = alpha;
    t.x = x + alpha * p;
    t.value = eval.value(t.x);
    ++trials;
    return t;
  };
  auto add_slope = [&](TrialPoint& t) {
    t.value = eval.value_and_gradient(t.x, t.g);
    t.slope = std::isfinite(t.value) ? t.g.dot(p) : kInf;
    t.has_slope = std::isfinite(t.value);
  };
  auto armijo = [&](const TrialPoint& t) { return t.value <= f0 + cfg.c1 * t.alpha * slope0; };
  auto curvature = [&](const TrialPoint& t) { return std::abs(t.slope) <= -cfg.c2 * slope0; };

  TrialPoint origin;
  origin.alpha = 0.0;
  origin.value = f0;
  origin.slope = slope0;
  origin.has_slope = true;
  origin.x = x;
  origin.g = g0;

  auto zoom = [&](TrialPoint lo, TrialPoint hi) -> LineSearchResult {
    while (trials < cfg.max_line_search_trials) {
      TrialPoint t = evaluate_value(interpolate(lo, hi));
      if (!armijo(t) || t.value >= lo.value) {
        hi = std::move(t);
        continue;
      }
      add_slope(t);
      if (!t.has_slope) {
        hi = std::move(t);
        continue;
      }
      if (curvature(t)) return {true, std::move(t)};
      if (t.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
      lo = std::move(t);
    }
    return {false, std::move(lo)};
  };

  TrialPoint prev = origin;
  double alpha = alpha_init;
  while (trials < cfg.max_line_search_trials) {
    TrialPoint t = evaluate_value(alpha);
    if (!armijo(t) || (prev.alpha > 0.0 && t.value >= prev.value)) return zoom(std::move(prev), std::move(t));
    add_slope(t);
    if (!t.has_slope) return zoom(std::move(prev), std::move(t));
    if (curvature(t)) return {true, std::move(t)};
    if (t.slope >= 0.0) return zoom(std::move(t), std::move(prev));
    prev = std::move(t);
    alpha *= 2.0;
  }
  return {false, std::move(prev)};
}

}  // namespace

OptimResult lbfgs_minimize(const Objective& objective, const Vector& x0, const LbfgsConfig& cfg) {
  cfg.validate();
  require(objective.value && objective.value_and_gradient, ErrorCode::InvalidArgument,
          "objective needs value and value_and_gradient");
  require(all_finite(x0), ErrorCode::NonFinite, "initial iterate is not finite");

  std::ofstream log;
  if (cfg.log_path) {
    log.open(*cfg.log_path, std::ios::trunc);
    require(log.good(), ErrorCode::Io, "cannot open optimizer log " + cfg.log_path->string());
    log << "iter,J,grad_norm,step\n";
  }

  Evaluator eval(objective);
  OptimResult result;
  Vector x = x0;
  Vector g;
  double f = eval.value_and_gradient(x, g);
  require(std::isfinite(f), ErrorCode::Diverged, "objective is not finite at the initial iterate");

  auto record = [&](int iter, double step, bool armijo) {
    result.history.push_back({iter, f, g.norm(), step, armijo});
    if (log.is_open()) {
      log << iter << ',' << format_double(f) << ',' << format_double(g.norm()) << ',' << format_double(step) << '\n';
    }
  };
  record(0, 0.0, true);

  std::deque<std::pair<Vector, Vector>> pairs;  // (s, y)
  double prev_alpha = 1.0;
  double prev_slope = 0.0;
  result.termination = Termination::MaxIter;

  if (g.norm() <= cfg.grad_norm_tol) {
    result.termination = Termination::GradNorm;
  } else {
    for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
      // Two-loop recursion.
      Vector q = g;
      std::vector<double> rho(pairs.size());
      std::vector<double> a(pairs.size());
      for (std::size_t i = pairs.size(); i-- > 0;) {
        rho[i] = 1.0 / pairs[i].second.dot(pairs[i].first);
        a[i] = rho[i] * pairs[i].first.dot(q);
        q -= a[i] * pairs[i].second;
      }
      if (!pairs.empty()) {
        const auto& [s, y] = pairs.back();
        q *= s.dot(y) / y.dot(y);
      }
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        const double b = rho[i] * pairs[i].second.dot(q);
        q += (a[i] - b) * pairs[i].first;
      }
      Vector p = -q;
      double slope = g.dot(p);
      if (!(slope < 0.0)) {
        pairs.clear();
        p = -g;
        slope = g.dot(p);
      }

      double alpha_init = 1.0;
      if (pairs.empty()) {
        alpha_init = iter == 1 || cfg.memory > 0 ? std::min(1.0, 1.0 / g.norm())
                                                 : std::min(1.0, prev_alpha * prev_slope / slope);
      }

      LineSearchResult ls = strong_wolfe(eval, x, f, g, p, alpha_init, cfg);
      TrialPoint& t = ls.point;
      const bool moved = t.alpha > 0.0 && t.has_slope;
      if (moved) {
        const double f_prev = f;
        const bool armijo_ok = t.value <= f + cfg.c1 * t.alpha * slope;
        Vector s = t.x - x;
        Vector y = t.g - g;
        x = std::move(t.x);
        g = std::move(t.g);
        f = t.value;
        result.iterations = iter;
        record(iter, t.alpha, armijo_ok);
        prev_alpha = t.alpha;
        prev_slope = slope;
        if (cfg.memory > 0 && s.dot(y) > std::numeric_limits<double>::epsilon() * y.squaredNorm()) {
          pairs.emplace_back(std::move(s), std::move(y));
          if (static_cast<int>(pairs.size()) > cfg.memory) pairs.pop_front();
        }
        if (g.norm() <= cfg.grad_norm_tol) {
          result.termination = Termination::GradNorm;
          break;
        }
        if (!ls.success) {
          result.termination = Termination::LineSearchFail;
          break;
        }
        if (std::abs(f_prev - f) <= cfg.rel_f_tol * std::abs(f_prev)) {
          result.termination = Termination::RelF;
          break;
        }
      } else {
        result.termination = Termination::LineSearchFail;
        break;
      }
    }
  }

  result.x = std::move(x);
  result.value = f;
  result.function_evaluations = eval.function_evaluations;
  result.gradient_evaluations = eval.gradient_evaluations;
  return result;
}

}  // namespace hmcda
