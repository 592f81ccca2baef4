/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "hmcda/cost.hpp"

#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "hmcda/error.hpp"

namespace hmcda {

namespace {

// Neumaier's variant of Kahan summation.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      carry_ += (sum_ - t) + v;
    } else {
      carry_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

struct ForwardSweep {
  double value = 0.0;
  Vector x0;
  // checkpoints[k]: state at observation time k.
  std::vector<Vector> checkpoints;
  // inner[k]: states at the start of every step of segment k (Full storage only).
  std::vector<std::vector<Vector>> inner;
  // innovation adjoint forcing H_kᵀ R_k⁻¹ (H(x_k) − y_k)
  std::vector<Vector> forcing;
};

ForwardSweep forward_sweep(const AssimilationWindow& win, const StateVector& x0, bool keep_forcing,
                           bool keep_inner) {
  if (x0.size() != win.model->nvar()) {
    fail(ErrorCode::DimensionMismatch,
         fmt::format("initial state has {} entries, model expects {}", x0.size(), win.model->nvar()));
  }
  const Model& model = *win.model;
  const ObservationOperator& op = *win.obs_operator;
  const ObservationSet& obs = win.observations;

  ForwardSweep sweep;
  sweep.x0 = x0.values();
  CompensatedSum total;
  const Vector departure = sweep.x0 - win.background.values();
  total.add(0.5 * departure.dot(win.b0->solve(departure)));

  Vector x = sweep.x0;
  double t = win.t0;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    const Index nsteps = model.steps_between(t, obs.times[k]);
    if (keep_inner) {
      std::vector<Vector> segment;
      segment.reserve(static_cast<std::size_t>(nsteps));
      for (Index s = 0; s < nsteps; ++s) {
        segment.push_back(x);
        model.step(x);
      }
      sweep.inner.push_back(std::move(segment));
    } else {
      model.advance(x, nsteps);
    }
    t = obs.times[k];
    const Vector residual = op.apply(x) - obs.values[k];
    const Vector weighted = obs.error_cov[k]->solve(residual);
    total.add(0.5 * residual.dot(weighted));
    if (keep_forcing) {
      sweep.checkpoints.push_back(x);
      sweep.forcing.push_back(op.apply_ad(x, weighted));
    }
  }
  sweep.value = total.value();
  return sweep;
}

Vector adjoint_sweep(const AssimilationWindow& win, const ForwardSweep& sweep, TrajectoryStorage storage) {
  const Model& model = *win.model;
  const ObservationSet& obs = win.observations;
  Vector lambda = Vector::Zero(model.nvar());
  std::vector<Vector> segment;
  for (std::size_t k = obs.size(); k-- > 0;) {
    lambda += sweep.forcing[k];
    const double t_start = k == 0 ? win.t0 : obs.times[k - 1];
    const Vector& start = k == 0 ? sweep.x0 : sweep.checkpoints[k - 1];
    const std::vector<Vector>* states = nullptr;
    if (storage == TrajectoryStorage::Full) {
      states = &sweep.inner[k];
    } else {
      const Index nsteps = model.steps_between(t_start, obs.times[k]);
      segment.clear();
      Vector x = start;
      for (Index s = 0; s < nsteps; ++s) {
        segment.push_back(x);
        model.step(x);
      }
      states = &segment;
    }
    for (auto it = states->rbegin(); it != states->rend(); ++it) model.step_ad(*it, lambda);
  }
  return lambda;
}

}  // namespace

void AssimilationWindow::validate() const {
  require(model && obs_operator && b0, ErrorCode::InvalidArgument, "window needs a model, an operator and B0");
  require(t0 < tF, ErrorCode::InvalidArgument, fmt::format("window t0 ({}) must be < tF ({})", t0, tF));
  const Index n = model->nvar();
  require(background.size() == n && b0->dim() == n && obs_operator->input_dim() == n, ErrorCode::DimensionMismatch,
          "window background, B0 and operator must match the model dimension");
  observations.validate(t0, tF, obs_operator->output_dim());
  double t = t0;
  for (double tk : observations.times) {
    model->steps_between(t, tk);
    t = tk;
  }
  model->steps_between(t0, tF);
}

double cost(const AssimilationWindow& win, const StateVector& x0) {
  if (win.ledger) win.ledger->add_forward();
  return forward_sweep(win, x0, false, false).value;
}

CostGradient cost_and_gradient(const AssimilationWindow& win, const StateVector& x0, TrajectoryStorage storage) {
  if (win.ledger) {
    win.ledger->add_forward();
    win.ledger->add_adjoint();
  }
  const ForwardSweep sweep = forward_sweep(win, x0, true, storage == TrajectoryStorage::Full);
  Vector grad = adjoint_sweep(win, sweep, storage);
  grad += win.b0->solve(sweep.x0 - win.background.values());
  return {sweep.value, StateVector(std::move(grad))};
}

StateVector gradient(const AssimilationWindow& win, const StateVector& x0, TrajectoryStorage storage) {
  return cost_and_gradient(win, x0, storage).gradient;
}

double posterior_log_kernel(const AssimilationWindow& win, const StateVector& x0) { return -cost(win, x0); }

}  // namespace hmcda
