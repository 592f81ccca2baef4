/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "hmcda/model.hpp"

#include <cmath>

#include <fmt/format.h>

#include "hmcda/error.hpp"

namespace hmcda {

Index Model::steps_between(double t0, double t1) const {
  require(std::isfinite(t0) && std::isfinite(t1), ErrorCode::InvalidArgument, "non-finite propagation times");
  if (t1 < t0) fail(ErrorCode::InvalidArgument, fmt::format("propagation backwards in time ({} -> {})", t0, t1));
  const double ratio = (t1 - t0) / step_size();
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-6) {
    fail(ErrorCode::InvalidArgument,
         fmt::format("interval [{}, {}] is not a multiple of the model step {}", t0, t1, step_size()));
  }
  return static_cast<Index>(rounded);
}

namespace {

struct Rk4Workspace {
  Vector k1, k2, k3, k4, stage;

  void resize(Index n) {
    if (k1.size() == n) return;
    k1.resize(n);
    k2.resize(n);
    k3.resize(n);
    k4.resize(n);
    stage.resize(n);
  }
};

}  // namespace

void Model::step(Vector& x) const {
  thread_local Rk4Workspace ws;
  const double h = step_size();
  ws.resize(x.size());
  tendency(x, ws.k1);
  ws.stage = x + 0.5 * h * ws.k1;
  tendency(ws.stage, ws.k2);
  ws.stage = x + 0.5 * h * ws.k2;
  tendency(ws.stage, ws.k3);
  ws.stage = x + h * ws.k3;
  tendency(ws.stage, ws.k4);
  x += (h / 6.0) * (ws.k1 + 2.0 * ws.k2 + 2.0 * ws.k3 + ws.k4);
  if (!all_finite(x)) fail(ErrorCode::Diverged, name() + " integration produced a non-finite state");
}

void Model::step_tl(const Vector& x, Vector& dx) const {
  const double h = step_size();
  const Index n = x.size();
  Vector k1(n), k2(n), k3(n);
  tendency(x, k1);
  const Vector x2 = x + 0.5 * h * k1;
  tendency(x2, k2);
  const Vector x3 = x + 0.5 * h * k2;
  tendency(x3, k3);
  const Vector x4 = x + h * k3;

  Vector dk1(n), dk2(n), dk3(n), dk4(n);
  tendency_tl(x, dx, dk1);
  tendency_tl(x2, dx + 0.5 * h * dk1, dk2);
  tendency_tl(x3, dx + 0.5 * h * dk2, dk3);
  tendency_tl(x4, dx + h * dk3, dk4);
  dx += (h / 6.0) * (dk1 + 2.0 * dk2 + 2.0 * dk3 + dk4);
  if (!all_finite(dx)) fail(ErrorCode::Diverged, name() + " tangent-linear produced a non-finite perturbation");
}

void Model::step_ad(const Vector& x, Vector& lambda) const {
  const double h = step_size();
  const Index n = x.size();
  Vector k1(n), k2(n), k3(n);
  tendency(x, k1);
  const Vector x2 = x + 0.5 * h * k1;
  tendency(x2, k2);
  const Vector x3 = x + 0.5 * h * k2;
  tendency(x3, k3);
  const Vector x4 = x + h * k3;

  // Reverse sweep through dx' = dx + h/6 (dk1 + 2 dk2 + 2 dk3 + dk4).
  Vector a_k1 = (h / 6.0) * lambda;
  Vector a_k2 = (h / 3.0) * lambda;
  Vector a_k3 = (h / 3.0) * lambda;
  const Vector a_k4 = (h / 6.0) * lambda;
  Vector u(n);
  tendency_ad(x4, a_k4, u);
  lambda += u;
  a_k3 += h * u;
  tendency_ad(x3, a_k3, u);
  lambda += u;
  a_k2 += 0.5 * h * u;
  tendency_ad(x2, a_k2, u);
  lambda += u;
  a_k1 += 0.5 * h * u;
  tendency_ad(x, a_k1, u);
  lambda += u;
  if (!all_finite(lambda)) fail(ErrorCode::Diverged, name() + " adjoint produced a non-finite state");
}

void Model::advance(Vector& x, Index nsteps) const {
  for (Index s = 0; s < nsteps; ++s) step(x);
}

StateVector Model::propagate(const StateVector& x0, double t0, double t1) const {
  require(x0.size() == nvar(), ErrorCode::DimensionMismatch, "propagate: state dimension mismatch");
  Vector x = x0.values();
  advance(x, steps_between(t0, t1));
  return StateVector(std::move(x));
}

StateVector Model::propagate_tlm(const StateVector& basepoint, const StateVector& dx0, double t0, double t1) const {
  require(basepoint.size() == nvar() && dx0.size() == nvar(), ErrorCode::DimensionMismatch,
          "propagate_tlm: dimension mismatch");
  const Index nsteps = steps_between(t0, t1);
  Vector x = basepoint.values();
  Vector dx = dx0.values();
  for (Index s = 0; s < nsteps; ++s) {
    step_tl(x, dx);
    step(x);
  }
  return StateVector(std::move(dx));
}

StateVector Model::propagate_adjoint(const StateVector& basepoint, const StateVector& lambda1, double t0,
                                     double t1) const {
  require(basepoint.size() == nvar() && lambda1.size() == nvar(), ErrorCode::DimensionMismatch,
          "propagate_adjoint: dimension mismatch");
  const Index nsteps = steps_between(t0, t1);
  std::vector<Vector> states;
  states.reserve(static_cast<std::size_t>(nsteps));
  Vector x = basepoint.values();
  for (Index s = 0; s < nsteps; ++s) {
    states.push_back(x);
    step(x);
  }
  Vector lambda = lambda1.values();
  for (auto it = states.rbegin(); it != states.rend(); ++it) step_ad(*it, lambda);
  return StateVector(std::move(lambda));
}

std::vector<StateVector> Model::trajectory(const StateVector& x0, double t0, const std::vector<double>& times) const {
  std::vector<StateVector> out;
  out.reserve(times.size());
  Vector x = x0.values();
  double t = t0;
  for (double tk : times) {
    advance(x, steps_between(t, tk));
    t = tk;
    out.emplace_back(x);
  }
  return out;
}

// -----------------------------------------------------------------------------

DoubleWellModel::DoubleWellModel(double step, Index nvar) : step_(step), nvar_(nvar) {
  require(step > 0.0 && nvar > 0, ErrorCode::InvalidArgument, "double-well model needs step > 0 and nvar > 0");
}

void DoubleWellModel::tendency(const Vector& x, Vector& out) const {
  out = -4.0 * x.array() * (x.array().square() - 1.0);
}

namespace {

double double_well_rate(double x) { return (-4.0 * x) * (x * x - 1.0); }

}  // namespace

void DoubleWellModel::advance(Vector& x, Index nsteps) const {
  const double h = step_;
  const double half = 0.5 * h;
  const double sixth = h / 6.0;
  for (Index i = 0; i < x.size(); ++i) {
    double xi = x[i];
    for (Index s = 0; s < nsteps; ++s) {
      const double k1 = double_well_rate(xi);
      const double k2 = double_well_rate(xi + half * k1);
      const double k3 = double_well_rate(xi + half * k2);
      const double k4 = double_well_rate(xi + h * k3);
      xi += sixth * (((k1 + 2.0 * k2) + 2.0 * k3) + k4);
      if (!std::isfinite(xi)) {
        x[i] = xi;
        fail(ErrorCode::Diverged, name() + " integration produced a non-finite state");
      }
    }
    x[i] = xi;
  }
}

void DoubleWellModel::tendency_tl(const Vector& x, const Vector& dx, Vector& out) const {
  out = (4.0 - 12.0 * x.array().square()) * dx.array();
}

void DoubleWellModel::tendency_ad(const Vector& x, const Vector& lambda, Vector& out) const {
  out = (4.0 - 12.0 * x.array().square()) * lambda.array();
}

// -----------------------------------------------------------------------------

Lorenz96Model::Lorenz96Model(Index n, double forcing, double step) : n_(n), forcing_(forcing), step_(step) {
  require(n >= 4, ErrorCode::InvalidArgument, "Lorenz-96 needs at least 4 grid points");
  require(step > 0.0, ErrorCode::InvalidArgument, "Lorenz-96 step must be > 0");
}

void Lorenz96Model::tendency(const Vector& x, Vector& out) const {
  out.resize(n_);
  for (Index i = 0; i < n_; ++i) {
    const Index ip1 = (i + 1) % n_;
    const Index im1 = (i + n_ - 1) % n_;
    const Index im2 = (i + n_ - 2) % n_;
    out[i] = (x[ip1] - x[im2]) * x[im1] - x[i] + forcing_;
  }
}

void Lorenz96Model::tendency_tl(const Vector& x, const Vector& dx, Vector& out) const {
  out.resize(n_);
  for (Index i = 0; i < n_; ++i) {
    const Index ip1 = (i + 1) % n_;
    const Index im1 = (i + n_ - 1) % n_;
    const Index im2 = (i + n_ - 2) % n_;
    out[i] = (dx[ip1] - dx[im2]) * x[im1] + (x[ip1] - x[im2]) * dx[im1] - dx[i];
  }
}

void Lorenz96Model::tendency_ad(const Vector& x, const Vector& lambda, Vector& out) const {
  out = Vector::Zero(n_);
  for (Index i = 0; i < n_; ++i) {
    const Index ip1 = (i + 1) % n_;
    const Index im1 = (i + n_ - 1) % n_;
    const Index im2 = (i + n_ - 2) % n_;
    const double w = lambda[i];
    out[ip1] += x[im1] * w;
    out[im2] -= x[im1] * w;
    out[im1] += (x[ip1] - x[im2]) * w;
    out[i] -= w;
  }
}

// -----------------------------------------------------------------------------

IdentityModel::IdentityModel(Index nvar, double step) : nvar_(nvar), step_(step) {
  require(nvar > 0 && step > 0.0, ErrorCode::InvalidArgument, "identity model needs nvar > 0 and step > 0");
}

void IdentityModel::tendency(const Vector& x, Vector& out) const { out = Vector::Zero(x.size()); }

void IdentityModel::tendency_tl(const Vector&, const Vector& dx, Vector& out) const { out = Vector::Zero(dx.size()); }

void IdentityModel::tendency_ad(const Vector&, const Vector& lambda, Vector& out) const {
  out = Vector::Zero(lambda.size());
}

}  // namespace hmcda
