/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "hmcda/observation.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "hmcda/error.hpp"

namespace hmcda {

namespace {

void check_input(const ObservationOperator& op, const Vector& x) {
  if (x.size() != op.input_dim()) {
    fail(ErrorCode::DimensionMismatch,
         fmt::format("{} observation operator expects {} inputs, got {}", op.name(), op.input_dim(), x.size()));
  }
  require(all_finite(x), ErrorCode::NonFinite, "observation operator applied to a non-finite state");
}

}  // namespace

LinearObservation::LinearObservation(Index nvar) : nvar_(nvar), observed_(static_cast<std::size_t>(nvar)) {
  require(nvar > 0, ErrorCode::InvalidArgument, "linear observation needs nvar > 0");
  std::iota(observed_.begin(), observed_.end(), Index{0});
}

LinearObservation::LinearObservation(Index nvar, std::vector<Index> observed)
    : nvar_(nvar), observed_(std::move(observed)) {
  require(!observed_.empty(), ErrorCode::InvalidArgument, "linear observation needs at least one observed index");
  for (Index i : observed_) {
    require(i >= 0 && i < nvar_, ErrorCode::InvalidArgument, fmt::format("observed index {} out of range", i));
  }
}

Vector LinearObservation::apply(const Vector& x) const {
  check_input(*this, x);
  Vector y(output_dim());
  for (std::size_t k = 0; k < observed_.size(); ++k) y[static_cast<Index>(k)] = x[observed_[k]];
  return y;
}

Vector LinearObservation::apply_tl(const Vector& x, const Vector& dx) const {
  check_input(*this, x);
  return apply(dx);
}

Vector LinearObservation::apply_ad(const Vector& x, const Vector& w) const {
  check_input(*this, x);
  require(w.size() == output_dim(), ErrorCode::DimensionMismatch, "linear observation adjoint size mismatch");
  Vector out = Vector::Zero(nvar_);
  for (std::size_t k = 0; k < observed_.size(); ++k) out[observed_[k]] += w[static_cast<Index>(k)];
  return out;
}

QuadraticObservation::QuadraticObservation(Index nvar) : nvar_(nvar) {
  require(nvar > 0, ErrorCode::InvalidArgument, "quadratic observation needs nvar > 0");
}

Vector QuadraticObservation::apply(const Vector& x) const {
  check_input(*this, x);
  return x.array().square();
}

Vector QuadraticObservation::apply_tl(const Vector& x, const Vector& dx) const {
  check_input(*this, x);
  return 2.0 * x.array() * dx.array();
}

Vector QuadraticObservation::apply_ad(const Vector& x, const Vector& w) const {
  check_input(*this, x);
  require(w.size() == nvar_, ErrorCode::DimensionMismatch, "quadratic observation adjoint size mismatch");
  return 2.0 * x.array() * w.array();
}

FiniteDifferenceObservation::FiniteDifferenceObservation(Index nvar, Index nobs, Map map, double epsilon)
    : nvar_(nvar), nobs_(nobs), map_(std::move(map)), epsilon_(epsilon) {
  require(nvar > 0 && nobs > 0 && epsilon > 0.0 && map_, ErrorCode::InvalidArgument,
          "finite-difference observation needs dims > 0, epsilon > 0 and a map");
}

Vector FiniteDifferenceObservation::apply(const Vector& x) const {
  check_input(*this, x);
  Vector y = map_(x);
  require(y.size() == nobs_, ErrorCode::DimensionMismatch, "user observation map returned the wrong size");
  return y;
}

Matrix FiniteDifferenceObservation::jacobian(const Vector& x) const {
  check_input(*this, x);
  Matrix jac(nobs_, nvar_);
  for (Index j = 0; j < nvar_; ++j) {
    Vector plus = x;
    Vector minus = x;
    plus[j] += epsilon_;
    minus[j] -= epsilon_;
    jac.col(j) = (map_(plus) - map_(minus)) / (2.0 * epsilon_);
  }
  return jac;
}

Vector FiniteDifferenceObservation::apply_tl(const Vector& x, const Vector& dx) const { return jacobian(x) * dx; }

Vector FiniteDifferenceObservation::apply_ad(const Vector& x, const Vector& w) const {
  return jacobian(x).transpose() * w;
}

Vector observe(const ObservationOperator& op, const StateVector& x) { return op.apply(x.values()); }

StateVector observe_adjoint(const ObservationOperator& op, const StateVector& x, const Vector& w) {
  return StateVector(op.apply_ad(x.values(), w));
}

// -----------------------------------------------------------------------------

void ObservationSet::validate(double t0, double tF, Index obs_dim) const {
  require(values.size() == times.size() && error_cov.size() == times.size(), ErrorCode::DimensionMismatch,
          "observation set lists have different lengths");
  for (std::size_t k = 0; k < times.size(); ++k) {
    require(times[k] >= t0 && times[k] <= tF, ErrorCode::InvalidArgument,
            fmt::format("observation time {} outside window [{}, {}]", times[k], t0, tF));
    require(k == 0 || times[k] > times[k - 1], ErrorCode::InvalidArgument,
            "observation times must be strictly ascending");
    require(values[k].size() == obs_dim, ErrorCode::DimensionMismatch,
            fmt::format("observation {} has {} entries, operator produces {}", k, values[k].size(), obs_dim));
    require(error_cov[k] != nullptr && error_cov[k]->dim() == obs_dim, ErrorCode::DimensionMismatch,
            fmt::format("observation {} error covariance has the wrong dimension", k));
  }
}

ObservationSet ObservationSet::from_unordered(std::vector<double> times, std::vector<Vector> values,
                                              std::vector<std::shared_ptr<const CovarianceModel>> error_cov) {
  require(values.size() == times.size() && error_cov.size() == times.size(), ErrorCode::DimensionMismatch,
          "observation set lists have different lengths");
  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
  ObservationSet out;
  for (std::size_t k : order) {
    out.times.push_back(times[k]);
    out.values.push_back(std::move(values[k]));
    out.error_cov.push_back(std::move(error_cov[k]));
  }
  return out;
}

bool operator==(const ObservationSet& a, const ObservationSet& b) {
  if (a.times != b.times || a.values.size() != b.values.size() || a.error_cov.size() != b.error_cov.size()) {
    return false;
  }
  for (std::size_t k = 0; k < a.values.size(); ++k) {
    if (a.values[k].size() != b.values[k].size() || a.values[k] != b.values[k]) return false;
    if ((a.error_cov[k] == nullptr) != (b.error_cov[k] == nullptr)) return false;
    if (a.error_cov[k] && a.error_cov[k]->to_dense() != b.error_cov[k]->to_dense()) return false;
  }
  return true;
}

TwinData generate_truth_and_observations(const Model& model, const ObservationOperator& op,
                                         const StateVector& x_true0, double t0, const std::vector<double>& obs_times,
                                         const std::vector<std::shared_ptr<const CovarianceModel>>& error_cov,
                                         RandomStream& noise, double noise_scale) {
  require(noise_scale >= 0.0, ErrorCode::InvalidArgument, "noise scale must be >= 0");
  require(error_cov.size() == obs_times.size(), ErrorCode::DimensionMismatch,
          "one error covariance per observation time is required");
  TwinData out;
  out.times = obs_times;
  out.truth = model.trajectory(x_true0, t0, obs_times);
  out.observations.times = obs_times;
  out.observations.error_cov = error_cov;
  for (std::size_t k = 0; k < obs_times.size(); ++k) {
    Vector y = observe(op, out.truth[k]);
    const Vector eta = error_cov[k]->sample_transform(noise.normal_vector(y.size()));
    y += noise_scale * eta;
    out.observations.values.push_back(std::move(y));
  }
  return out;
}

TwinData generate_truth_and_observations(const Model& model, const ObservationOperator& op,
                                         const StateVector& x_true0, double t0, const std::vector<double>& obs_times,
                                         std::shared_ptr<const CovarianceModel> error_cov, RandomStream& noise,
                                         double noise_scale) {
  const std::vector<std::shared_ptr<const CovarianceModel>> covs(obs_times.size(), std::move(error_cov));
  return generate_truth_and_observations(model, op, x_true0, t0, obs_times, covs, noise, noise_scale);
}

}  // namespace hmcda
