/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "hmcda/covariance.hpp"
#include "hmcda/model.hpp"
#include "hmcda/random.hpp"
#include "hmcda/state.hpp"

namespace hmcda {

/// Observation operator H with its Jacobian action and transpose, both
/// evaluated at a linearization point.
class ObservationOperator {
 public:
  virtual ~ObservationOperator() = default;

  virtual Index input_dim() const = 0;
  virtual Index output_dim() const = 0;
  virtual std::string name() const = 0;

  virtual Vector apply(const Vector& x) const = 0;
  virtual Vector apply_tl(const Vector& x, const Vector& dx) const = 0;
  virtual Vector apply_ad(const Vector& x, const Vector& w) const = 0;
};

/// Selects (a subset of) state components; the identity when built with nvar only.
class LinearObservation final : public ObservationOperator {
 public:
  explicit LinearObservation(Index nvar);
  LinearObservation(Index nvar, std::vector<Index> observed);

  Index input_dim() const override { return nvar_; }
  Index output_dim() const override { return static_cast<Index>(observed_.size()); }
  std::string name() const override { return "linear"; }

  Vector apply(const Vector& x) const override;
  Vector apply_tl(const Vector& x, const Vector& dx) const override;
  Vector apply_ad(const Vector& x, const Vector& w) const override;

 private:
  Index nvar_;
  std::vector<Index> observed_;
};

/// Component-wise square, H(x)_i = x_i², with analytic Jacobian diag(2x).
class QuadraticObservation final : public ObservationOperator {
 public:
  explicit QuadraticObservation(Index nvar);

  Index input_dim() const override { return nvar_; }
  Index output_dim() const override { return nvar_; }
  std::string name() const override { return "quadratic"; }

  Vector apply(const Vector& x) const override;
  Vector apply_tl(const Vector& x, const Vector& dx) const override;
  Vector apply_ad(const Vector& x, const Vector& w) const override;

 private:
  Index nvar_;
};

/// Wraps an arbitrary map; the Jacobian is formed by central differences.
/// Intended for user operators, not for gradient-accuracy work.
class FiniteDifferenceObservation final : public ObservationOperator {
 public:
  using Map = std::function<Vector(const Vector&)>;

  FiniteDifferenceObservation(Index nvar, Index nobs, Map map, double epsilon = 1e-6);

  Index input_dim() const override { return nvar_; }
  Index output_dim() const override { return nobs_; }
  std::string name() const override { return "finite_difference"; }

  Vector apply(const Vector& x) const override;
  Vector apply_tl(const Vector& x, const Vector& dx) const override;
  Vector apply_ad(const Vector& x, const Vector& w) const override;

  Matrix jacobian(const Vector& x) const;

 private:
  Index nvar_;
  Index nobs_;
  Map map_;
  double epsilon_;
};

Vector observe(const ObservationOperator& op, const StateVector& x);
StateVector observe_adjoint(const ObservationOperator& op, const StateVector& x, const Vector& w);

/// Observations inside one window: strictly ascending times, one value vector
/// and one error covariance per time.
struct ObservationSet {
  std::vector<double> times;
  std::vector<Vector> values;
  std::vector<std::shared_ptr<const CovarianceModel>> error_cov;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }

  /// Checks list lengths, ordering, the [t0, tF] bounds and vector sizes.
  void validate(double t0, double tF, Index obs_dim) const;

  /// Builds a set from entries given in any order (sorted by time).
  static ObservationSet from_unordered(std::vector<double> times, std::vector<Vector> values,
                                       std::vector<std::shared_ptr<const CovarianceModel>> error_cov);

  friend bool operator==(const ObservationSet& a, const ObservationSet& b);
};

struct TwinData {
  std::vector<double> times;            // observation times
  std::vector<StateVector> truth;       // true state at each observation time
  ObservationSet observations;
};

/// Propagates `x_true0` to each observation time and draws
/// y_k = H(x_k) + s·η_k with η_k ~ N(0, R_k) and s = `noise_scale`. Draws come
/// from `noise` in time order; `noise_scale` = 0 gives noise-free data while
/// keeping R_k in the returned set.
TwinData generate_truth_and_observations(const Model& model, const ObservationOperator& op,
                                         const StateVector& x_true0, double t0, const std::vector<double>& obs_times,
                                         const std::vector<std::shared_ptr<const CovarianceModel>>& error_cov,
                                         RandomStream& noise, double noise_scale = 1.0);

/// Same R for every observation time.
TwinData generate_truth_and_observations(const Model& model, const ObservationOperator& op,
                                         const StateVector& x_true0, double t0, const std::vector<double>& obs_times,
                                         std::shared_ptr<const CovarianceModel> error_cov, RandomStream& noise,
                                         double noise_scale = 1.0);

}  // namespace hmcda
