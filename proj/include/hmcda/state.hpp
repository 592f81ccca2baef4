/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include <Eigen/Dense>
#include <initializer_list>

namespace hmcda {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Model state at one time instant. Entries are finite by construction.
class StateVector {
 public:
  StateVector() = default;
  explicit StateVector(Vector values);
  StateVector(std::initializer_list<double> values);

  static StateVector zeros(Index n);
  static StateVector constant(Index n, double value);

  Index size() const { return values_.size(); }
  const Vector& values() const { return values_; }
  double operator[](Index i) const { return values_[i]; }

  friend bool operator==(const StateVector& a, const StateVector& b) {
    return a.values_.size() == b.values_.size() && a.values_ == b.values_;
  }

 private:
  Vector values_;
};

bool all_finite(const Vector& v);

}  // namespace hmcda
