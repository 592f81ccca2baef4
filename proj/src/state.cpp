/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "hmcda/state.hpp"

#include <cmath>

#include "hmcda/error.hpp"

namespace hmcda {

bool all_finite(const Vector& v) {
  for (Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) return false;
  }
  return true;
}

StateVector::StateVector(Vector values) : values_(std::move(values)) {
  require(all_finite(values_), ErrorCode::NonFinite, "state vector has non-finite entries");
}

StateVector::StateVector(std::initializer_list<double> values)
    : StateVector(Vector(Eigen::Map<const Vector>(values.begin(), static_cast<Index>(values.size())))) {}

StateVector StateVector::zeros(Index n) { return StateVector(Vector::Zero(n)); }

StateVector StateVector::constant(Index n, double value) { return StateVector(Vector::Constant(n, value)); }

}  // namespace hmcda
