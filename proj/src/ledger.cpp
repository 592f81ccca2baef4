/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "hmcda/ledger.hpp"

#include "hmcda/error.hpp"

namespace hmcda {

CostLedger::CostLedger(double adjoint_cost_ratio) : ratio_(adjoint_cost_ratio) {
  require(adjoint_cost_ratio >= 0.0, ErrorCode::InvalidArgument, "adjoint cost ratio must be >= 0");
}

CostLedger::CostLedger(std::int64_t forward_runs, std::int64_t adjoint_runs, double adjoint_cost_ratio)
    : forward_(forward_runs), adjoint_(adjoint_runs), ratio_(adjoint_cost_ratio) {
  require(forward_runs >= 0 && adjoint_runs >= 0 && adjoint_cost_ratio >= 0.0, ErrorCode::InvalidArgument,
          "ledger counters and ratio must be >= 0");
}

CostLedger::CostLedger(const CostLedger& other)
    : forward_(other.forward_runs()), adjoint_(other.adjoint_runs()), ratio_(other.ratio_) {}

CostLedger& CostLedger::operator=(const CostLedger& other) {
  forward_.store(other.forward_runs(), std::memory_order_relaxed);
  adjoint_.store(other.adjoint_runs(), std::memory_order_relaxed);
  ratio_ = other.ratio_;
  return *this;
}

void CostLedger::reset() {
  forward_.store(0, std::memory_order_relaxed);
  adjoint_.store(0, std::memory_order_relaxed);
}

double CostLedger::equivalent_forward_runs() const {
  return static_cast<double>(forward_runs()) + ratio_ * static_cast<double>(adjoint_runs());
}

}  // namespace hmcda
