/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include <atomic>
#include <cstdint>

namespace hmcda {

/// Cost of one adjoint run in units of forward runs.
inline constexpr double kDefaultAdjointCostRatio = 2.5;

/**
 * Counts forward and adjoint model sweeps. Counters are atomic so one ledger
 * can be shared by instrumented evaluations running on several threads.
 */
class CostLedger {
 public:
  explicit CostLedger(double adjoint_cost_ratio = kDefaultAdjointCostRatio);
  CostLedger(std::int64_t forward_runs, std::int64_t adjoint_runs,
             double adjoint_cost_ratio = kDefaultAdjointCostRatio);
  CostLedger(const CostLedger& other);
  CostLedger& operator=(const CostLedger& other);

  void add_forward(std::int64_t n = 1) { forward_.fetch_add(n, std::memory_order_relaxed); }
  void add_adjoint(std::int64_t n = 1) { adjoint_.fetch_add(n, std::memory_order_relaxed); }
  void reset();

  std::int64_t forward_runs() const { return forward_.load(std::memory_order_relaxed); }
  std::int64_t adjoint_runs() const { return adjoint_.load(std::memory_order_relaxed); }
  double adjoint_cost_ratio() const { return ratio_; }
  /// forward_runs + adjoint_cost_ratio * adjoint_runs
  double equivalent_forward_runs() const;

 private:
  std::atomic<std::int64_t> forward_{0};
  std::atomic<std::int64_t> adjoint_{0};
  double ratio_;
};

}  // namespace hmcda
