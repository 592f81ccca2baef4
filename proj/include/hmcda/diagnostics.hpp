/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hmcda/cost.hpp"
#include "hmcda/covariance.hpp"
#include "hmcda/hmc.hpp"
#include "hmcda/ledger.hpp"

namespace hmcda {

/// sqrt(mean((x − x_true)²))
double rmse(const StateVector& x, const StateVector& x_true);

struct ModeMasses {
  double left = 0.0;
  double right = 0.0;
};

/// Fractions of scalar samples strictly below / at-or-above `boundary`.
ModeMasses mode_masses(const Ensemble& samples, double boundary = 0.0);

/// |mean(sign(x))| of scalar samples; 1 when every member has the same sign.
double sign_concentration(const Ensemble& samples);

/// Integrated autocorrelation time 1 + 2Σρ_k, truncated by Geyer's initial
/// positive sequence. 1 for uncorrelated draws.
double integrated_autocorrelation_time(const std::vector<double>& series);

struct ChainSummary {
  double acceptance_rate = 0.0;
  /// Mean |ΔH| over proposals with a finite energy error.
  double mean_abs_delta_h = 0.0;
  Index diverged = 0;
  /// IACT of the first state component over the kept samples.
  double iact = 0.0;
};

ChainSummary chain_diagnostics(const ChainRecord& rec);

struct Histogram {
  std::vector<double> edges;
  std::vector<long long> counts;
};

/// `bins` equal-width bins on [lo, hi]; values outside are ignored.
Histogram histogram(const std::vector<double>& values, double lo, double hi, int bins);

void write_histogram_csv(const std::filesystem::path& path, const Histogram& hist);

/// log exp(−J) = −J on the grid lo, lo + step, ..., hi (scalar windows).
struct KernelGrid {
  std::vector<double> x;
  std::vector<double> log_kernel;
};

KernelGrid evaluate_kernel_grid(const AssimilationWindow& win, double lo, double hi, double step);

/// Interior strict local maxima of the kernel, by grid position.
std::vector<double> kernel_local_maxima(const KernelGrid& grid);

/// Normalized trapezoidal masses left of / right of `boundary`.
ModeMasses quadrature_mode_masses(const KernelGrid& grid, double boundary = 0.0);

/// Equivalent-run figures as stated for the paper's configuration.
double paper_hmc_cost(long long proposals, double cost_per_proposal = 4.5);
double paper_fourdvar_cost(long long function_evaluations, long long iterations, double cost_per_iteration = 3.5);

struct CostReportRow {
  std::string scheme;
  std::string quantity;
  double value = 0.0;
};

struct CostReport {
  std::vector<CostReportRow> rows;

  void write_csv(const std::filesystem::path& path) const;
  std::string text_table() const;
};

/// Measured counters for one scheme run.
struct SchemeCost {
  std::string scheme;
  CostLedger ledger;
  /// HMC: proposals; 4D-Var: zero.
  long long proposals = 0;
  /// 4D-Var: optimizer function evaluations and iterations.
  long long function_evaluations = 0;
  long long iterations = 0;
};

/// Measured forward/adjoint counts and equivalent runs, plus the paper-formula
/// figure for the same activity.
CostReport cost_ledger_report(const std::vector<SchemeCost>& runs);
CostReport cost_ledger_report(const CostLedger& ledger);

}  // namespace hmcda
