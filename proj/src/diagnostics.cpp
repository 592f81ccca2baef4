/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "hmcda/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "hmcda/error.hpp"
#include "hmcda/matrix_io.hpp"

namespace hmcda {

double rmse(const StateVector& x, const StateVector& x_true) {
  require(x.size() == x_true.size(), ErrorCode::DimensionMismatch,
          fmt::format("rmse of vectors with {} and {} entries", x.size(), x_true.size()));
  require(x.size() > 0, ErrorCode::InvalidArgument, "rmse of empty vectors");
  return std::sqrt((x.values() - x_true.values()).squaredNorm() / static_cast<double>(x.size()));
}

namespace {

void require_scalar(const Ensemble& samples) {
  require(!samples.empty(), ErrorCode::EmptyEnsemble, "no samples");
  require(samples.nvar() == 1, ErrorCode::DimensionMismatch,
          fmt::format("expected scalar states, got {} components", samples.nvar()));
}

}  // namespace

ModeMasses mode_masses(const Ensemble& samples, double boundary) {
  require_scalar(samples);
  Index left = 0;
  for (const StateVector& s : samples.members()) left += s[0] < boundary ? 1 : 0;
  const Index right = samples.size() - left;
  const double n = static_cast<double>(samples.size());
  return {static_cast<double>(left) / n, static_cast<double>(right) / n};
}

double sign_concentration(const Ensemble& samples) {
  require_scalar(samples);
  double total = 0.0;
  for (const StateVector& s : samples.members()) total += s[0] > 0.0 ? 1.0 : (s[0] < 0.0 ? -1.0 : 0.0);
  return std::abs(total / static_cast<double>(samples.size()));
}

double integrated_autocorrelation_time(const std::vector<double>& series) {
  const std::size_t n = series.size();
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(n);
  auto autocov = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) acc += (series[i] - mean) * (series[i + lag] - mean);
    return acc / static_cast<double>(n);
  };
  const double c0 = autocov(0);
  if (!(c0 > 0.0)) return std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    const double pair = autocov(2 * m) + autocov(2 * m + 1);
    if (pair <= 0.0) break;
    sum += pair;
  }
  return std::max(0.0, (2.0 * sum - c0) / c0);
}

ChainSummary chain_diagnostics(const ChainRecord& rec) {
  ChainSummary out;
  out.acceptance_rate = rec.acceptance_rate();
  double total = 0.0;
  Index finite = 0;
  for (const ChainEntry& e : rec.trace) {
    if (std::isfinite(e.delta_h)) {
      total += std::abs(e.delta_h);
      ++finite;
    } else {
      ++out.diverged;
    }
  }
  out.mean_abs_delta_h = finite > 0 ? total / static_cast<double>(finite) : 0.0;
  std::vector<double> series;
  series.reserve(static_cast<std::size_t>(rec.samples.size()));
  for (const StateVector& s : rec.samples.members()) series.push_back(s[0]);
  out.iact = integrated_autocorrelation_time(series);
  return out;
}

Histogram histogram(const std::vector<double>& values, double lo, double hi, int bins) {
  require(bins >= 1 && hi > lo, ErrorCode::InvalidArgument, "histogram needs bins >= 1 and hi > lo");
  Histogram h;
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  const double width = (hi - lo) / bins;
  for (int i = 0; i <= bins; ++i) h.edges[static_cast<std::size_t>(i)] = lo + i * width;
  h.edges.back() = hi;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    if (!(v >= lo && v <= hi)) continue;
    auto b = static_cast<long long>(std::floor((v - lo) / width));
    b = std::clamp<long long>(b, 0, bins - 1);
    ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

void write_histogram_csv(const std::filesystem::path& path, const Histogram& hist) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorCode::Io, "cannot open " + path.string());
  out << "bin_lo,bin_hi,count\n";
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    out << format_double(hist.edges[i]) << ',' << format_double(hist.edges[i + 1]) << ',' << hist.counts[i] << '\n';
  }
  require(out.good(), ErrorCode::Io, "failed writing " + path.string());
}

KernelGrid evaluate_kernel_grid(const AssimilationWindow& win, double lo, double hi, double step) {
  require(step > 0.0 && hi > lo, ErrorCode::InvalidArgument, "kernel grid needs step > 0 and hi > lo");
  require(win.model && win.model->nvar() == 1, ErrorCode::DimensionMismatch, "kernel grid needs a scalar state");
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step)) + 1;
  KernelGrid g;
  g.x.reserve(n);
  g.log_kernel.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = lo + static_cast<double>(i) * step;
    g.x.push_back(x);
    double lk = -std::numeric_limits<double>::infinity();
    try {
      lk = posterior_log_kernel(win, StateVector{x});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Diverged) throw;
    }
    g.log_kernel.push_back(lk);
  }
  return g;
}

std::vector<double> kernel_local_maxima(const KernelGrid& grid) {
  std::vector<double> peaks;
  for (std::size_t i = 1; i + 1 < grid.x.size(); ++i) {
    const double v = grid.log_kernel[i];
    if (v > grid.log_kernel[i - 1] && v > grid.log_kernel[i + 1]) peaks.push_back(grid.x[i]);
  }
  return peaks;
}

ModeMasses quadrature_mode_masses(const KernelGrid& grid, double boundary) {
  require(grid.x.size() >= 2, ErrorCode::InvalidArgument, "quadrature needs at least two grid points");
  const double top = *std::max_element(grid.log_kernel.begin(), grid.log_kernel.end());
  double left = 0.0;
  double right = 0.0;
  for (std::size_t i = 0; i + 1 < grid.x.size(); ++i) {
    const double w = 0.5 * (grid.x[i + 1] - grid.x[i]) *
                     (std::exp(grid.log_kernel[i] - top) + std::exp(grid.log_kernel[i + 1] - top));
    if (0.5 * (grid.x[i] + grid.x[i + 1]) < boundary) {
      left += w;
    } else {
      right += w;
    }
  }
  const double total = left + right;
  return {left / total, right / total};
}

double paper_hmc_cost(long long proposals, double cost_per_proposal) {
  return static_cast<double>(proposals) * cost_per_proposal;
}

double paper_fourdvar_cost(long long function_evaluations, long long iterations, double cost_per_iteration) {
  return static_cast<double>(function_evaluations) + static_cast<double>(iterations) * cost_per_iteration;
}

void CostReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorCode::Io, "cannot open " + path.string());
  out << "scheme,quantity,value\n";
  for (const CostReportRow& r : rows) out << r.scheme << ',' << r.quantity << ',' << format_double(r.value) << '\n';
  require(out.good(), ErrorCode::Io, "failed writing " + path.string());
}

std::string CostReport::text_table() const {
  std::size_t w_scheme = 6;
  std::size_t w_quantity = 8;
  for (const CostReportRow& r : rows) {
    w_scheme = std::max(w_scheme, r.scheme.size());
    w_quantity = std::max(w_quantity, r.quantity.size());
  }
  std::string out = fmt::format("{:<{}}  {:<{}}  {:>14}\n", "Scheme", w_scheme, "Quantity", w_quantity, "Value");
  out += std::string(w_scheme + w_quantity + 18, '-') + "\n";
  for (const CostReportRow& r : rows) {
    out += fmt::format("{:<{}}  {:<{}}  {:>14}\n", r.scheme, w_scheme, r.quantity, w_quantity, fmt::format("{:g}", r.value));
  }
  return out;
}

CostReport cost_ledger_report(const std::vector<SchemeCost>& runs) {
  CostReport report;
  for (const SchemeCost& run : runs) {
    auto add = [&](std::string quantity, double value) { report.rows.push_back({run.scheme, std::move(quantity), value}); };
    add("Forward model runs", static_cast<double>(run.ledger.forward_runs()));
    add("Adjoint model runs", static_cast<double>(run.ledger.adjoint_runs()));
    add("Cost in equivalent forward model runs", run.ledger.equivalent_forward_runs());
    if (run.proposals > 0) {
      add("Number of proposed states", static_cast<double>(run.proposals));
      add("Measured cost per proposal", run.ledger.equivalent_forward_runs() / static_cast<double>(run.proposals));
      add("Paper-formula cost (4.5 per proposal)", paper_hmc_cost(run.proposals));
    }
    if (run.iterations > 0 || run.function_evaluations > 0) {
      add("Function evaluations", static_cast<double>(run.function_evaluations));
      add("Number of iterations", static_cast<double>(run.iterations));
      add("Paper-formula cost (evaluations + 3.5 per iteration)",
          paper_fourdvar_cost(run.function_evaluations, run.iterations));
    }
  }
  return report;
}

CostReport cost_ledger_report(const CostLedger& ledger) {
  SchemeCost run;
  run.scheme = "total";
  run.ledger = ledger;
  return cost_ledger_report(std::vector<SchemeCost>{run});
}

}  // namespace hmcda
