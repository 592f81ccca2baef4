/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "hmcda/enks.hpp"

#include <algorithm>
#include <limits>

#include <Eigen/SVD>
#include <fmt/format.h>

#include "hmcda/error.hpp"

namespace hmcda {

namespace {

Matrix pseudo_inverse(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double largest = s.size() > 0 ? s(0) : 0.0;
  const double tol =
      std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(a.rows(), a.cols())) * largest;
  Vector inv = Vector::Zero(s.size());
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > tol) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace

Matrix recover_transform(const Matrix& forecast, const Matrix& analysis) {
  require(forecast.rows() == analysis.rows() && forecast.cols() == analysis.cols(), ErrorCode::DimensionMismatch,
          "forecast and analysis ensembles differ in shape");
  const Matrix deviations = forecast.colwise() - forecast.rowwise().mean();
  Matrix t = pseudo_inverse(deviations) * (analysis - forecast);
  t.diagonal().array() += 1.0;
  return t;
}

EnkfUpdate enkf_update(const Ensemble& forecast, const Vector& y, const CovarianceModel& r,
                       const ObservationOperator& op, RandomStream& rng) {
  require(forecast.size() >= 2, ErrorCode::InsufficientMembers,
          fmt::format("EnKF needs at least 2 members (got {})", forecast.size()));
  require(forecast.nvar() == op.input_dim(), ErrorCode::DimensionMismatch, "ensemble and operator dimensions differ");
  require(y.size() == op.output_dim() && r.dim() == op.output_dim(), ErrorCode::DimensionMismatch,
          "observation and R dimensions must match the operator output");
  const Index nens = forecast.size();
  const Index nobs = op.output_dim();
  const Matrix xb = forecast.as_matrix();

  Matrix hx(nobs, nens);
  for (Index e = 0; e < nens; ++e) hx.col(e) = op.apply(xb.col(e));

  const Matrix dx = xb.colwise() - xb.rowwise().mean();
  const Matrix dy = hx.colwise() - hx.rowwise().mean();
  const double scale = 1.0 / static_cast<double>(nens - 1);
  const Matrix pxy = dx * dy.transpose() * scale;
  Matrix s = dy * dy.transpose() * scale + r.to_dense();
  s = 0.5 * (s + s.transpose());
  const CholeskyFactor chol = cholesky_with_jitter(s);

  Matrix innovations(nobs, nens);
  for (Index e = 0; e < nens; ++e) {
    const Vector eta = r.sample_transform(rng.normal_vector(nobs));
    innovations.col(e) = y + eta - hx.col(e);
  }
  const Matrix weights = chol.lower.transpose().triangularView<Eigen::Upper>().solve(
      chol.lower.triangularView<Eigen::Lower>().solve(innovations));
  const Matrix xa = xb + pxy * weights;

  EnkfUpdate out;
  out.analysis = Ensemble::from_columns(xa, forecast.time());
  out.transform = recover_transform(xb, xa);
  return out;
}

EnksResult enks_fixed_point_run(const Ensemble& initial_ens, const AssimilationWindow& win, RandomStream& rng) {
  require(initial_ens.size() >= 2, ErrorCode::InsufficientMembers,
          fmt::format("EnKS needs at least 2 members (got {})", initial_ens.size()));
  win.validate();
  const Model& model = *win.model;
  const ObservationSet& obs = win.observations;

  Matrix anchor = initial_ens.as_matrix();
  Matrix running = anchor;
  EnksResult result;
  double t = win.t0;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    const Index nsteps = model.steps_between(t, obs.times[k]);
    for (Index e = 0; e < running.cols(); ++e) {
      Vector x = running.col(e);
      model.advance(x, nsteps);
      running.col(e) = x;
    }
    if (win.ledger) win.ledger->add_forward(running.cols());
    t = obs.times[k];
    EnkfUpdate upd = enkf_update(Ensemble::from_columns(running, t), obs.values[k], *obs.error_cov[k],
                                 *win.obs_operator, rng);
    running = upd.analysis.as_matrix();
    anchor = anchor * upd.transform;
    result.transforms.push_back(std::move(upd.transform));
  }
  result.smoothed = Ensemble::from_columns(anchor, win.t0);
  result.filtered = Ensemble::from_columns(running, t);
  return result;
}

Ensemble enks_fixed_point(const Ensemble& initial_ens, const AssimilationWindow& win, RandomStream& rng) {
  return enks_fixed_point_run(initial_ens, win, rng).smoothed;
}

}  // namespace hmcda
