/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "hmcda/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>

#include <fmt/format.h>

#include "hmcda/error.hpp"

namespace hmcda {

namespace {

bool try_cholesky(const Matrix& m, Matrix& lower) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) return false;
  lower = llt.matrixL();
  return all_finite(Eigen::Map<const Vector>(lower.data(), lower.size())) &&
         (lower.diagonal().array() > 0.0).all();
}

// Exactly symmetric copy built from the lower triangle.
Matrix symmetrize(const Matrix& m) {
  Matrix out = m;
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = j + 1; i < m.rows(); ++i) {
      const double v = 0.5 * (m(i, j) + m(j, i));
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

}  // namespace

CholeskyFactor cholesky_with_jitter(const Matrix& symmetric) {
  require(symmetric.rows() == symmetric.cols(), ErrorCode::DimensionMismatch, "Cholesky of a non-square matrix");
  require(symmetric.rows() > 0, ErrorCode::InvalidArgument, "Cholesky of an empty matrix");
  CholeskyFactor out;
  if (all_finite(Eigen::Map<const Vector>(symmetric.data(), symmetric.size()))) {
    if (try_cholesky(symmetric, out.lower)) return out;
    const double scale = symmetric.trace() / static_cast<double>(symmetric.rows());
    double jitter = kJitterBase * scale;
    for (int attempt = 0; attempt <= kJitterEscalations && jitter > 0.0; ++attempt, jitter *= 10.0) {
      Matrix shifted = symmetric;
      shifted.diagonal().array() += jitter;
      if (try_cholesky(shifted, out.lower)) {
        out.jitter = jitter;
        return out;
      }
    }
  }
  fail(ErrorCode::NotPositiveDefinite,
       fmt::format("Cholesky failed for {}x{} matrix after jitter escalation", symmetric.rows(), symmetric.cols()));
}

struct CovarianceModel::FactorCache {
  std::once_flag once;
  CholeskyFactor factor;
  std::exception_ptr error;
};

CovarianceModel::CovarianceModel(Kind kind, Vector variances, Matrix matrix, Matrix taper)
    : kind_(kind),
      variances_(std::move(variances)),
      matrix_(std::move(matrix)),
      taper_(std::move(taper)),
      cache_(std::make_shared<FactorCache>()) {}

CovarianceModel CovarianceModel::diagonal(Vector variances) {
  require(variances.size() > 0, ErrorCode::InvalidArgument, "diagonal covariance needs at least one variance");
  for (Index i = 0; i < variances.size(); ++i) {
    require(std::isfinite(variances[i]) && variances[i] > 0.0, ErrorCode::InvalidArgument,
            fmt::format("diagonal variance {} must be finite and > 0 (got {})", i, variances[i]));
  }
  return CovarianceModel(Kind::Diagonal, std::move(variances), Matrix(), Matrix());
}

CovarianceModel CovarianceModel::identity(Index n) { return diagonal(Vector::Ones(n)); }

CovarianceModel CovarianceModel::dense(const Matrix& matrix) {
  require(matrix.rows() == matrix.cols() && matrix.rows() > 0, ErrorCode::DimensionMismatch,
          "dense covariance must be square and non-empty");
  require(all_finite(Eigen::Map<const Vector>(matrix.data(), matrix.size())), ErrorCode::NonFinite,
          "dense covariance has non-finite entries");
  const double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
  require((matrix - matrix.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale, ErrorCode::InvalidArgument,
          "dense covariance is not symmetric");
  return CovarianceModel(Kind::Dense, Vector(), symmetrize(matrix), Matrix());
}

CovarianceModel CovarianceModel::localized(const Matrix& base, const Matrix& taper) {
  require(base.rows() == taper.rows() && base.cols() == taper.cols(), ErrorCode::DimensionMismatch,
          "taper and covariance dimensions differ");
  const CovarianceModel sym = dense(base);
  return CovarianceModel(Kind::Localized, Vector(), symmetrize(sym.matrix_.cwiseProduct(taper)), taper);
}

Index CovarianceModel::dim() const { return kind_ == Kind::Diagonal ? variances_.size() : matrix_.rows(); }

const Matrix& CovarianceModel::matrix() const {
  require(kind_ != Kind::Diagonal, ErrorCode::UnsupportedKind, "diagonal covariance has no stored matrix");
  return matrix_;
}

Vector CovarianceModel::variances() const { return kind_ == Kind::Diagonal ? variances_ : Vector(matrix_.diagonal()); }

Matrix CovarianceModel::to_dense() const {
  if (kind_ == Kind::Diagonal) return variances_.asDiagonal();
  return matrix_;
}

const CholeskyFactor& CovarianceModel::factor() const {
  std::call_once(cache_->once, [this] {
    try {
      cache_->factor = cholesky_with_jitter(matrix_);
    } catch (...) {
      cache_->error = std::current_exception();
    }
  });
  if (cache_->error) std::rethrow_exception(cache_->error);
  return cache_->factor;
}

Vector CovarianceModel::multiply(const Vector& v) const {
  require(v.size() == dim(), ErrorCode::DimensionMismatch, "covariance multiply dimension mismatch");
  if (kind_ == Kind::Diagonal) return variances_.cwiseProduct(v);
  return matrix_ * v;
}

Vector CovarianceModel::solve(const Vector& v) const {
  require(v.size() == dim(), ErrorCode::DimensionMismatch, "covariance solve dimension mismatch");
  if (kind_ == Kind::Diagonal) return v.cwiseQuotient(variances_);
  const Matrix& lower = factor().lower;
  Vector w = lower.triangularView<Eigen::Lower>().solve(v);
  lower.transpose().triangularView<Eigen::Upper>().solveInPlace(w);
  return w;
}

Vector CovarianceModel::inverse_diagonal() const {
  if (kind_ == Kind::Diagonal) return variances_.cwiseInverse();
  const Matrix& lower = factor().lower;
  const Matrix inv_lower = lower.triangularView<Eigen::Lower>().solve(Matrix::Identity(dim(), dim()));
  // (LLᵀ)⁻¹ = L⁻ᵀL⁻¹, so its i-th diagonal entry is the squared norm of column i of L⁻¹.
  return inv_lower.colwise().squaredNorm().transpose();
}

Vector CovarianceModel::sample_transform(const Vector& z) const {
  require(z.size() == dim(), ErrorCode::DimensionMismatch, "covariance sample dimension mismatch");
  if (kind_ == Kind::Diagonal) return variances_.cwiseSqrt().cwiseProduct(z);
  return factor().lower.triangularView<Eigen::Lower>() * z;
}

double CovarianceModel::jitter() const { return kind_ == Kind::Diagonal ? 0.0 : factor().jitter; }

Ensemble::Ensemble(std::vector<StateVector> members, double time) : members_(std::move(members)), time_(time) {
  for (const auto& m : members_) {
    require(m.size() == members_.front().size(), ErrorCode::DimensionMismatch,
            "ensemble members have different dimensions");
  }
}

Ensemble Ensemble::from_columns(const Matrix& columns, double time) {
  std::vector<StateVector> members;
  members.reserve(static_cast<std::size_t>(columns.cols()));
  for (Index e = 0; e < columns.cols(); ++e) members.emplace_back(Vector(columns.col(e)));
  return Ensemble(std::move(members), time);
}

Matrix Ensemble::as_matrix() const {
  Matrix out(nvar(), size());
  for (Index e = 0; e < size(); ++e) out.col(e) = (*this)[e].values();
  return out;
}

double gaspari_cohn(double r) {
  const double z = std::abs(r);
  double value = 0.0;
  if (z <= 1.0) {
    value = (((-0.25 * z + 0.5) * z + 0.625) * z - 5.0 / 3.0) * z * z + 1.0;
  } else if (z < 2.0) {
    value = ((((z / 12.0 - 0.5) * z + 0.625) * z + 5.0 / 3.0) * z - 5.0) * z + 4.0 - 2.0 / (3.0 * z);
  }
  return std::clamp(value, 0.0, 1.0);
}

Matrix taper_matrix(Index n, const TaperSpec& taper) {
  require(taper.decorrelation_length > 0.0, ErrorCode::InvalidArgument, "decorrelation length must be > 0");
  const bool use_coords = taper.metric == TaperSpec::Metric::Euclidean && taper.coordinates.size() > 0;
  if (use_coords) {
    require(taper.coordinates.rows() == n, ErrorCode::DimensionMismatch, "taper coordinates do not match grid size");
  }
  Matrix rho(n, n);
  for (Index i = 0; i < n; ++i) {
    rho(i, i) = 1.0;
    for (Index j = i + 1; j < n; ++j) {
      double d = 0.0;
      if (use_coords) {
        d = (taper.coordinates.row(i) - taper.coordinates.row(j)).norm();
      } else {
        d = static_cast<double>(j - i);
        if (taper.metric == TaperSpec::Metric::CyclicIndex) d = std::min(d, static_cast<double>(n) - d);
      }
      rho(i, j) = rho(j, i) = gaspari_cohn(d / taper.decorrelation_length);
    }
  }
  return rho;
}

StateVector ensemble_mean(const Ensemble& ens) {
  require(!ens.empty(), ErrorCode::EmptyEnsemble, "mean of an empty ensemble");
  const Vector& first = ens.members().front().values();
  Vector sum = Vector::Zero(ens.nvar());
  for (const auto& m : ens.members()) sum += m.values() - first;
  return StateVector(first + sum / static_cast<double>(ens.size()));
}

CovarianceModel ensemble_covariance(const Ensemble& ens) {
  require(ens.size() >= 2, ErrorCode::InsufficientMembers,
          fmt::format("covariance needs at least 2 members (got {})", ens.size()));
  const Vector mean = ensemble_mean(ens).values();
  const Matrix dev = ens.as_matrix().colwise() - mean;
  const double scale = 1.0 / static_cast<double>(ens.size() - 1);
  const Index n = ens.nvar();
  Matrix cov(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j <= i; ++j) cov(i, j) = cov(j, i) = dev.row(i).dot(dev.row(j)) * scale;
  }
  return CovarianceModel::dense(cov);
}

CovarianceModel apply_taper(const CovarianceModel& cov, const TaperSpec& taper) {
  require(cov.kind() == CovarianceModel::Kind::Dense, ErrorCode::UnsupportedKind, "taper requires a dense covariance");
  return CovarianceModel::localized(cov.matrix(), taper_matrix(cov.dim(), taper));
}

CovarianceModel hybrid_update(const CovarianceModel& modeled, const CovarianceModel& ensemble_cov, double gamma) {
  require(gamma >= 0.0 && gamma <= 1.0, ErrorCode::InvalidWeight,
          fmt::format("hybrid weight gamma must lie in [0,1] (got {})", gamma));
  require(modeled.dim() == ensemble_cov.dim(), ErrorCode::DimensionMismatch, "hybrid covariance dimensions differ");
  if (gamma == 1.0) return modeled;
  if (gamma == 0.0) return ensemble_cov;
  return CovarianceModel::dense(gamma * modeled.to_dense() + (1.0 - gamma) * ensemble_cov.to_dense());
}

Vector solve_with(const CovarianceModel& cov, const Vector& v) { return cov.solve(v); }

}  // namespace hmcda
