/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "hmcda/state.hpp"

namespace hmcda {

/// Jitter added on the first failed Cholesky attempt, as a fraction of trace/n.
inline constexpr double kJitterBase = 1e-10;
/// Number of x10 escalations after the first jittered attempt.
inline constexpr int kJitterEscalations = 3;

/// Lower Cholesky factor of a symmetric matrix together with the diagonal
/// jitter that had to be added to obtain it.
struct CholeskyFactor {
  Matrix lower;
  double jitter = 0.0;
};

/// Cholesky with the jitter escalation policy: plain attempt, then
/// kJitterBase * trace/n added to the diagonal, escalated x10 up to
/// kJitterEscalations times. Throws NotPositiveDefinite when all attempts fail.
CholeskyFactor cholesky_with_jitter(const Matrix& symmetric);

/**
 * Background, observation, analysis or mass covariance.
 *
 * Instances are immutable. The Cholesky factor of the dense forms is computed
 * lazily on first use, exactly once, and shared by copies; concurrent readers
 * are safe.
 */
class CovarianceModel {
 public:
  enum class Kind { Diagonal, Dense, Localized };

  static CovarianceModel diagonal(Vector variances);
  static CovarianceModel identity(Index n);
  /// `matrix` must be symmetric up to 1e-12 relative; it is stored exactly
  /// symmetric.
  static CovarianceModel dense(const Matrix& matrix);
  /// Element-wise product `base ⊙ taper`.
  static CovarianceModel localized(const Matrix& base, const Matrix& taper);

  Kind kind() const { return kind_; }
  Index dim() const;

  /// Stored matrix for Dense/Localized kinds (the tapered product for
  /// Localized). Throws UnsupportedKind for Diagonal.
  const Matrix& matrix() const;
  /// Variances for the Diagonal kind; the matrix diagonal otherwise.
  Vector variances() const;
  Matrix to_dense() const;

  Vector multiply(const Vector& v) const;
  /// C⁻¹v through the (cached) Cholesky factor.
  Vector solve(const Vector& v) const;
  /// Diagonal of C⁻¹, computed from the inverse of the Cholesky factor.
  Vector inverse_diagonal() const;
  /// L z with C = L Lᵀ; maps standard normal draws to N(0, C).
  Vector sample_transform(const Vector& z) const;
  /// Jitter that was needed to factorize (0 for Diagonal or clean factorizations).
  double jitter() const;

 private:
  struct FactorCache;

  CovarianceModel(Kind kind, Vector variances, Matrix matrix, Matrix taper);
  const CholeskyFactor& factor() const;

  Kind kind_ = Kind::Diagonal;
  Vector variances_;
  Matrix matrix_;
  Matrix taper_;
  std::shared_ptr<FactorCache> cache_;
};

/// Collection of equally sized states valid at one model time.
class Ensemble {
 public:
  Ensemble() = default;
  explicit Ensemble(std::vector<StateVector> members, double time = 0.0);

  /// Columns of `columns` become the members.
  static Ensemble from_columns(const Matrix& columns, double time = 0.0);

  Index size() const { return static_cast<Index>(members_.size()); }
  bool empty() const { return members_.empty(); }
  Index nvar() const { return members_.empty() ? 0 : members_.front().size(); }
  double time() const { return time_; }
  const std::vector<StateVector>& members() const { return members_; }
  const StateVector& operator[](Index e) const { return members_[static_cast<std::size_t>(e)]; }

  /// nvar × nens matrix of members.
  Matrix as_matrix() const;

  friend bool operator==(const Ensemble& a, const Ensemble& b) {
    return a.time_ == b.time_ && a.members_ == b.members_;
  }

 private:
  std::vector<StateVector> members_;
  double time_ = 0.0;
};

struct TaperSpec {
  enum class Metric { CyclicIndex, Euclidean };

  double decorrelation_length = 1.0;
  Metric metric = Metric::CyclicIndex;
  /// Point coordinates (n × d) for the Euclidean metric. When empty, grid
  /// index positions are used.
  Matrix coordinates;
};

/// Gaspari-Cohn fifth-order piecewise rational function of r = d / L.
/// Equals 1 at r = 0 and vanishes for r >= 2.
double gaspari_cohn(double r);

/// Correlation matrix ρ_ij = gaspari_cohn(d_ij / L) for an n-point grid.
Matrix taper_matrix(Index n, const TaperSpec& taper);

StateVector ensemble_mean(const Ensemble& ens);
CovarianceModel ensemble_covariance(const Ensemble& ens);
CovarianceModel apply_taper(const CovarianceModel& cov, const TaperSpec& taper);
CovarianceModel hybrid_update(const CovarianceModel& modeled, const CovarianceModel& ensemble_cov, double gamma);
Vector solve_with(const CovarianceModel& cov, const Vector& v);

}  // namespace hmcda
