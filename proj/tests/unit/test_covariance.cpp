/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "hmcda/covariance.hpp"
#include "hmcda/error.hpp"
#include "hmcda/matrix_io.hpp"
#include "hmcda/random.hpp"
#include "oracles.hpp"

namespace hmcda {
namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no hmcda::Error thrown";
  return ErrorCode::Io;
}

Matrix random_spd(Index n, std::uint64_t seed) {
  RandomStream rng(seed, Stream::General);
  Matrix a(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = rng.normal();
  return a * a.transpose() + static_cast<double>(n) * Matrix::Identity(n, n);
}

TEST(EnsembleMean, TwoMembers) {
  Ensemble ens({StateVector{1, 2}, StateVector{3, 4}});
  EXPECT_EQ(ensemble_mean(ens), (StateVector{2, 3}));
}

TEST(EnsembleMean, IdenticalMembers) {
  Ensemble ens({StateVector{0.7, 0.7, 0.7}, StateVector{0.7, 0.7, 0.7}, StateVector{0.7, 0.7, 0.7}});
  EXPECT_EQ(ensemble_mean(ens), StateVector::constant(3, 0.7));
}

TEST(EnsembleMean, SeededNormalDrawsNearZero) {
  RandomStream rng(11, Stream::General);
  std::vector<StateVector> members;
  for (int i = 0; i < 100; ++i) members.emplace_back(rng.normal_vector(3));
  const StateVector m = ensemble_mean(Ensemble(members));
  for (Index i = 0; i < 3; ++i) EXPECT_LT(std::abs(m[i]), 0.3);
}

TEST(EnsembleMean, EmptyThrows) {
  EXPECT_EQ(code_of([] { ensemble_mean(Ensemble()); }), ErrorCode::EmptyEnsemble);
}

TEST(EnsembleCovariance, OneAxisSpread) {
  const Matrix c = ensemble_covariance(Ensemble({StateVector{0, 0}, StateVector{2, 0}})).to_dense();
  Matrix expected(2, 2);
  expected << 2, 0, 0, 0;
  EXPECT_EQ(c, expected);
}

TEST(EnsembleCovariance, IdenticalMembersGiveZero) {
  const Matrix c = ensemble_covariance(Ensemble({StateVector{1, -2}, StateVector{1, -2}})).to_dense();
  EXPECT_TRUE(c.isZero(0.0));
}

TEST(EnsembleCovariance, MatchesBruteForce) {
  Matrix cols(2, 4);
  cols << 0.3, -1.2, 2.5, 0.1, 4.0, 1.5, -0.5, 2.2;
  const Matrix c = ensemble_covariance(Ensemble::from_columns(cols)).to_dense();
  EXPECT_LE((c - oracle::brute_force_covariance(cols)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(EnsembleCovariance, SingleMemberThrows) {
  EXPECT_EQ(code_of([] { ensemble_covariance(Ensemble({StateVector{1.0}})); }), ErrorCode::InsufficientMembers);
}

TEST(EnsembleCovariance, SymmetricPairIsTwoDDt) {
  RandomStream rng(5, Stream::General);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector xbar = rng.normal_vector(4);
    const Vector d = rng.normal_vector(4);
    const Matrix c = ensemble_covariance(Ensemble({StateVector(xbar + d), StateVector(xbar - d)})).to_dense();
    const Matrix expected = 2.0 * d * d.transpose();
    EXPECT_LE((c - expected).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + expected.cwiseAbs().maxCoeff()));
  }
}

TEST(GaspariCohn, SupportAndOrigin) {
  EXPECT_EQ(gaspari_cohn(0.0), 1.0);
  EXPECT_EQ(gaspari_cohn(2.0), 0.0);
  EXPECT_EQ(gaspari_cohn(3.7), 0.0);
}

TEST(ApplyTaper, LorenzBlockMatchesTable) {
  TaperSpec spec;
  spec.decorrelation_length = 2.0;
  const Matrix rho = taper_matrix(40, spec);
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 5; ++j) EXPECT_NEAR(rho(i, j), oracle::kGcTableL2[std::abs(i - j)], 1e-15);
  // cyclic wrap: index 0 and 39 are neighbours
  EXPECT_NEAR(rho(0, 39), oracle::kGcTableL2[1], 1e-15);
  EXPECT_NEAR(rho(1, 38), oracle::kGcTableL2[3], 1e-15);
}

TEST(ApplyTaper, ZeroDistanceUnchangedFarZeroed) {
  const Matrix c = random_spd(6, 3);
  TaperSpec spec;
  spec.decorrelation_length = 1.0;
  const Matrix t = apply_taper(CovarianceModel::dense(c), spec).to_dense();
  for (Index i = 0; i < 6; ++i) EXPECT_EQ(t(i, i), c(i, i));
  EXPECT_EQ(t(0, 2), 0.0);
  EXPECT_EQ(t(0, 3), 0.0);
}

TEST(ApplyTaper, NeverIncreasesMagnitude) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Matrix c = random_spd(8, seed);
    TaperSpec spec;
    spec.decorrelation_length = 0.5 + 0.3 * static_cast<double>(seed);
    const Matrix t = apply_taper(CovarianceModel::dense(c), spec).to_dense();
    for (Index i = 0; i < 8; ++i) {
      EXPECT_EQ(t(i, i), c(i, i));
      for (Index j = 0; j < 8; ++j) EXPECT_LE(std::abs(t(i, j)), std::abs(c(i, j)));
    }
  }
}

TEST(ApplyTaper, DiagonalInputRejected) {
  TaperSpec spec;
  EXPECT_EQ(code_of([&] { apply_taper(CovarianceModel::identity(3), spec); }), ErrorCode::UnsupportedKind);
}

TEST(HybridUpdate, GammaOneIsModeled) {
  const CovarianceModel modeled = CovarianceModel::dense(random_spd(3, 1));
  const CovarianceModel ens = CovarianceModel::dense(random_spd(3, 2));
  EXPECT_EQ(hybrid_update(modeled, ens, 1.0).to_dense(), modeled.to_dense());
}

TEST(HybridUpdate, GammaZeroIsEnsemble) {
  const CovarianceModel modeled = CovarianceModel::dense(random_spd(3, 1));
  const CovarianceModel ens = CovarianceModel::dense(random_spd(3, 2));
  EXPECT_EQ(hybrid_update(modeled, ens, 0.0).to_dense(), ens.to_dense());
}

TEST(HybridUpdate, ScalarBlend) {
  const Matrix c =
      hybrid_update(CovarianceModel::identity(2), CovarianceModel::dense(2.0 * Matrix::Identity(2, 2)), 0.75).to_dense();
  EXPECT_EQ(c, 1.25 * Matrix::Identity(2, 2));
}

TEST(HybridUpdate, WeightOutsideUnitIntervalThrows) {
  const CovarianceModel a = CovarianceModel::identity(2);
  EXPECT_EQ(code_of([&] { hybrid_update(a, a, 1.5); }), ErrorCode::InvalidWeight);
  EXPECT_EQ(code_of([&] { hybrid_update(a, a, -0.1); }), ErrorCode::InvalidWeight);
}

TEST(HybridUpdate, LinearInGamma) {
  const CovarianceModel modeled = CovarianceModel::dense(random_spd(5, 7));
  const CovarianceModel ens = CovarianceModel::dense(random_spd(5, 8));
  RandomStream rng(9, Stream::General);
  for (int trial = 0; trial < 50; ++trial) {
    const double g1 = 0.5 * rng.uniform();
    const double g2 = 0.5 * rng.uniform();
    const Matrix lhs = hybrid_update(modeled, ens, g1).to_dense() + hybrid_update(modeled, ens, g2).to_dense();
    const Matrix rhs = hybrid_update(modeled, ens, g1 + g2).to_dense() + hybrid_update(modeled, ens, 0.0).to_dense();
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-14 * lhs.cwiseAbs().maxCoeff());
  }
}

TEST(SolveWith, DiagonalExample) {
  const Vector x = solve_with(CovarianceModel::diagonal(Vector::Map(std::vector<double>{4, 9}.data(), 2)),
                              Vector::Map(std::vector<double>{4, 9}.data(), 2));
  EXPECT_EQ(x, Vector::Ones(2));
}

TEST(SolveWith, IdentityReturnsInput) {
  RandomStream rng(2, Stream::General);
  const Vector v = rng.normal_vector(5);
  EXPECT_EQ(solve_with(CovarianceModel::identity(5), v), v);
  EXPECT_EQ(solve_with(CovarianceModel::dense(Matrix::Identity(5, 5)), v), v);
}

TEST(SolveWith, MatchesGaussJordanInverse) {
  RandomStream rng(4, Stream::General);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Matrix c = random_spd(3, seed);
    const Vector v = rng.normal_vector(3);
    const Vector expected = oracle::gauss_jordan_inverse(c) * v;
    EXPECT_LE((solve_with(CovarianceModel::dense(c), v) - expected).norm(), 1e-12 * expected.norm());
  }
}

TEST(SolveWith, MultiplyRoundTrip) {
  RandomStream rng(6, Stream::General);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const CovarianceModel c = CovarianceModel::dense(random_spd(10, seed));
    const Vector v = rng.normal_vector(10);
    EXPECT_LE((c.multiply(solve_with(c, v)) - v).norm(), 1e-10 * v.norm());
  }
}

TEST(Cholesky, IndefiniteReportsNotPositiveDefinite) {
  Matrix m(2, 2);
  m << 1.0, 0.0, 0.0, -1.0;
  const CovarianceModel c = CovarianceModel::dense(m);
  EXPECT_EQ(code_of([&] { c.solve(Vector::Ones(2)); }), ErrorCode::NotPositiveDefinite);
}

TEST(Cholesky, SemidefiniteRecoveredWithJitter) {
  const Vector d = Vector::Ones(3);
  const CovarianceModel c = CovarianceModel::dense(d * d.transpose());
  const Vector x = c.solve(Vector::Ones(3));
  EXPECT_TRUE(all_finite(x));
  EXPECT_GT(c.jitter(), 0.0);
}

TEST(Cholesky, NeverSilentNaN) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    RandomStream rng(seed, Stream::General);
    Matrix a(4, 4);
    for (Index i = 0; i < 4; ++i)
      for (Index j = 0; j < 4; ++j) a(i, j) = rng.normal();
    const Matrix sym = 0.5 * (a + a.transpose());
    const CovarianceModel c = CovarianceModel::dense(sym);
    try {
      EXPECT_TRUE(all_finite(c.solve(Vector::Ones(4))));
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::NotPositiveDefinite);
    }
  }
}

TEST(InverseDiagonal, MatchesGaussJordan) {
  const Matrix c = random_spd(3, 12);
  const Vector expected = oracle::gauss_jordan_inverse(c).diagonal();
  EXPECT_LE((CovarianceModel::dense(c).inverse_diagonal() - expected).cwiseAbs().maxCoeff(),
            1e-12 * expected.cwiseAbs().maxCoeff());
}

TEST(MatrixIo, BinaryRoundTrip) {
  const Matrix m = random_spd(4, 2).topRows(3);
  EXPECT_EQ(decode_matrix_binary(encode_matrix_binary(m)), m);
  const std::string bytes = encode_matrix_binary(m);
  EXPECT_EQ(bytes.size(), 8u + 16u + 8u * 12u);
  EXPECT_EQ(bytes.substr(0, 8), "HMCDAMAT");
}

TEST(MatrixIo, CsvRoundTripIsExact) {
  const auto path = std::filesystem::temp_directory_path() / "hmcda_csv_roundtrip.csv";
  const Matrix m = random_spd(3, 5) / 3.0;
  write_matrix_csv(path, m, {"a", "b", "c"});
  EXPECT_EQ(read_matrix_csv(path, true), m);
  std::filesystem::remove(path);
}

TEST(MatrixIo, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) EXPECT_EQ(std::stod(format_double(v)), v);
}

}  // namespace
}  // namespace hmcda
