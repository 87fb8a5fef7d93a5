#include <gtest/gtest.h>

#include "pfedac/errors.hpp"
#include "pfedac/linalg.hpp"
#include "pfedac/rng.hpp"

using namespace pfedac;

namespace {

Eigen::MatrixXd random_orthonormal(int d, int r, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(rng.gaussian_matrix(d, r));
  return qr.householderQ() * Eigen::MatrixXd::Identity(d, r);
}

}  // namespace

TEST(BallProjection, InsideIsUnchangedOutsideLandsOnSphere) {
  Eigen::VectorXd v(3);
  v << 0.3, -0.4, 0.0;
  auto in = project_to_ball(v, 1.0);
  EXPECT_FALSE(in.clamped);
  EXPECT_EQ(in.point, v);

  v << 3.0, 4.0, 0.0;
  auto out = project_to_ball(v, 2.0);
  EXPECT_TRUE(out.clamped);
  EXPECT_NEAR(out.point.norm(), 2.0, 1e-15);
  EXPECT_NEAR(out.point(0) / out.point(1), 0.75, 1e-15);
}

TEST(ComplementProject, MatchesExplicitProjector) {
  const Eigen::MatrixXd b = random_orthonormal(7, 3, 1);
  Rng rng(2);
  const Eigen::MatrixXd v = rng.gaussian_matrix(7, 2);
  const Eigen::MatrixXd explicit_proj = (Eigen::MatrixXd::Identity(7, 7) - b * b.transpose()) * v;
  EXPECT_LE((complement_project(b, v) - explicit_proj).norm(), 1e-13);
  EXPECT_LE((b.transpose() * complement_project(b, v)).norm(), 1e-13);
}

TEST(ThinQr, PositiveDiagonalAndReconstruction) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd a = rng.gaussian_matrix(9, 3);
    const auto qr = thin_qr_positive(a);
    EXPECT_LE(orthonormality_error(qr.q), 1e-13);
    EXPECT_LE((qr.q * qr.r - a).norm(), 1e-12);
    for (int j = 0; j < 3; ++j) EXPECT_GT(qr.r(j, j), 0.0);
    EXPECT_LE(qr.r.triangularView<Eigen::StrictlyLower>().toDenseMatrix().norm(), 0.0);
  }
}

TEST(ThinQr, SignConventionMakesFactorUnique) {
  Rng rng(8);
  const Eigen::MatrixXd a = rng.gaussian_matrix(6, 2);
  const auto qr = thin_qr_positive(a);
  // Cholesky of A^T A gives the unique R with positive diagonal.
  const Eigen::MatrixXd r_ref = Eigen::LLT<Eigen::MatrixXd>(a.transpose() * a).matrixU();
  EXPECT_LE((qr.r - r_ref).norm(), 1e-12);
}

TEST(ThinQr, RankDeficientInputThrows) {
  Eigen::MatrixXd a(4, 2);
  a << 1, 2, 1, 2, 1, 2, 1, 2;
  EXPECT_THROW(thin_qr_positive(a), RankDeficientAggregate);
}

TEST(PrincipalAngles, IdenticalOrthogonalAndRotatedSubspaces) {
  const Eigen::MatrixXd full = random_orthonormal(8, 4, 3);
  const Eigen::MatrixXd b_star = full.leftCols(2);
  const Eigen::MatrixXd perp = full.rightCols(2);

  auto same = principal_angle_distance(b_star, b_star);
  EXPECT_NEAR(same.frob_sq, 0.0, 1e-14);
  EXPECT_NEAR(same.spectral, 0.0, 1e-7);

  auto orth = principal_angle_distance(perp, b_star);
  EXPECT_NEAR(orth.frob_sq, 2.0, 1e-12);
  EXPECT_NEAR(orth.spectral, 1.0, 1e-12);

  const double t = 0.7;
  Eigen::MatrixXd rot(2, 2);
  rot << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  auto rotated = principal_angle_distance(Eigen::MatrixXd(b_star * rot), b_star);
  EXPECT_NEAR(rotated.frob_sq, 0.0, 1e-14);
}

TEST(PrincipalAngles, SingleAngleClosedForm) {
  Eigen::MatrixXd b_star = Eigen::MatrixXd::Zero(3, 1), b = Eigen::MatrixXd::Zero(3, 1);
  b_star(0, 0) = 1.0;
  const double t = 0.3;
  b(0, 0) = std::cos(t);
  b(1, 0) = std::sin(t);
  auto d = principal_angle_distance(b, b_star);
  EXPECT_NEAR(d.frob_sq, std::sin(t) * std::sin(t), 1e-15);
  EXPECT_NEAR(d.spectral, std::sin(t), 1e-15);
}

TEST(PrincipalAngles, DimensionMismatchThrows) {
  EXPECT_THROW(principal_angle_distance(Eigen::MatrixXd::Identity(3, 1),
                                        Eigen::MatrixXd::Identity(4, 1)),
               DimensionMismatch);
}

TEST(PositiveSpectrum, IgnoresNullDirections) {
  Eigen::MatrixXd v(3, 2);
  v << 1, 0, 0, 2, 0, 0;
  const auto spec = positive_spectrum(Eigen::MatrixXd(v * v.transpose()));
  EXPECT_EQ(spec.rank, 2);
  EXPECT_NEAR(spec.min_positive, 1.0, 1e-14);
  EXPECT_NEAR(spec.max, 4.0, 1e-14);
}

TEST(SymmetricPart, MaxEigenvalueOfSkewPlusDiagonal) {
  Eigen::MatrixXd m(2, 2);
  m << -1, 5, -5, -2;
  EXPECT_NEAR(symmetric_part_max_eigenvalue(m), -1.0, 1e-14);
}
