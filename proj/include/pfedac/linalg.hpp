#pragma once

// Dense linear-algebra helpers shared by the critic, oracle and server.
// Everything here is a free function over Eigen expressions, templated on the
// scalar type of its arguments.

#include <algorithm>
#include <cmath>
#include <utility>

#include <Eigen/Dense>

#include "pfedac/errors.hpp"

namespace pfedac {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct BallProjection {
  Vector<Scalar> point;
  bool clamped = false;
};

/// Euclidean projection onto the closed ball of the given radius.
template <typename Derived>
BallProjection<typename Derived::Scalar> project_to_ball(
    const Eigen::MatrixBase<Derived>& v, typename Derived::Scalar radius) {
  using Scalar = typename Derived::Scalar;
  const Scalar norm = v.norm();
  if (norm > radius) return {v * (radius / norm), true};
  return {v, false};
}

/// (I - B B^T) v without materializing the d x d projector.
template <typename DerivedB, typename DerivedV>
Matrix<typename DerivedB::Scalar> complement_project(const Eigen::MatrixBase<DerivedB>& basis,
                                                     const Eigen::MatrixBase<DerivedV>& v) {
  return v - basis * (basis.transpose() * v);
}

/// max |B^T B - I|, entrywise.
template <typename Derived>
typename Derived::Scalar orthonormality_error(const Eigen::MatrixBase<Derived>& basis) {
  using Scalar = typename Derived::Scalar;
  const Matrix<Scalar> gram = basis.transpose() * basis;
  return (gram - Matrix<Scalar>::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

template <typename Derived>
typename Derived::Scalar spectral_norm(const Eigen::MatrixBase<Derived>& m) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix<typename Derived::Scalar>> svd(m);
  return svd.singularValues()(0);
}

template <typename Scalar>
struct ThinQr {
  Matrix<Scalar> q;  // d x r, orthonormal columns
  Matrix<Scalar> r;  // r x r, upper triangular with positive diagonal
};

/// Thin Householder QR with the sign convention diag(R) > 0. Throws
/// RankDeficientAggregate when a diagonal entry of R falls below `min_diag`.
template <typename Derived>
ThinQr<typename Derived::Scalar> thin_qr_positive(const Eigen::MatrixBase<Derived>& a,
                                                  typename Derived::Scalar min_diag = 1e-10) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index rows = a.rows();
  const Eigen::Index cols = a.cols();
  if (cols > rows) throw DimensionMismatch("thin QR needs rows >= cols");
  Eigen::HouseholderQR<Matrix<Scalar>> qr(a.derived());
  ThinQr<Scalar> out;
  out.q = qr.householderQ() * Matrix<Scalar>::Identity(rows, cols);
  out.r = qr.matrixQR().topRows(cols).template triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < cols; ++j) {
    if (out.r(j, j) < 0) {
      out.r.row(j) *= Scalar(-1);
      out.q.col(j) *= Scalar(-1);
    }
    if (!(out.r(j, j) >= min_diag))
      throw RankDeficientAggregate("R diagonal entry " + std::to_string(j) + " = " +
                                   std::to_string(static_cast<double>(out.r(j, j))) +
                                   " below threshold");
  }
  return out;
}

template <typename Scalar>
struct PrincipalAngles {
  Scalar frob_sq = 0;   // ||(I - B* B*^T) B||_F^2, in [0, r]
  Scalar spectral = 0;  // ||(I - B* B*^T) B||_2, in [0, 1]
};

/// Distance between col(B) and col(B*) through m = B*_perp^T B.
template <typename DerivedA, typename DerivedB>
PrincipalAngles<typename DerivedA::Scalar> principal_angle_distance(
    const Eigen::MatrixBase<DerivedA>& basis, const Eigen::MatrixBase<DerivedB>& truth) {
  using Scalar = typename DerivedA::Scalar;
  if (basis.rows() != truth.rows())
    throw DimensionMismatch("principal_angle_distance: ambient dimensions differ");
  const Matrix<Scalar> m = complement_project(truth, basis);
  PrincipalAngles<Scalar> out;
  out.frob_sq = m.squaredNorm();
  out.spectral = std::min<Scalar>(spectral_norm(m), Scalar(1));
  return out;
}

/// Largest eigenvalue of (M + M^T) / 2.
template <typename Derived>
typename Derived::Scalar symmetric_part_max_eigenvalue(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  const Matrix<Scalar> sym = (m + m.transpose()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

template <typename Scalar>
struct PositiveSpectrum {
  Scalar min_positive = 0;  // smallest eigenvalue above the cutoff, 0 if none
  Scalar max = 0;
  Eigen::Index rank = 0;
};

/// Smallest nonzero eigenvalue of a symmetric PSD matrix; eigenvalues at or
/// below `rel_cutoff * lambda_max` count as zero.
template <typename Derived>
PositiveSpectrum<typename Derived::Scalar> positive_spectrum(
    const Eigen::MatrixBase<Derived>& gram, typename Derived::Scalar rel_cutoff = 1e-9) {
  using Scalar = typename Derived::Scalar;
  PositiveSpectrum<Scalar> out;
  if (gram.size() == 0) return out;
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(gram.derived(), Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  out.max = ev.maxCoeff();
  if (!(out.max > 0)) return out;
  const Scalar cutoff = rel_cutoff * out.max;
  out.min_positive = out.max;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > cutoff) {
      ++out.rank;
      out.min_positive = std::min(out.min_positive, ev(i));
    }
  }
  return out;
}

}  // namespace pfedac
