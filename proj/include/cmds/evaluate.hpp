#pragma once

#include "cmds/error.hpp"
#include "cmds/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cmds {

struct ImputedConditioning {
  Matrix v2_hat;        // N2 x q
  Mask preserved_mask;  // true where the entry was observed and copied verbatim
};

/// Missing-value imputation from the embedded block:
/// V̂2 = V2∘(1−M) + [(Ṽ2 − (V2∘(1−M))B)∘M]B⁻¹, restricted to the missing
/// entries so that observed values come back bit-exact.
inline ImputedConditioning impute(const Matrix& v2_observed, const Mask& mask, const Matrix& v2_tilde,
                                  const Matrix& b) {
  const Index n2 = v2_observed.rows(), q = v2_observed.cols();
  if (mask.rows() != n2 || mask.cols() != q || v2_tilde.rows() != n2 || v2_tilde.cols() != q ||
      b.rows() != q || b.cols() != q)
    throw Error(ErrorCode::DimensionMismatch, "impute: inconsistent dimensions");
  // X·B = R  <=>  Bᵀ·Xᵀ = Rᵀ
  Eigen::PartialPivLU<Matrix> lu(b.transpose());
  if (!(lu.rcond() >= 1e-12)) throw Error(ErrorCode::SingularB, "B is not invertible; cannot impute");

  const Matrix observed = mask.select(Matrix::Zero(n2, q), v2_observed);
  const Matrix residual = mask.select(v2_tilde - observed * b, Matrix::Zero(n2, q));
  const Matrix correction = lu.solve(residual.transpose()).transpose();

  ImputedConditioning out;
  out.v2_hat = mask.select(observed + correction, v2_observed);
  out.preserved_mask = !mask;
  return out;
}

namespace detail {

inline Matrix centered(const Matrix& x) { return x.rowwise() - x.colwise().mean(); }

/// Orthonormal basis of the column space of a centered matrix; throws if rank-deficient.
inline Matrix orthonormal_basis(const Matrix& x) {
  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < x.cols()) throw Error(ErrorCode::RankDeficientInput, "configuration is rank-deficient");
  return qr.householderQ() * Matrix::Identity(x.rows(), x.cols());
}

}  // namespace detail

/// Canonical correlations between the column spaces of two configurations
/// (both centered), largest first.
inline Vector canonical_correlations(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows()) throw Error(ErrorCode::DimensionMismatch, "acc: row counts differ");
  if (x.rows() <= x.cols() + y.cols())
    throw Error(ErrorCode::RankDeficientInput, "acc: need N > p + p_true");
  const Matrix qx = detail::orthonormal_basis(detail::centered(x));
  const Matrix qy = detail::orthonormal_basis(detail::centered(y));
  Eigen::JacobiSVD<Matrix> svd(qx.transpose() * qy);
  return svd.singularValues().cwiseMin(1.0).cwiseMax(0.0);
}

/// Average canonical correlation over the min(p, p_true) pairs.
inline double acc(const Matrix& u_learned, const Matrix& u_true) {
  return canonical_correlations(u_learned, u_true).mean();
}

/// 1 − (Σσᵢ)² / (tr(XᵀX)·tr(YᵀY)) after centering, σᵢ the singular values of XᵀY.
inline double procrustes_statistic(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols())
    throw Error(ErrorCode::DimensionMismatch, "procrustes: shapes differ");
  const Matrix xc = detail::centered(x), yc = detail::centered(y);
  const double tx = xc.squaredNorm(), ty = yc.squaredNorm();
  if (!(tx > 0.0) || !(ty > 0.0))
    throw Error(ErrorCode::DegenerateConfiguration, "configuration collapses to a point after centering");
  Eigen::JacobiSVD<Matrix> svd(xc.transpose() * yc);
  const double s = svd.singularValues().sum();
  return std::clamp(1.0 - s * s / (tx * ty), 0.0, 1.0);
}

/// Orthogonal Q minimizing ‖A·Q − B‖_F.
inline Matrix procrustes_rotation(const Matrix& a, const Matrix& b) {
  Eigen::JacobiSVD<Matrix> svd(a.transpose() * b, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

/// (1/q²)·min_Q ‖B_learned·Q − B_true‖², Q orthogonal. Distances depend on B
/// only through B·Bᵀ, so B is identified up to right orthogonal factors.
inline double mse_b(const Matrix& b_learned, const Matrix& b_true) {
  if (b_learned.rows() != b_true.rows() || b_learned.cols() != b_true.cols())
    throw Error(ErrorCode::DimensionMismatch, "mse_b: shapes differ");
  const Matrix q = procrustes_rotation(b_learned, b_true);
  return (b_learned * q - b_true).squaredNorm() / static_cast<double>(b_true.size());
}

inline double mse_v(const Matrix& v2_hat, const Matrix& v2_true) {
  if (v2_hat.rows() != v2_true.rows() || v2_hat.cols() != v2_true.cols())
    throw Error(ErrorCode::DimensionMismatch, "mse_v: shapes differ");
  if (v2_true.size() == 0) return 0.0;
  return (v2_hat - v2_true).squaredNorm() / static_cast<double>(v2_true.size());
}

struct ReplicateReport {
  double acc = std::numeric_limits<double>::quiet_NaN();
  double ps = std::numeric_limits<double>::quiet_NaN();
  double mse_b = std::numeric_limits<double>::quiet_NaN();
  double mse_v = std::numeric_limits<double>::quiet_NaN();  // NaN when not applicable
};

}  // namespace cmds
