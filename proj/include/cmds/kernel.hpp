#pragma once

#include "cmds/error.hpp"
#include "cmds/types.hpp"

#include <cmath>

namespace cmds {

/// H (weighted Laplacian), its pseudoinverse and its 2x2 block split at n1.
struct StressMatrices {
  Matrix h;
  Matrix h_pinv;
  Matrix h11, h12, h21, h22;
};

/// The SMACOF coefficient matrix C at a configuration, with its blocks.
struct CoefficientMatrix {
  Matrix c;
  Matrix c11, c12, c21, c22;
};

/// Ṽ = [V1·B; Ṽ2].
inline Matrix embed_conditioning(const Matrix& v1, const Matrix& b, const Matrix& v2_tilde) {
  Matrix out(v1.rows() + v2_tilde.rows(), b.cols());
  out.topRows(v1.rows()) = v1 * b;
  out.bottomRows(v2_tilde.rows()) = v2_tilde;
  return out;
}

inline double joint_distance(const Matrix& u, const Matrix& v_tilde, Index i, Index j) {
  return std::sqrt((u.row(i) - u.row(j)).squaredNorm() + (v_tilde.row(i) - v_tilde.row(j)).squaredNorm());
}

namespace detail {

/// [U Ṽ]ᵀ, so that per-object coordinates are contiguous columns.
inline Matrix joint_coordinates_t(const Matrix& u, const Matrix& v_tilde) {
  Matrix xt(u.cols() + v_tilde.cols(), u.rows());
  xt.topRows(u.cols()) = u.transpose();
  xt.bottomRows(v_tilde.cols()) = v_tilde.transpose();
  return xt;
}

inline void cut_blocks(const Matrix& m, Index n1, Matrix& m11, Matrix& m12, Matrix& m21, Matrix& m22) {
  const Index n2 = m.rows() - n1;
  m11 = m.topLeftCorner(n1, n1);
  m12 = m.topRightCorner(n1, n2);
  m21 = m.bottomLeftCorner(n2, n1);
  m22 = m.bottomRightCorner(n2, n2);
}

}  // namespace detail

/// Σ_{i<j} w_ij δ_ij²; the normalizing constant of the normalized stress.
inline double stress_denominator(const Matrix& delta, const Matrix& weights) {
  double total = 0.0;
  const Index n = delta.rows();
  for (Index j = 0; j < n; ++j)
    for (Index i = j + 1; i < n; ++i) total += weights(i, j) * delta(i, j) * delta(i, j);
  return total;
}

/// Σ_{i<j} w_ij (δ_ij − d_ij)² with d the joint distance of [U Ṽ].
inline double conditional_stress(const Matrix& delta, const Matrix& weights, const Matrix& u,
                                 const Matrix& v_tilde) {
  const Matrix xt = detail::joint_coordinates_t(u, v_tilde);
  const Index n = delta.rows();
  double total = 0.0;
  for (Index j = 0; j < n; ++j)
    for (Index i = j + 1; i < n; ++i) {
      const double w = weights(i, j);
      if (w == 0.0) continue;
      const double r = delta(i, j) - (xt.col(i) - xt.col(j)).norm();
      total += w * r * r;
    }
  return total;
}

inline double conditional_stress(const Problem& problem, const Matrix& u, const Matrix& v_tilde) {
  return conditional_stress(problem.delta, problem.weights, u, v_tilde);
}

inline double normalized_stress(const Matrix& delta, const Matrix& weights, const Matrix& u,
                                const Matrix& v_tilde) {
  const double denom = stress_denominator(delta, weights);
  if (!(denom > 0.0))
    throw Error(ErrorCode::DegenerateDissimilarities, "sum of w * delta^2 is zero");
  return conditional_stress(delta, weights, u, v_tilde) / denom;
}

inline double normalized_stress(const Problem& problem, const Matrix& u, const Matrix& v_tilde) {
  return normalized_stress(problem.delta, problem.weights, u, v_tilde);
}

/// h_ij = −w_ij, h_ii = Σ_j w_ij; H⁺ = (H + 1)⁻¹ − N⁻²·1.
inline StressMatrices build_h(const Matrix& weights, Index n1) {
  const Index n = weights.rows();
  StressMatrices sm;
  sm.h = -weights;
  for (Index i = 0; i < n; ++i) {
    sm.h(i, i) = 0.0;
    sm.h(i, i) = -sm.h.row(i).sum();
  }
  const Matrix shifted = sm.h.array() + 1.0;
  Eigen::PartialPivLU<Matrix> lu(shifted);
  if (!(lu.rcond() > 1e-14))
    throw Error(ErrorCode::SingularShiftedH, "H + 1 is not invertible; weight matrix is invalid");
  sm.h_pinv = lu.inverse();
  sm.h_pinv.array() -= 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  detail::cut_blocks(sm.h, n1, sm.h11, sm.h12, sm.h21, sm.h22);
  return sm;
}

/// C at [U Ṽ] (rows in the same order as delta). Returns the dense matrix;
/// writes Σ_{i<j} w(δ − d)² into `stress` when provided.
inline Matrix coefficient_matrix(const Matrix& delta, const Matrix& weights, const Matrix& u,
                                 const Matrix& v_tilde, double* stress = nullptr) {
  const Matrix xt = detail::joint_coordinates_t(u, v_tilde);
  const Index n = delta.rows();
  Matrix c = Matrix::Zero(n, n);
  double total = 0.0;
  for (Index j = 0; j < n; ++j) {
    for (Index i = j + 1; i < n; ++i) {
      const double w = weights(i, j);
      if (w == 0.0) continue;
      const double d = (xt.col(i) - xt.col(j)).norm();
      const double r = delta(i, j) - d;
      total += w * r * r;
      if (d != 0.0) {
        const double cij = -w * delta(i, j) / d;
        c(i, j) = cij;
        c(j, i) = cij;
      }
    }
  }
  for (Index i = 0; i < n; ++i) c(i, i) = -c.col(i).sum();
  if (stress) *stress = total;
  return c;
}

/// c_ij = −w_ij δ_ij / d_ij (0 when d_ij = 0), c_ii = −Σ_{j≠i} c_ij.
inline CoefficientMatrix build_c(const Matrix& delta, const Matrix& weights, const Matrix& u,
                                 const Matrix& v_tilde, Index n1) {
  CoefficientMatrix cm;
  cm.c = coefficient_matrix(delta, weights, u, v_tilde);
  detail::cut_blocks(cm.c, n1, cm.c11, cm.c12, cm.c21, cm.c22);
  return cm;
}

inline CoefficientMatrix build_c(const Problem& problem, const Matrix& u, const Matrix& v_tilde, Index n1) {
  return build_c(problem.delta, problem.weights, u, v_tilde, n1);
}

}  // namespace cmds
