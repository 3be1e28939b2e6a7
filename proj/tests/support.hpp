#pragma once

#include "cmds/cmds.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace testing_support {

using cmds::Index;
using cmds::Mask;
using cmds::Matrix;
using cmds::Problem;
using cmds::Vector;

struct RandomSpec {
  Index n = 12;
  Index q = 2;
  Index p = 2;
  Index n2 = 3;            // rows with at least one missing value
  bool equal_weights = false;
  bool full_rows_missing = false;
};

/// Random problem: δ from a planted configuration plus noise, rows n - n2 ..
/// n - 1 carry missing conditioning entries (interleaved by a shuffle).
inline Problem random_problem(const RandomSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Index n = spec.n, q = spec.q;

  Matrix x(n, spec.p + q);
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < x.cols(); ++j) x(i, j) = normal(rng);
  Problem pr;
  pr.p = spec.p;
  pr.delta = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = j + 1; i < n; ++i) {
      const double d = (x.row(i) - x.row(j)).norm() * (1.0 + 0.1 * normal(rng));
      pr.delta(i, j) = pr.delta(j, i) = std::abs(d) + 0.05;
    }
  pr.weights = Matrix::Ones(n, n);
  if (!spec.equal_weights) {
    for (Index j = 0; j < n; ++j)
      for (Index i = j + 1; i < n; ++i) pr.weights(i, j) = pr.weights(j, i) = 0.2 + 1.8 * unif(rng);
  }
  pr.weights.diagonal().setZero();

  pr.conditioning = x.rightCols(q);
  pr.conditioning_missing = Mask::Constant(n, q, false);
  std::vector<Index> rows(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
  std::shuffle(rows.begin(), rows.end(), rng);
  for (Index k = 0; k < spec.n2; ++k) {
    const Index r = rows[static_cast<std::size_t>(k)];
    if (spec.full_rows_missing || q == 1) {
      pr.conditioning_missing.row(r).setConstant(true);
    } else {
      std::uniform_int_distribution<Index> pick(0, q - 1);
      pr.conditioning_missing(r, pick(rng)) = true;
      if (unif(rng) < 0.3) pr.conditioning_missing.row(r).setConstant(true);
    }
  }
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < q; ++j)
      if (pr.conditioning_missing(i, j)) pr.conditioning(i, j) = std::numeric_limits<double>::quiet_NaN();
  return pr;
}

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

inline double rel_diff(const Matrix& a, const Matrix& b) {
  const double scale = std::max({a.norm(), b.norm(), 1.0});
  return (a - b).norm() / scale;
}

/// Moore-Penrose inverse of a symmetric matrix by eigendecomposition with a
/// relative cutoff of 1e-12.
inline Matrix spectral_pinv(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  const Vector& ev = es.eigenvalues();
  const double cutoff = 1e-12 * ev.cwiseAbs().maxCoeff();
  Vector inv(ev.size());
  for (Index k = 0; k < ev.size(); ++k) inv(k) = std::abs(ev(k)) > cutoff ? 1.0 / ev(k) : 0.0;
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

/// Stress by explicit loop over ordered pairs (halved), rebuilding Ṽ from blocks.
inline double loop_stress(const Matrix& delta, const Matrix& w, const Matrix& u, const Matrix& v1,
                          const Matrix& b, const Matrix& v2t) {
  const Index n = delta.rows();
  Matrix vt(n, b.cols());
  vt.topRows(v1.rows()) = v1 * b;
  vt.bottomRows(v2t.rows()) = v2t;
  double total = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      double d2 = 0.0;
      for (Index k = 0; k < u.cols(); ++k) d2 += (u(i, k) - u(j, k)) * (u(i, k) - u(j, k));
      for (Index k = 0; k < vt.cols(); ++k) d2 += (vt(i, k) - vt(j, k)) * (vt(i, k) - vt(j, k));
      const double r = delta(i, j) - std::sqrt(d2);
      total += 0.5 * w(i, j) * r * r;
    }
  return total;
}

}  // namespace testing_support
