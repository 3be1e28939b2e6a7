#pragma once

#include "cmds/error.hpp"
#include "cmds/model.hpp"
#include "cmds/solver.hpp"
#include "cmds/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace cmds {

namespace detail {

inline Matrix standard_normal(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  return m;
}

/// Symmetric eigendecomposition ordered by descending eigenvalue, each
/// eigenvector signed so that its first non-negligible entry is positive.
struct SortedEigen {
  Vector values;
  Matrix vectors;
};

inline SortedEigen sorted_eigen(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  const Index n = sym.rows();
  SortedEigen out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Index k = 0; k < n; ++k) {
    const Index src = n - 1 - k;
    out.values(k) = es.eigenvalues()(src);
    Vector v = es.eigenvectors().col(src);
    const double scale = v.cwiseAbs().maxCoeff();
    for (Index i = 0; i < n; ++i) {
      if (std::abs(v(i)) > 1e-8 * scale) {
        if (v(i) < 0.0) v = -v;
        break;
      }
    }
    out.vectors.col(k) = v;
  }
  return out;
}

/// Fills the incomplete rows of u0 (original order) with standard-normal draws.
inline void randomize_incomplete_rows(Matrix& u0, const Partition& part, std::mt19937_64& rng) {
  const Matrix draws = standard_normal(part.n2, u0.cols(), rng);
  for (Index k = 0; k < part.n2; ++k) u0.row(part.order[static_cast<std::size_t>(part.n1 + k)]) = draws.row(k);
}

}  // namespace detail

/// B0 = I; U0 and Ṽ2_0 standard normal.
inline InitState naive_init(const Problem& problem, const Partition& part, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  InitState st;
  st.strategy = InitStrategy::naive;
  st.seed = seed;
  st.u0 = detail::standard_normal(problem.n(), problem.p, rng);
  st.b0 = Matrix::Identity(problem.q(), problem.q());
  st.v2_tilde0 = detail::standard_normal(part.n2, problem.q(), rng);
  return st;
}

/// Result of the two-step closed-form fit on complete data.
struct ClosedFormFit {
  Matrix b;             // q x q
  Matrix u;             // N x p, centered
  Matrix whitening;     // R
  Vector beta;          // clamped regression slopes
  double intercept = 0.0;
  Vector eigenvalues;   // top p, before clamping
  bool all_clamped = false;
};

/// Closed-form conditional MDS on a complete problem (no missing conditioning).
///
/// Step 1 regresses δ² on [rₖᵀ(vᵢ − vⱼ)]² over observed pairs, where rₖ are
/// the columns of the PCA whitening matrix R, clamps negative slopes to 0 and
/// sets B = R·diag(√β). Step 2 double-centers A − VBBᵀVᵀ (a_ij = −δ²/2) and
/// keeps the top-p eigenpairs. Unobserved pairs (w = 0) enter A through the
/// regression fit.
inline ClosedFormFit closed_form_fit(const Problem& complete) {
  const Index n = complete.n();
  const Index q = complete.q();
  const Index p = complete.p;
  if (n < q + 2)
    throw Error(ErrorCode::DegenerateWhitening, "closed-form init needs at least q + 2 complete rows");
  const Matrix& v = complete.conditioning;

  const Matrix centered = v.rowwise() - v.colwise().mean();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(n - 1);
  const detail::SortedEigen cov_eig = detail::sorted_eigen(cov);
  const double top = cov_eig.values(0);
  if (!(top > 0.0) || !(cov_eig.values(q - 1) > kRankTolerance * top))
    throw Error(ErrorCode::DegenerateWhitening, "covariance of complete conditioning rows has rank < q");
  ClosedFormFit fit;
  fit.whitening = cov_eig.vectors * cov_eig.values.cwiseSqrt().cwiseInverse().asDiagonal();

  // projected coordinates: column k of V·R is rₖᵀvᵢ
  const Matrix proj = v * fit.whitening;
  std::vector<std::pair<Index, Index>> pairs;
  for (Index j = 0; j < n; ++j)
    for (Index i = j + 1; i < n; ++i)
      if (complete.weights(i, j) > 0.0) pairs.emplace_back(i, j);
  const Index m = static_cast<Index>(pairs.size());
  if (m < q + 1) throw Error(ErrorCode::DegenerateWhitening, "too few observed pairs for the regression");

  Matrix design(m, q + 1);
  Vector target(m);
  for (Index r = 0; r < m; ++r) {
    const auto [i, j] = pairs[static_cast<std::size_t>(r)];
    design(r, 0) = 1.0;
    design.row(r).tail(q) = (proj.row(i) - proj.row(j)).array().square();
    target(r) = complete.delta(i, j) * complete.delta(i, j);
  }
  Matrix normal = design.transpose() * design;
  normal.diagonal().array() += 1e-12 * normal.trace();
  const Vector coef = normal.ldlt().solve(design.transpose() * target);
  fit.intercept = coef(0);
  fit.beta = coef.tail(q).cwiseMax(0.0);
  fit.all_clamped = (fit.beta.array() == 0.0).all();
  fit.b = fit.whitening * fit.beta.cwiseSqrt().asDiagonal();

  const Matrix vt = v * fit.b;
  Matrix a(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) {
      if (i == j) {
        a(i, j) = 0.0;
      } else if (complete.weights(i, j) > 0.0) {
        a(i, j) = -0.5 * complete.delta(i, j) * complete.delta(i, j);
      } else {
        const double fitted = fit.intercept + (proj.row(i) - proj.row(j)).array().square().matrix().dot(fit.beta);
        a(i, j) = -0.5 * std::max(fitted, 0.0);
      }
    }
  Matrix k = a - vt * vt.transpose();
  // J·K·J
  k.rowwise() -= k.colwise().mean();
  k.colwise() -= k.rowwise().mean();
  k = 0.5 * (k + k.transpose());
  const detail::SortedEigen eig = detail::sorted_eigen(k);
  const Index keep = std::min(p, n);
  fit.eigenvalues = eig.values.head(keep);
  fit.u = Matrix::Zero(n, p);
  for (Index c = 0; c < keep; ++c)
    fit.u.col(c) = eig.vectors.col(c) * std::sqrt(std::max(eig.values(c), 0.0));
  return fit;
}

/// Closed-form fit on the complete rows; incomplete rows of U0 are standard
/// normal and Ṽ2_0 = 0.
inline InitState closed_form_init(const Problem& problem, const Partition& part, std::uint64_t seed) {
  const ClosedFormFit fit = closed_form_fit(restrict_to_complete(problem, part));
  std::mt19937_64 rng(seed);
  InitState st;
  st.strategy = InitStrategy::closed_form;
  st.seed = seed;
  st.b0 = fit.b;
  st.u0 = Matrix::Zero(problem.n(), problem.p);
  for (Index k = 0; k < part.n1; ++k) st.u0.row(part.order[static_cast<std::size_t>(k)]) = fit.u.row(k);
  detail::randomize_incomplete_rows(st.u0, part, rng);
  st.v2_tilde0 = Matrix::Zero(part.n2, problem.q());
  if (fit.all_clamped)
    st.warnings.push_back("AllCoefficientsClamped: every regression slope was negative; B0 = 0");
  return st;
}

/// Complete-data conditional SMACOF on the complete rows from a seeded naive
/// start. Returns the fitted solution on the complete sub-problem.
inline Solution complete_data_fit(const Problem& problem, const Partition& part, const SolverOptions& options) {
  if (part.n1 < 2) throw Error(ErrorCode::InvalidArgument, "complete-data fit needs N1 >= 2");
  const Problem sub = restrict_to_complete(problem, part);
  const InitState start = naive_init(sub, cmds::partition(sub), options.seed);
  return run_complete(sub, options, start);
}

/// Turns a complete-data fit into a start for the full problem: B0 and the
/// complete rows of U0 from the fit, incomplete rows of U0 standard normal,
/// Ṽ2_0 = 0.
inline InitState init_from_complete_fit(const Problem& problem, const Partition& part, const Solution& fit,
                                        std::uint64_t seed) {
  // distinct stream from the one naive_init consumed for the fit
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  InitState st;
  st.strategy = InitStrategy::complete_smacof;
  st.seed = seed;
  st.b0 = fit.b;
  st.u0 = Matrix::Zero(problem.n(), problem.p);
  for (Index k = 0; k < part.n1; ++k) st.u0.row(part.order[static_cast<std::size_t>(k)]) = fit.u.row(k);
  detail::randomize_incomplete_rows(st.u0, part, rng);
  st.v2_tilde0 = Matrix::Zero(part.n2, problem.q());
  return st;
}

inline InitState complete_smacof_init(const Problem& problem, const Partition& part, const SolverOptions& options) {
  return init_from_complete_fit(problem, part, complete_data_fit(problem, part, options), options.seed);
}

}  // namespace cmds
