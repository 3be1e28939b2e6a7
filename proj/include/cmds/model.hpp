#pragma once

#include "cmds/error.hpp"
#include "cmds/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace cmds {

/// Relative singular-value cutoff used for every rank decision.
inline constexpr double kRankTolerance = 1e-10;

/// Problem reordered complete-rows-first and split into blocks.
struct BlockedProblem {
  Matrix delta;    // N x N
  Matrix weights;  // N x N
  Matrix v1;       // N1 x q, complete rows
  Matrix v2;       // N2 x q, observed entries valid where !mask
  Mask mask;       // N2 x q
  Index n1 = 0;
  Index n2 = 0;
  Index p = 0;

  Index n() const { return n1 + n2; }
  Index q() const { return v1.cols(); }
};

namespace detail {

class UnionFind {
 public:
  explicit UnionFind(Index n) : parent_(static_cast<std::size_t>(n)) {
    std::iota(parent_.begin(), parent_.end(), Index{0});
  }
  Index find(Index x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(Index a, Index b) { parent_[find(a)] = find(b); }

 private:
  std::vector<Index> parent_;
};

inline bool row_has_missing(const Mask& m, Index i) { return m.cols() > 0 && m.row(i).any(); }

/// Rank of a symmetric PSD matrix at relative tolerance.
inline Index psd_rank(const Matrix& s, double rel_tol = kRankTolerance) {
  if (s.size() == 0) return 0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
  const Vector& ev = es.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  if (!(top > 0.0)) return 0;
  return (ev.array() > rel_tol * top).count();
}

}  // namespace detail

/// Number of connected components of the graph with edges where w_ij > 0.
inline Index weight_components(const Matrix& weights) {
  const Index n = weights.rows();
  detail::UnionFind uf(n);
  for (Index j = 0; j < n; ++j)
    for (Index i = j + 1; i < n; ++i)
      if (weights(i, j) > 0.0) uf.unite(i, j);
  Index count = 0;
  for (Index i = 0; i < n; ++i)
    if (uf.find(i) == i) ++count;
  return count;
}

/// Complete rows first (in original order), then incomplete rows.
inline Partition partition(const Problem& problem) {
  const Index n = problem.n();
  const Index q = problem.q();
  Partition part;
  part.order.reserve(static_cast<std::size_t>(n));
  std::vector<Index> incomplete;
  for (Index i = 0; i < n; ++i) {
    if (detail::row_has_missing(problem.conditioning_missing, i))
      incomplete.push_back(i);
    else
      part.order.push_back(i);
  }
  part.n1 = static_cast<Index>(part.order.size());
  part.n2 = static_cast<Index>(incomplete.size());
  part.order.insert(part.order.end(), incomplete.begin(), incomplete.end());
  part.mask.resize(part.n2, q);
  for (Index k = 0; k < part.n2; ++k)
    part.mask.row(k) = problem.conditioning_missing.row(incomplete[static_cast<std::size_t>(k)]);
  return part;
}

/// Rows of `m` (given in original order) rearranged into partition order.
inline Matrix permute_rows(const Matrix& m, const Partition& part) {
  Matrix out(m.rows(), m.cols());
  for (Index k = 0; k < m.rows(); ++k) out.row(k) = m.row(part.order[static_cast<std::size_t>(k)]);
  return out;
}

/// Inverse of permute_rows.
inline Matrix unpermute_rows(const Matrix& m, const Partition& part) {
  Matrix out(m.rows(), m.cols());
  for (Index k = 0; k < m.rows(); ++k) out.row(part.order[static_cast<std::size_t>(k)]) = m.row(k);
  return out;
}

inline Matrix permute_symmetric(const Matrix& m, const Partition& part) {
  const Index n = m.rows();
  Matrix out(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i)
      out(i, j) = m(part.order[static_cast<std::size_t>(i)], part.order[static_cast<std::size_t>(j)]);
  return out;
}

inline Matrix unpermute_symmetric(const Matrix& m, const Partition& part) {
  const Index n = m.rows();
  Matrix out(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i)
      out(part.order[static_cast<std::size_t>(i)], part.order[static_cast<std::size_t>(j)]) = m(i, j);
  return out;
}

inline BlockedProblem make_blocked(const Problem& problem, const Partition& part) {
  BlockedProblem bp;
  bp.n1 = part.n1;
  bp.n2 = part.n2;
  bp.p = problem.p;
  bp.delta = permute_symmetric(problem.delta, part);
  bp.weights = permute_symmetric(problem.weights, part);
  const Matrix v = permute_rows(problem.conditioning, part);
  bp.v1 = v.topRows(part.n1);
  bp.v2 = v.bottomRows(part.n2);
  bp.mask = part.mask;
  return bp;
}

/// The sub-problem on complete rows only, in their original relative order.
inline Problem restrict_to_complete(const Problem& problem, const Partition& part) {
  const Index n1 = part.n1;
  Problem sub;
  sub.p = problem.p;
  sub.delta.resize(n1, n1);
  sub.weights.resize(n1, n1);
  sub.conditioning.resize(n1, problem.q());
  sub.conditioning_missing = Mask::Constant(n1, problem.q(), false);
  for (Index a = 0; a < n1; ++a) {
    const Index ia = part.order[static_cast<std::size_t>(a)];
    sub.conditioning.row(a) = problem.conditioning.row(ia);
    for (Index b = 0; b < n1; ++b) {
      const Index ib = part.order[static_cast<std::size_t>(b)];
      sub.delta(a, b) = problem.delta(ia, ib);
      sub.weights(a, b) = problem.weights(ia, ib);
    }
  }
  return sub;
}

/// V1ᵀH11V1 for validated weights; shared by validation and the solvers.
inline Matrix conditioning_gram(const Matrix& weights, const Matrix& v1, Index n1) {
  const Index n = weights.rows();
  Matrix h11 = -weights.topLeftCorner(n1, n1);
  for (Index i = 0; i < n1; ++i) {
    double s = 0.0;
    for (Index j = 0; j < n; ++j)
      if (j != i) s += weights(i, j);
    h11(i, i) = s;
  }
  return v1.transpose() * h11 * v1;
}

/// Checks every Problem invariant and returns the normalized problem.
///
/// Asymmetric dissimilarities are symmetrized (average by default; `sum`
/// replaces both entries with δ_ij + δ_ji). Weights are averaged with their
/// transpose, the diagonal is zeroed and missing dissimilarities get w = 0.
inline Problem validate(Problem problem, Symmetrize mode = Symmetrize::average) {
  const Index n = problem.delta.rows();
  if (n < 2 || problem.delta.cols() != n)
    throw Error(ErrorCode::DimensionMismatch, "dissimilarity matrix must be square with N >= 2");
  if (problem.weights.rows() != n || problem.weights.cols() != n)
    throw Error(ErrorCode::DimensionMismatch, "weight matrix must be N x N");
  if (problem.conditioning.rows() != n)
    throw Error(ErrorCode::DimensionMismatch, "conditioning matrix must have N rows");
  if (problem.p < 1) throw Error(ErrorCode::DimensionMismatch, "p must be >= 1");
  if (problem.q() < 1) throw Error(ErrorCode::DimensionMismatch, "q must be >= 1");
  if (problem.conditioning_missing.size() == 0)
    problem.conditioning_missing = Mask::Constant(n, problem.q(), false);
  if (problem.conditioning_missing.rows() != n || problem.conditioning_missing.cols() != problem.q())
    throw Error(ErrorCode::DimensionMismatch, "conditioning mask must be N x q");
  if (problem.delta_missing.size() == 0) problem.delta_missing = Mask::Constant(n, n, false);
  if (problem.delta_missing.rows() != n || problem.delta_missing.cols() != n)
    throw Error(ErrorCode::DimensionMismatch, "dissimilarity mask must be N x N");

  // a pair is missing if either ordered entry is
  Mask dm = problem.delta_missing || problem.delta_missing.transpose();
  for (Index i = 0; i < n; ++i) dm(i, i) = false;

  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      if (i == j || dm(i, j)) continue;
      if (!std::isfinite(problem.delta(i, j)))
        throw Error(ErrorCode::InvalidArgument, "non-finite dissimilarity at (" + std::to_string(i) +
                                                    "," + std::to_string(j) + ")");
      if (problem.delta(i, j) < 0.0)
        throw Error(ErrorCode::NegativeDissimilarity, "negative dissimilarity at (" +
                                                          std::to_string(i) + "," + std::to_string(j) + ")");
      if (!std::isfinite(problem.weights(i, j)))
        throw Error(ErrorCode::InvalidArgument, "non-finite weight");
      if (problem.weights(i, j) < 0.0)
        throw Error(ErrorCode::NegativeWeight, "negative weight at (" + std::to_string(i) + "," +
                                                   std::to_string(j) + ")");
    }
  }

  Matrix delta(n, n);
  Matrix weights(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      if (i == j || dm(i, j)) {
        delta(i, j) = 0.0;
        weights(i, j) = 0.0;
        continue;
      }
      const double dij = problem.delta(i, j);
      const double dji = problem.delta(j, i);
      delta(i, j) = mode == Symmetrize::sum ? dij + dji : (dij + dji) / 2.0;
      weights(i, j) = (problem.weights(i, j) + problem.weights(j, i)) / 2.0;
    }
  }
  problem.delta = std::move(delta);
  problem.weights = std::move(weights);
  problem.delta_missing = dm;

  for (Index j = 0; j < problem.q(); ++j)
    for (Index i = 0; i < n; ++i) {
      if (problem.conditioning_missing(i, j))
        problem.conditioning(i, j) = std::numeric_limits<double>::quiet_NaN();
      else if (!std::isfinite(problem.conditioning(i, j)))
        throw Error(ErrorCode::InvalidArgument, "non-finite observed conditioning value");
    }

  if (weight_components(problem.weights) != 1)
    throw Error(ErrorCode::DisconnectedWeights,
                "positive-weight graph is not connected; split the problem into components");

  const Partition part = partition(problem);
  if (part.n1 == 0)
    throw Error(ErrorCode::RankDeficientConditioning, "no complete conditioning rows");
  const Matrix v1 = permute_rows(problem.conditioning, part).topRows(part.n1);
  const Matrix centered = v1.rowwise() - v1.colwise().mean();
  const Matrix bp_weights = permute_symmetric(problem.weights, part);
  if (detail::psd_rank(centered.transpose() * centered) < problem.q() ||
      detail::psd_rank(conditioning_gram(bp_weights, v1, part.n1)) < problem.q())
    throw Error(ErrorCode::RankDeficientConditioning,
                "complete conditioning rows do not span q independent difference directions");
  return problem;
}

/// Sammon weights w_ij = 1 / (δ_ij Σ_{k<l} δ_kl); pairs flagged missing get 0.
inline Matrix sammon_weights(const Matrix& delta, const Mask& delta_missing = {}) {
  const Index n = delta.rows();
  const bool has_mask = delta_missing.size() > 0;
  auto missing = [&](Index i, Index j) {
    return has_mask && (delta_missing(i, j) || delta_missing(j, i));
  };
  double total = 0.0;
  for (Index j = 0; j < n; ++j)
    for (Index i = j + 1; i < n; ++i) {
      if (missing(i, j)) continue;
      if (delta(i, j) == 0.0)
        throw Error(ErrorCode::ZeroDissimilarity,
                    "zero dissimilarity at (" + std::to_string(i) + "," + std::to_string(j) + ")");
      total += delta(i, j);
    }
  Matrix w = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i)
      if (i != j && !missing(i, j)) w(i, j) = 1.0 / (delta(i, j) * total);
  return w;
}

/// Common off-diagonal weight if all are equal and positive.
inline std::optional<double> common_weight(const Matrix& weights) {
  const Index n = weights.rows();
  if (n < 2) return std::nullopt;
  const double w0 = weights(1, 0);
  if (!(w0 > 0.0)) return std::nullopt;
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i)
      if (i != j && weights(i, j) != w0) return std::nullopt;
  return w0;
}

}  // namespace cmds
