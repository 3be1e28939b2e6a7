#pragma once

#include "cmds/error.hpp"
#include "cmds/kernel.hpp"
#include "cmds/model.hpp"
#include "cmds/solver.hpp"
#include "cmds/types.hpp"

#include <cmath>
#include <string>

namespace cmds {

/// Closed forms of the general-path quantities when every weight is 1.
/// `v1` is the complete block, `n` the total object count.
namespace closed_form {

inline Matrix h_pinv(Index n) {
  const double nd = static_cast<double>(n);
  Matrix m = Matrix::Constant(n, n, -1.0 / nd);
  m.diagonal().array() += 1.0;
  return m / nd;
}

inline Matrix h12_h22inv(Index n1, Index n2) {
  return Matrix::Constant(n1, n2, -1.0 / static_cast<double>(n1));
}

inline Vector column_sums(const Matrix& v1) { return v1.colwise().sum().transpose(); }

inline Matrix s(const Matrix& v1, Index n) {
  const Vector vs = column_sums(v1);
  return static_cast<double>(n) * (v1.transpose() * v1) - vs * vs.transpose();
}

/// (1/N)[I + A⁻¹v vᵀ / (m − vᵀA⁻¹v)]A⁻¹ with A = V1ᵀV1; m = N gives S⁻¹,
/// m = N1 gives K_b⁻¹.
inline Matrix rank_one_inverse(const Matrix& vtv_inv, const Vector& vs, Index n, double m) {
  const Index q = vtv_inv.rows();
  const Vector a_inv_v = vtv_inv * vs;
  const double denom = m - vs.dot(a_inv_v);
  if (!(std::abs(denom) > 1e-12 * m))
    throw Error(ErrorCode::IllConditioned, "rank-one update denominator vanished");
  const Matrix inner = Matrix::Identity(q, q) + (a_inv_v * vs.transpose()) / denom;
  return (inner * vtv_inv) / static_cast<double>(n);
}

inline Matrix vtv_inverse(const Matrix& v1) {
  const Matrix vtv = v1.transpose() * v1;
  Eigen::PartialPivLU<Matrix> lu(vtv);
  detail::require_rcond(lu.rcond(), "V1'V1");
  return lu.inverse();
}

inline Matrix s_inv(const Matrix& v1, Index n) {
  return rank_one_inverse(vtv_inverse(v1), column_sums(v1), n, static_cast<double>(n));
}

inline Matrix kb(const Matrix& v1, Index n) {
  const Vector vs = column_sums(v1);
  const double nd = static_cast<double>(n);
  return nd * (v1.transpose() * v1) - (nd / static_cast<double>(v1.rows())) * (vs * vs.transpose());
}

inline Matrix kb_inv(const Matrix& v1, Index n) {
  return rank_one_inverse(vtv_inverse(v1), column_sums(v1), n, static_cast<double>(v1.rows()));
}

/// G·V1ᵀ: every row equals −[v1ˢ]ᵀS⁻¹V1ᵀ.
inline Matrix g_v1t(const Matrix& v1, Index n, Index n2) {
  const RowVector r = column_sums(v1).transpose() * s_inv(v1, n) * v1.transpose();
  return -Matrix::Ones(n2, 1) * r;
}

inline double g(const Matrix& v1, Index n) {
  const Vector vs = column_sums(v1);
  return 1.0 + vs.dot(s_inv(v1, n) * vs);
}

inline Matrix kv2(double g_value, Index n, Index n2) {
  Matrix m = Matrix::Constant(n2, n2, -g_value);
  m.diagonal().array() += static_cast<double>(n);
  return m;
}

inline Matrix kv2_inv(double g_value, Index n, Index n2) {
  const double nd = static_cast<double>(n);
  Matrix m = Matrix::Constant(n2, n2, g_value / (nd - g_value * static_cast<double>(n2)));
  m.diagonal().array() += 1.0;
  return m / nd;
}

}  // namespace closed_form

struct EqualWeightCache {
  Vector v1s;            // column sums of V1
  Matrix s_inv;          // q x q
  Matrix kb_inv_v1t;     // q x N1
  RowVector v1s_sinv_v1t;  // [v1ˢ]ᵀS⁻¹V1ᵀ, length N1
  double g = 1.0;
  Index n = 0;
  Index n1 = 0;
  Index n2 = 0;
};

/// Builds the equal-weight cache with a single q x q inversion (V1ᵀV1).
inline EqualWeightCache equal_weight_factors(const Matrix& v1, Index n, Index n2) {
  EqualWeightCache cache;
  cache.n = n;
  cache.n1 = v1.rows();
  cache.n2 = n2;
  if (cache.n1 + n2 != n) throw Error(ErrorCode::DimensionMismatch, "N1 + N2 != N");
  const Matrix vtv_inv = closed_form::vtv_inverse(v1);
  cache.v1s = closed_form::column_sums(v1);
  const double nd = static_cast<double>(n);
  cache.s_inv = closed_form::rank_one_inverse(vtv_inv, cache.v1s, n, nd);
  const Matrix kb_inv =
      closed_form::rank_one_inverse(vtv_inv, cache.v1s, n, static_cast<double>(cache.n1));
  cache.kb_inv_v1t = kb_inv * v1.transpose();
  const RowVector vs_sinv = cache.v1s.transpose() * cache.s_inv;
  cache.v1s_sinv_v1t = vs_sinv * v1.transpose();
  cache.g = 1.0 + vs_sinv.dot(cache.v1s);
  if (!(std::abs(nd - cache.g * static_cast<double>(n2)) >= 1e-12 * nd))
    throw Error(ErrorCode::DegenerateG, "N - g*N2 vanished (g = " + std::to_string(cache.g) + ")");
  return cache;
}

/// U = U_a − (1/N)·1·[u_aˢ]ᵀ with U_a = C·U/N.
inline Matrix update_u_equal(const Matrix& c, const Matrix& u_prev, Index n) {
  const double nd = static_cast<double>(n);
  Matrix ua = (c * u_prev) / nd;
  const RowVector mean = ua.colwise().sum() / nd;
  ua.rowwise() -= mean;
  return ua;
}

/// K_b⁻¹V1ᵀ[(C11 + 1[c21ˢ]ᵀ/N1)V1B + (C12 + 1[c22ˢ]ᵀ/N1)Ṽ2].
inline Matrix update_b_equal(const EqualWeightCache& cache, const Matrix& c, const Matrix& v1,
                             const Matrix& b_prev, const Matrix& v2_tilde_prev) {
  const Index n1 = cache.n1, n2 = cache.n2;
  const Matrix vb = v1 * b_prev;
  Matrix y1 = c.topLeftCorner(n1, n1) * vb + c.topRightCorner(n1, n2) * v2_tilde_prev;
  const RowVector c21s = c.bottomLeftCorner(n2, n1).colwise().sum();
  const RowVector c22s = c.bottomRightCorner(n2, n2).colwise().sum();
  const RowVector shift = (c21s * vb + c22s * v2_tilde_prev) / static_cast<double>(n1);
  y1.rowwise() += shift;
  return cache.kb_inv_v1t * y1;
}

/// Ṽ2 = K_ṽ2⁻¹Ṽ2,a = (1/N)Ṽ2,a + g/(N(N − gN2))·1·[ṽ2,aˢ]ᵀ.
inline Matrix update_v2_equal(const EqualWeightCache& cache, const Matrix& c, const Matrix& v1,
                              const Matrix& b_prev, const Matrix& v2_tilde_prev) {
  const Index n1 = cache.n1, n2 = cache.n2;
  const double nd = static_cast<double>(cache.n);
  const Matrix vb = v1 * b_prev;
  const Matrix y1 = c.topLeftCorner(n1, n1) * vb + c.topRightCorner(n1, n2) * v2_tilde_prev;
  Matrix va = c.bottomLeftCorner(n2, n1) * vb + c.bottomRightCorner(n2, n2) * v2_tilde_prev;
  va.rowwise() += cache.v1s_sinv_v1t * y1;
  const double factor = cache.g / (nd * (nd - cache.g * static_cast<double>(n2)));
  const RowVector correction = factor * va.colwise().sum();
  va /= nd;
  va.rowwise() += correction;
  return va;
}

/// Equal-weight solver. V1 is centered internally; B is unaffected and Ṽ2 is
/// shifted back by the centering offset before it is reported or observed.
inline Solution run_equal(const Problem& problem, const Partition& part, const SolverOptions& options,
                          const InitState& init, const IterationObserver& observer = {}) {
  const auto w = common_weight(problem.weights);
  if (!w) throw Error(ErrorCode::InvalidArgument, "run_equal requires equal positive weights");
  if (part.n2 < 1) throw Error(ErrorCode::InvalidArgument, "run_equal requires N2 >= 1");
  detail::check_init_shape(init, problem.n(), problem.p, problem.q(), part.n2);

  BlockedProblem bp = make_blocked(problem, part);
  bp.weights /= *w;
  bp.weights.diagonal().setZero();
  const RowVector offset = bp.v1.colwise().mean();
  const Matrix v1c = bp.v1.rowwise() - offset;
  const EqualWeightCache cache = equal_weight_factors(v1c, bp.n(), bp.n2);

  auto shifted = [&](const Matrix& v2, const Matrix& b, double sign) {
    Matrix out = v2;
    out.rowwise() += sign * (offset * b);
    return out;
  };

  auto step = [&](const Matrix& c, const detail::LoopState& s) {
    detail::LoopState next;
    next.u = update_u_equal(c, s.u, cache.n);
    next.b = update_b_equal(cache, c, v1c, s.b, s.v2);
    next.v2 = update_v2_equal(cache, c, v1c, s.b, s.v2);
    return next;
  };
  IterationObserver inner;
  if (observer) {
    inner = [&](const Iterate& it) {
      const Matrix v2 = shifted(it.v2_tilde, it.b, 1.0);
      observer(Iterate{it.l, it.u, it.b, v2, it.stress});
    };
  }
  detail::LoopState start{permute_rows(init.u0, part), init.b0, shifted(init.v2_tilde0, init.b0, -1.0)};
  detail::LoopResult r = detail::majorize(bp.delta, bp.weights, v1c, std::move(start), options, step, inner);

  Solution sol;
  sol.u = unpermute_rows(r.state.u, part);
  sol.v2_tilde = shifted(r.state.v2, r.state.b, 1.0);
  sol.b = std::move(r.state.b);
  sol.stress_trace = std::move(r.trace);
  sol.iterations = r.iterations;
  sol.converged = r.converged;
  sol.path = SolverPath::equal_weights;
  sol.seed = init.seed;
  return sol;
}

}  // namespace cmds
