#pragma once

#include "cmds/error.hpp"
#include "cmds/kernel.hpp"
#include "cmds/model.hpp"
#include "cmds/types.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace cmds {

/// Reciprocal-condition floor for the matrices inverted by the solvers.
inline constexpr double kMinRcond = 1e-12;

/// Factors reused by every iteration of the general (arbitrary-weight) path.
struct FactorCache {
  Matrix h_pinv;       // N x N
  Matrix h12_h22inv;   // N1 x N2
  Matrix kb_inv_v1t;   // q x N1
  Matrix g_v1t;        // N2 x N1
  Matrix kv2_inv;      // N2 x N2
  Matrix s;            // q x q
  Index n1 = 0;
  Index n2 = 0;
  // reciprocal condition estimates
  double rcond_s = 0.0;
  double rcond_kb = 0.0;
  double rcond_kv2 = 0.0;
};

namespace detail {

inline void require_rcond(double rcond, const char* what) {
  if (!(rcond >= kMinRcond))
    throw Error(ErrorCode::IllConditioned,
                std::string(what) + " is numerically singular (rcond " + std::to_string(rcond) + ")");
}

}  // namespace detail

/// Step 1(b) of the general path: H⁺, H12·H22⁻¹, K_b⁻¹V1ᵀ, G·V1ᵀ and K_ṽ2⁻¹.
inline FactorCache precompute(const BlockedProblem& bp, const StressMatrices& sm) {
  if (bp.n2 < 1) throw Error(ErrorCode::InvalidArgument, "precompute requires N2 >= 1");
  FactorCache fc;
  fc.n1 = bp.n1;
  fc.n2 = bp.n2;
  fc.h_pinv = sm.h_pinv;

  Eigen::LLT<Matrix> h22(sm.h22);
  if (h22.info() != Eigen::Success)
    throw Error(ErrorCode::IllConditioned, "H22 is not positive definite");
  detail::require_rcond(h22.rcond(), "H22");
  fc.h12_h22inv = h22.solve(sm.h21).transpose();

  const Matrix& v1 = bp.v1;
  fc.s = v1.transpose() * sm.h11 * v1;
  Eigen::PartialPivLU<Matrix> s_lu(fc.s);
  fc.rcond_s = s_lu.rcond();
  detail::require_rcond(fc.rcond_s, "S = V1'H11V1");

  const Matrix h21_v1 = sm.h21 * v1;  // N2 x q
  const Matrix g = s_lu.solve(h21_v1.transpose()).transpose();  // S symmetric
  fc.g_v1t = g * v1.transpose();

  const Matrix kb = fc.s - v1.transpose() * (fc.h12_h22inv * h21_v1);
  Eigen::PartialPivLU<Matrix> kb_lu(kb);
  fc.rcond_kb = kb_lu.rcond();
  detail::require_rcond(fc.rcond_kb, "K_b");
  fc.kb_inv_v1t = kb_lu.solve(v1.transpose());

  const Matrix kv2 = sm.h22 - fc.g_v1t * sm.h12;
  Eigen::PartialPivLU<Matrix> kv2_lu(kv2);
  fc.rcond_kv2 = kv2_lu.rcond();
  detail::require_rcond(fc.rcond_kv2, "K_v2");
  fc.kv2_inv = kv2_lu.solve(Matrix::Identity(bp.n2, bp.n2));
  return fc;
}

/// Guttman transform H⁺·C·U.
inline Matrix update_u(const FactorCache& cache, const Matrix& c, const Matrix& u_prev) {
  return cache.h_pinv * (c * u_prev);
}

/// K_b⁻¹V1ᵀ[(C11 − H12H22⁻¹C21)V1B + (C12 − H12H22⁻¹C22)Ṽ2].
inline Matrix update_b(const FactorCache& cache, const Matrix& c, const Matrix& v1, const Matrix& b_prev,
                       const Matrix& v2_tilde_prev) {
  const Index n1 = cache.n1, n2 = cache.n2;
  const Matrix vb = v1 * b_prev;
  const Matrix y1 = c.topLeftCorner(n1, n1) * vb + c.topRightCorner(n1, n2) * v2_tilde_prev;
  const Matrix y2 = c.bottomLeftCorner(n2, n1) * vb + c.bottomRightCorner(n2, n2) * v2_tilde_prev;
  return cache.kb_inv_v1t * (y1 - cache.h12_h22inv * y2);
}

/// K_ṽ2⁻¹[(C21 − GV1ᵀC11)V1B + (C22 − GV1ᵀC12)Ṽ2].
inline Matrix update_v2(const FactorCache& cache, const Matrix& c, const Matrix& v1, const Matrix& b_prev,
                        const Matrix& v2_tilde_prev) {
  const Index n1 = cache.n1, n2 = cache.n2;
  const Matrix vb = v1 * b_prev;
  const Matrix y1 = c.topLeftCorner(n1, n1) * vb + c.topRightCorner(n1, n2) * v2_tilde_prev;
  const Matrix y2 = c.bottomLeftCorner(n2, n1) * vb + c.bottomRightCorner(n2, n2) * v2_tilde_prev;
  return cache.kv2_inv * (y2 - cache.g_v1t * y1);
}

namespace detail {

struct LoopState {
  Matrix u;   // internal row order
  Matrix b;
  Matrix v2;  // N2 x q (empty for complete data)
};

struct LoopResult {
  LoopState state;
  std::vector<double> trace;
  int iterations = 0;
  bool converged = false;
};

/// The shared majorization loop. `step(c, state)` returns the next iterate
/// given C built at `state`; v1 are the complete rows of the internal order.
template <typename Step>
LoopResult majorize(const Matrix& delta, const Matrix& weights, const Matrix& v1, LoopState state,
                    const SolverOptions& options, Step&& step, const IterationObserver& observer) {
  if (options.gamma < 0.0) throw Error(ErrorCode::InvalidArgument, "gamma must be >= 0");
  if (options.l_max < 1) throw Error(ErrorCode::InvalidArgument, "l_max must be >= 1");
  const double denom = stress_denominator(delta, weights);
  if (!(denom > 0.0))
    throw Error(ErrorCode::DegenerateDissimilarities, "sum of w * delta^2 is zero");

  auto coefficients = [&](const LoopState& s, double& sigma_n) {
    double raw = 0.0;
    Matrix c = coefficient_matrix(delta, weights, s.u, embed_conditioning(v1, s.b, s.v2), &raw);
    sigma_n = raw / denom;
    return c;
  };

  LoopResult result;
  double current = 0.0;
  Matrix c = coefficients(state, current);
  result.trace.push_back(current);
  if (observer) observer(Iterate{0, state.u, state.b, state.v2, current});

  const double slack = 1e-10 * current + 1e-14;
  double previous = std::numeric_limits<double>::infinity();
  int l = 0;
  while (l < options.l_max && previous - current > options.gamma) {
    ++l;
    state = step(c, state);
    double next = 0.0;
    c = coefficients(state, next);
    if (!std::isfinite(next))
      throw Error(ErrorCode::IllConditioned, "stress became non-finite at iteration " + std::to_string(l));
    if (next > current + slack)
      throw Error(ErrorCode::NonMonotoneStress, "stress rose from " + std::to_string(current) + " to " +
                                                    std::to_string(next) + " at iteration " + std::to_string(l));
    previous = current;
    current = next;
    result.trace.push_back(current);
    if (observer) observer(Iterate{l, state.u, state.b, state.v2, current});
  }
  result.iterations = l;
  result.converged = !(previous - current > options.gamma);
  result.state = std::move(state);
  return result;
}

inline void check_init_shape(const InitState& init, Index n, Index p, Index q, Index n2) {
  if (init.u0.rows() != n || init.u0.cols() != p || init.b0.rows() != q || init.b0.cols() != q ||
      init.v2_tilde0.rows() != n2 || (n2 > 0 && init.v2_tilde0.cols() != q))
    throw Error(ErrorCode::DimensionMismatch, "initial state does not match the problem dimensions");
}

}  // namespace detail

/// Complete-data conditional SMACOF: U ← H⁺CU, B ← (VᵀHV)⁻¹VᵀCVB.
/// `problem` must have no missing conditioning values.
inline Solution run_complete(const Problem& problem, const SolverOptions& options, const InitState& init,
                             const IterationObserver& observer = {}) {
  if (problem.conditioning_missing.size() > 0 && problem.conditioning_missing.any())
    throw Error(ErrorCode::InvalidArgument, "run_complete needs complete conditioning data");
  const Index n = problem.n();
  detail::check_init_shape(init, n, problem.p, problem.q(), 0);
  const Matrix& v = problem.conditioning;

  const StressMatrices sm = build_h(problem.weights, n);
  const Matrix vhv = v.transpose() * sm.h * v;
  Eigen::PartialPivLU<Matrix> lu(vhv);
  detail::require_rcond(lu.rcond(), "V'HV");
  const Matrix vhv_inv_vt = lu.solve(v.transpose());

  auto step = [&](const Matrix& c, const detail::LoopState& s) {
    detail::LoopState next;
    next.u = sm.h_pinv * (c * s.u);
    next.b = vhv_inv_vt * (c * (v * s.b));
    next.v2 = s.v2;
    return next;
  };
  detail::LoopState start{init.u0, init.b0, Matrix(0, problem.q())};
  detail::LoopResult r =
      detail::majorize(problem.delta, problem.weights, v, std::move(start), options, step, observer);

  Solution sol;
  sol.u = std::move(r.state.u);
  sol.b = std::move(r.state.b);
  sol.v2_tilde = Matrix(0, problem.q());
  sol.stress_trace = std::move(r.trace);
  sol.iterations = r.iterations;
  sol.converged = r.converged;
  sol.path = SolverPath::complete;
  sol.seed = init.seed;
  return sol;
}

/// Arbitrary-weight missing-data solver. Delegates to run_complete when N2 = 0.
/// The observer sees iterates in complete-first order.
inline Solution run_missing(const Problem& problem, const Partition& part, const SolverOptions& options,
                            const InitState& init, const IterationObserver& observer = {}) {
  if (part.n2 == 0) return run_complete(problem, options, init, observer);
  detail::check_init_shape(init, problem.n(), problem.p, problem.q(), part.n2);

  const BlockedProblem bp = make_blocked(problem, part);
  const StressMatrices sm = build_h(bp.weights, bp.n1);
  const FactorCache cache = precompute(bp, sm);

  auto step = [&](const Matrix& c, const detail::LoopState& s) {
    detail::LoopState next;
    next.u = update_u(cache, c, s.u);
    next.b = update_b(cache, c, bp.v1, s.b, s.v2);
    next.v2 = update_v2(cache, c, bp.v1, s.b, s.v2);
    return next;
  };
  detail::LoopState start{permute_rows(init.u0, part), init.b0, init.v2_tilde0};
  detail::LoopResult r =
      detail::majorize(bp.delta, bp.weights, bp.v1, std::move(start), options, step, observer);

  Solution sol;
  sol.u = unpermute_rows(r.state.u, part);
  sol.b = std::move(r.state.b);
  sol.v2_tilde = std::move(r.state.v2);
  sol.stress_trace = std::move(r.trace);
  sol.iterations = r.iterations;
  sol.converged = r.converged;
  sol.path = SolverPath::general;
  sol.seed = init.seed;
  return sol;
}

}  // namespace cmds
