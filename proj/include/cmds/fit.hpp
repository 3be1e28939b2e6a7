#pragma once

#include "cmds/error.hpp"
#include "cmds/evaluate.hpp"
#include "cmds/fastpath.hpp"
#include "cmds/init.hpp"
#include "cmds/model.hpp"
#include "cmds/solver.hpp"
#include "cmds/types.hpp"

#include <exception>
#include <optional>
#include <string>
#include <vector>

namespace cmds {

inline InitState make_init(const Problem& problem, const Partition& part, const SolverOptions& options) {
  switch (options.init) {
    case InitStrategy::naive: return naive_init(problem, part, options.seed);
    case InitStrategy::closed_form: return closed_form_init(problem, part, options.seed);
    case InitStrategy::complete_smacof: return complete_smacof_init(problem, part, options);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown init strategy");
}

/// Which iteration a validated problem runs: complete data, the equal-weight
/// fast path, or the general path.
inline SolverPath select_path(const Problem& problem, const Partition& part, const SolverOptions& options) {
  if (part.n2 == 0) return SolverPath::complete;
  if (!options.force_general_path && common_weight(problem.weights)) return SolverPath::equal_weights;
  return SolverPath::general;
}

/// One initialization plus one solver run at `options.seed`.
inline Solution run_single(const Problem& problem, const Partition& part, const SolverOptions& options,
                           const IterationObserver& observer = {}) {
  const InitState init = make_init(problem, part, options);
  switch (select_path(problem, part, options)) {
    case SolverPath::complete: return run_complete(problem, options, init, observer);
    case SolverPath::equal_weights: return run_equal(problem, part, options, init, observer);
    case SolverPath::general: return run_missing(problem, part, options, init, observer);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown solver path");
}

/// Runs `options.restarts` seeds (seed, seed+1, ...) and keeps the lowest
/// final normalized stress; ties go to the lowest restart index. Errors are
/// rethrown only if every restart failed.
inline Solution run_multistart(const Problem& problem, const Partition& part, const SolverOptions& options) {
  if (options.restarts < 1) throw Error(ErrorCode::InvalidArgument, "restarts must be >= 1");
  std::optional<Solution> best;
  std::exception_ptr first_error;
  for (int r = 0; r < options.restarts; ++r) {
    SolverOptions run = options;
    run.seed = options.seed + static_cast<std::uint64_t>(r);
    try {
      Solution sol = run_single(problem, part, run);
      sol.restart = r;
      if (!best || sol.final_stress() < best->final_stress()) best = std::move(sol);
    } catch (const Error&) {
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (!best) std::rethrow_exception(first_error);
  return *best;
}

struct FitOutcome {
  Problem problem;  // validated
  Partition partition;
  Solution solution;
  std::optional<ImputedConditioning> imputed;
  std::string impute_error;  // set when B was singular
};

/// validate → partition → multi-start solve → impute (when B is invertible).
inline FitOutcome fit(const Problem& raw, const SolverOptions& options, Symmetrize mode = Symmetrize::average) {
  FitOutcome out;
  out.problem = validate(raw, mode);
  out.partition = partition(out.problem);
  out.solution = run_multistart(out.problem, out.partition, options);
  if (out.partition.n2 > 0) {
    const BlockedProblem bp = make_blocked(out.problem, out.partition);
    try {
      out.imputed = impute(bp.v2, bp.mask, out.solution.v2_tilde, out.solution.b);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SingularB) throw;
      out.impute_error = e.what();
    }
  }
  return out;
}

}  // namespace cmds
