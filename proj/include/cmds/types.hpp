#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace cmds {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
/// Entry-wise flag matrix; `true` marks a missing value.
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

enum class Symmetrize { average, sum };

/// Input to every solver. Objects are rows, in the caller's order.
///
/// `conditioning` holds the known features; entries flagged in
/// `conditioning_missing` are ignored (conventionally NaN). Entries flagged
/// in `delta_missing` are missing dissimilarities and get zero weight.
struct Problem {
  Matrix delta;
  Matrix weights;
  Matrix conditioning;
  Mask conditioning_missing;
  Mask delta_missing;  // empty == nothing missing
  Index p = 2;

  Index n() const { return delta.rows(); }
  Index q() const { return conditioning.cols(); }
};

/// Complete-first reordering of the objects.
struct Partition {
  /// order[k] is the original index of the object placed at position k.
  std::vector<Index> order;
  Index n1 = 0;
  Index n2 = 0;
  /// n2 x q, true where [V2]_ij is missing.
  Mask mask;

  Index n() const { return n1 + n2; }
  /// Original indices of the incomplete rows, in block order.
  std::vector<Index> incomplete_rows() const {
    return {order.begin() + n1, order.end()};
  }
};

enum class InitStrategy { naive, closed_form, complete_smacof };

inline std::string to_string(InitStrategy s) {
  switch (s) {
    case InitStrategy::naive: return "naive";
    case InitStrategy::closed_form: return "closed-form";
    case InitStrategy::complete_smacof: return "complete-smacof";
  }
  return "unknown";
}

enum class SolverPath { complete, general, equal_weights };

inline std::string to_string(SolverPath s) {
  switch (s) {
    case SolverPath::complete: return "complete";
    case SolverPath::general: return "general";
    case SolverPath::equal_weights: return "equal-weights";
  }
  return "unknown";
}

struct SolverOptions {
  double gamma = 1e-6;
  int l_max = 1000;
  std::uint64_t seed = 0;
  InitStrategy init = InitStrategy::closed_form;
  int restarts = 1;
  bool force_general_path = false;
};

/// Starting point (U0, B0, Ṽ2_0). `u0` is in original object order;
/// `v2_tilde0` follows Partition::incomplete_rows().
struct InitState {
  Matrix u0;
  Matrix b0;
  Matrix v2_tilde0;
  InitStrategy strategy = InitStrategy::naive;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

struct Solution {
  Matrix u;         // N x p, original object order
  Matrix b;         // q x q
  Matrix v2_tilde;  // N2 x q, Partition::incomplete_rows() order
  std::vector<double> stress_trace;
  int iterations = 0;
  bool converged = false;
  SolverPath path = SolverPath::general;
  std::uint64_t seed = 0;
  int restart = 0;

  double final_stress() const { return stress_trace.empty() ? 0.0 : stress_trace.back(); }
};

/// Iterate l of a run, in the solver's internal (complete-first) row order.
struct Iterate {
  int l = 0;
  const Matrix& u;
  const Matrix& b;
  const Matrix& v2_tilde;
  double stress = 0.0;
};

using IterationObserver = std::function<void(const Iterate&)>;

}  // namespace cmds
