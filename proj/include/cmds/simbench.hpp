#pragma once

#include "cmds/error.hpp"
#include "cmds/evaluate.hpp"
#include "cmds/fit.hpp"
#include "cmds/init.hpp"
#include "cmds/model.hpp"
#include "cmds/types.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace cmds {

enum class WeightMode { consumer_reports, random_uniform };
/// How distance noise is drawn: once per unordered pair, or once per ordered
/// pair followed by averaging.
enum class NoisePairing { unordered, ordered };

/// Car-brand features: Quality, Safety, Value, Performance, Eco, Design, Technology.
inline constexpr int kCarFeatures = 7;
inline constexpr int kKnownFeatures = 4;
inline constexpr std::array<double, kCarFeatures> kConsumerReportsCounts = {90, 88, 83, 82, 81, 70, 68};
inline constexpr double kConsumerReportsTotal = 562.0;

struct SimConfig {
  Index n = 100;
  double n1_ratio = 0.5;
  double zeta1 = 0.2;
  double zeta2 = 0.05;
  WeightMode weight_mode = WeightMode::consumer_reports;
  NoisePairing noise_pairing = NoisePairing::unordered;
  int replicates = 100;
  std::uint64_t seed = 0;
  Index p = 3;
};

inline void check_config(const SimConfig& c) {
  if (c.n < 8) throw Error(ErrorCode::InvalidArgument, "n must be >= 8");
  if (!(c.n1_ratio > 0.0 && c.n1_ratio <= 1.0)) throw Error(ErrorCode::InvalidArgument, "n1_ratio must lie in (0, 1]");
  if (!(c.zeta1 >= 0.0) || !(c.zeta2 >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise fractions must be >= 0");
  if (c.replicates < 1) throw Error(ErrorCode::InvalidArgument, "replicates must be >= 1");
  if (c.p < 1) throw Error(ErrorCode::InvalidArgument, "p must be >= 1");
}

/// ⌈N·(1 − n1_ratio)⌉, robust to the representation error of the ratio.
inline Index masked_row_count(Index n, double n1_ratio) {
  const double raw = static_cast<double>(n) * (1.0 - n1_ratio);
  return static_cast<Index>(std::ceil(raw - 1e-9));
}

struct GroundTruth {
  Matrix features;        // N x 7, noise-free generated values
  Vector feature_weights;  // 7
  Matrix b_true;          // 4 x 4, diag(√w1..√w4)
  Matrix u_true;          // N x 3, the unknown features
  std::vector<Index> masked_rows;  // ascending
  Matrix v2_true;         // |masked| x 4, noise-free known features of masked rows
};

struct Replicate {
  Problem problem;
  GroundTruth truth;
};

inline Vector feature_weights(WeightMode mode, std::mt19937_64& rng) {
  Vector w(kCarFeatures);
  if (mode == WeightMode::consumer_reports) {
    for (int k = 0; k < kCarFeatures; ++k) w(k) = kConsumerReportsCounts[static_cast<std::size_t>(k)] / kConsumerReportsTotal;
    return w;
  }
  std::uniform_real_distribution<double> unif(3.0, 7.0);
  for (int k = 0; k < kCarFeatures; ++k) w(k) = unif(rng);
  return w / w.sum();
}

/// One Monte Carlo replicate, seeded by config.seed + index.
inline Replicate gen_replicate(const SimConfig& config, int index) {
  check_config(config);
  std::mt19937_64 rng(config.seed + static_cast<std::uint64_t>(index));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index n = config.n;

  Replicate rep;
  GroundTruth& t = rep.truth;
  t.features.resize(n, kCarFeatures);
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < kCarFeatures; ++k) t.features(i, k) = unif(rng);
  t.feature_weights = feature_weights(config.weight_mode, rng);

  Matrix delta = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = j + 1; i < n; ++i) {
      const double d = std::sqrt(
          ((t.features.row(i) - t.features.row(j)).array().square().transpose() * t.feature_weights.array()).sum());
      double value;
      if (config.noise_pairing == NoisePairing::unordered) {
        value = d + config.zeta1 * d * normal(rng);
      } else {
        const double a = d + config.zeta1 * d * normal(rng);
        const double b = d + config.zeta1 * d * normal(rng);
        value = 0.5 * (a + b);
      }
      delta(i, j) = delta(j, i) = std::max(value, 0.0);
    }

  Matrix observed = t.features;
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < kCarFeatures; ++k)
      observed(i, k) += config.zeta2 * std::abs(t.features(i, k)) * normal(rng);

  const Index masked = masked_row_count(n, config.n1_ratio);
  std::vector<Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Index{0});
  std::shuffle(rows.begin(), rows.end(), rng);
  t.masked_rows.assign(rows.begin(), rows.begin() + masked);
  std::sort(t.masked_rows.begin(), t.masked_rows.end());

  t.b_true = t.feature_weights.head(kKnownFeatures).cwiseSqrt().asDiagonal();
  t.u_true = t.features.rightCols(kCarFeatures - kKnownFeatures);
  t.v2_true.resize(masked, kKnownFeatures);
  for (Index k = 0; k < masked; ++k)
    t.v2_true.row(k) = t.features.row(t.masked_rows[static_cast<std::size_t>(k)]).head(kKnownFeatures);

  Problem& pr = rep.problem;
  pr.p = config.p;
  pr.delta = std::move(delta);
  pr.weights = Matrix::Ones(n, n);
  pr.weights.diagonal().setZero();
  pr.conditioning = observed.leftCols(kKnownFeatures);
  pr.conditioning_missing = Mask::Constant(n, kKnownFeatures, false);
  for (Index r : t.masked_rows) {
    pr.conditioning_missing.row(r).setConstant(true);
    pr.conditioning.row(r).setConstant(std::numeric_limits<double>::quiet_NaN());
  }
  return rep;
}

enum class Method { complete_only, proposed_naive, proposed_complete_smacof };
inline constexpr std::array<Method, 3> kMethods = {Method::complete_only, Method::proposed_naive,
                                                    Method::proposed_complete_smacof};

inline std::string to_string(Method m) {
  switch (m) {
    case Method::complete_only: return "complete-only";
    case Method::proposed_naive: return "proposed-naive";
    case Method::proposed_complete_smacof: return "proposed-complete-smacof";
  }
  return "unknown";
}

/// Per-method metrics of one replicate; `ok[m]` false when that solver failed.
struct ReplicateOutcome {
  std::array<ReplicateReport, 3> reports{};
  std::array<bool, 3> ok{};
};

inline Matrix select_rows(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = m.row(rows[k]);
  return out;
}

/// Fits all three methods on one replicate and scores them against the truth.
inline ReplicateOutcome evaluate_replicate(const SimConfig& config, int index, const SolverOptions& base) {
  const Replicate rep = gen_replicate(config, index);
  ReplicateOutcome out;
  Problem problem;
  Partition part;
  try {
    problem = validate(rep.problem);
    part = partition(problem);
  } catch (const Error&) {
    return out;
  }
  SolverOptions options = base;
  options.seed = config.seed + static_cast<std::uint64_t>(index);
  const GroundTruth& t = rep.truth;

  auto score = [&](const Solution& sol, ReplicateReport& r) {
    r.acc = acc(sol.u, t.u_true);
    r.ps = procrustes_statistic(sol.u, t.u_true);
    r.mse_b = mse_b(sol.b, t.b_true);
    if (part.n2 > 0) {
      const BlockedProblem bp = make_blocked(problem, part);
      r.mse_v = mse_v(impute(bp.v2, bp.mask, sol.v2_tilde, sol.b).v2_hat, t.v2_true);
    }
  };
  auto run = [&](const InitState& init) {
    switch (select_path(problem, part, options)) {
      case SolverPath::complete: return run_complete(problem, options, init);
      case SolverPath::equal_weights: return run_equal(problem, part, options, init);
      case SolverPath::general: break;
    }
    return run_missing(problem, part, options, init);
  };

  std::optional<Solution> complete_fit;
  try {
    complete_fit = complete_data_fit(problem, part, options);
    const std::vector<Index> complete_rows(part.order.begin(), part.order.begin() + part.n1);
    ReplicateReport& r = out.reports[0];
    const Matrix truth = select_rows(t.u_true, complete_rows);
    r.acc = acc(complete_fit->u, truth);
    r.ps = procrustes_statistic(complete_fit->u, truth);
    r.mse_b = mse_b(complete_fit->b, t.b_true);
    out.ok[0] = true;
  } catch (const Error&) {
  }
  try {
    score(run(naive_init(problem, part, options.seed)), out.reports[1]);
    out.ok[1] = true;
  } catch (const Error&) {
  }
  if (complete_fit) {
    try {
      score(run(init_from_complete_fit(problem, part, *complete_fit, options.seed)),
            out.reports[2]);
      out.ok[2] = true;
    } catch (const Error&) {
    }
  }
  return out;
}

inline double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

struct BenchmarkRow {
  double n1_ratio = 0.0;
  std::string method;
  std::string metric;
  double median = 0.0;
};

struct BenchmarkTable {
  std::vector<BenchmarkRow> rows;

  /// Median of one cell; NaN if absent.
  double get(double n1_ratio, Method method, const std::string& metric) const {
    for (const auto& r : rows)
      if (r.n1_ratio == n1_ratio && r.method == to_string(method) && r.metric == metric) return r.median;
    return std::numeric_limits<double>::quiet_NaN();
  }
};

/// Median ACC/PS/MSE_B/MSE_V per method for each ratio. Replicates are
/// independent; `threads` > 1 spreads them over workers, and the table does
/// not depend on the thread count. Each method also gets a `failures` row.
inline BenchmarkTable run_benchmark(const SimConfig& config, const std::vector<double>& n1_ratios,
                                    const SolverOptions& options = {}, unsigned threads = 1) {
  BenchmarkTable table;
  for (double ratio : n1_ratios) {
    SimConfig cfg = config;
    cfg.n1_ratio = ratio;
    check_config(cfg);
    std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(cfg.replicates));
    std::atomic<int> next{0};
    auto worker = [&] {
      for (int i = next++; i < cfg.replicates; i = next++)
        outcomes[static_cast<std::size_t>(i)] = evaluate_replicate(cfg, i, options);
    };
    const unsigned count = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cfg.replicates)));
    if (count == 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (unsigned k = 0; k < count; ++k) pool.emplace_back(worker);
    }

    for (std::size_t m = 0; m < kMethods.size(); ++m) {
      std::vector<double> a, ps, mb, mv;
      int failures = 0;
      for (const auto& o : outcomes) {
        if (!o.ok[m]) {
          ++failures;
          continue;
        }
        a.push_back(o.reports[m].acc);
        ps.push_back(o.reports[m].ps);
        mb.push_back(o.reports[m].mse_b);
        if (!std::isnan(o.reports[m].mse_v)) mv.push_back(o.reports[m].mse_v);
      }
      const std::string name = to_string(kMethods[m]);
      table.rows.push_back({ratio, name, "acc", median(a)});
      table.rows.push_back({ratio, name, "ps", median(ps)});
      table.rows.push_back({ratio, name, "mse_b", median(mb)});
      if (kMethods[m] != Method::complete_only) table.rows.push_back({ratio, name, "mse_v", median(mv)});
      table.rows.push_back({ratio, name, "failures", static_cast<double>(failures)});
    }
  }
  return table;
}

}  // namespace cmds
