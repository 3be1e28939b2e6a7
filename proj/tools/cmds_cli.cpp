// Command-line driver: fit, impute, simulate, bench.

#include "cmds/cmds.hpp"
#include "cmds/io.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace cmds;

constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

struct FitFlags {
  std::string delta, cond, weights, out;
  Index p = 2;
  bool sammon = false;
  double gamma = 1e-6;
  int max_iter = 1000;
  InitStrategy init = InitStrategy::closed_form;
  int restarts = 1;
  std::uint64_t seed = 0;
  bool force_general = false;
  Symmetrize symmetrize = Symmetrize::average;
};

struct ImputeFlags {
  std::string fit, cond, out;
};

struct SimFlags {
  SimConfig config;
  std::vector<double> ratios{0.3, 0.5, 0.8};
  unsigned threads = 1;
  std::string out;
};

int run_fit(const FitFlags& f) {
  const io::Table delta = io::load_dissimilarity(f.delta);
  const io::Table cond = io::load_conditioning(f.cond);
  Problem problem;
  problem.delta = delta.values;
  problem.delta_missing = delta.missing;
  problem.conditioning = cond.values;
  problem.conditioning_missing = cond.missing;
  problem.p = f.p;
  if (!f.weights.empty()) {
    problem.weights = io::load_weights(f.weights);
  } else if (f.sammon) {
    problem.weights = sammon_weights(delta.values, delta.missing);
  } else {
    problem.weights = Matrix::Ones(delta.values.rows(), delta.values.cols());
    problem.weights.diagonal().setZero();
  }

  SolverOptions options;
  options.gamma = f.gamma;
  options.l_max = f.max_iter;
  options.init = f.init;
  options.restarts = f.restarts;
  options.seed = f.seed;
  options.force_general_path = f.force_general;

  const FitOutcome outcome = fit(problem, options, f.symmetrize);
  io::FitMetadata meta;
  meta.labels = !delta.row_labels.empty() ? delta.row_labels : cond.row_labels;
  meta.conditioning_labels = cond.column_labels;
  meta.symmetrize = f.symmetrize;
  meta.sammon = f.sammon && f.weights.empty();
  io::write_text(f.out, io::dump(io::fit_result_json(outcome, options, meta)));
  if (!outcome.impute_error.empty()) std::cerr << "warning: " << outcome.impute_error << '\n';
  return 0;
}

/// Re-imputes a conditioning file from a stored fit (B and Ṽ2).
int run_impute(const ImputeFlags& f) {
  const nlohmann::json doc = nlohmann::json::parse(io::read_text(f.fit));
  const Matrix b = io::matrix_from_json(doc.at("b"));
  const Matrix v2_tilde = io::matrix_from_json(doc.at("v2_tilde"));
  const auto rows = doc.at("incomplete_rows").get<std::vector<Index>>();
  const io::Table cond = io::load_conditioning(f.cond);
  if (static_cast<Index>(rows.size()) != v2_tilde.rows())
    throw Error(ErrorCode::DimensionMismatch, "fit file: incomplete_rows and v2_tilde disagree");

  Matrix v2(v2_tilde.rows(), cond.values.cols());
  Mask mask(v2.rows(), v2.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= cond.values.rows())
      throw Error(ErrorCode::DimensionMismatch, "fit file refers to a row outside the conditioning table");
    v2.row(static_cast<Index>(k)) = cond.values.row(rows[k]);
    mask.row(static_cast<Index>(k)) = cond.missing.row(rows[k]);
  }
  Matrix full = cond.values;
  const ImputedConditioning imputed = impute(v2, mask, v2_tilde, b);
  for (std::size_t k = 0; k < rows.size(); ++k) full.row(rows[k]) = imputed.v2_hat.row(static_cast<Index>(k));

  std::ofstream out(f.out, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + f.out + "'");
  io::write_table(out, full, cond.column_labels, cond.row_labels);
  return 0;
}

/// Writes one replicate: δ, conditioning (with NA), features and B_true.
int run_simulate(const SimFlags& f) {
  const Replicate rep = gen_replicate(f.config, 0);
  nlohmann::json j;
  j["delta"] = io::to_json(rep.problem.delta);
  j["conditioning"] = io::to_json(rep.problem.conditioning);
  j["features"] = io::to_json(rep.truth.features);
  j["feature_weights"] = std::vector<double>(rep.truth.feature_weights.data(),
                                             rep.truth.feature_weights.data() + rep.truth.feature_weights.size());
  j["b_true"] = io::to_json(rep.truth.b_true);
  j["masked_rows"] = rep.truth.masked_rows;
  j["seed"] = f.config.seed;
  io::write_text(f.out, io::dump(j));
  return 0;
}

int run_bench(const SimFlags& f) {
  const BenchmarkTable table = run_benchmark(f.config, f.ratios, SolverOptions{}, f.threads);
  std::ostringstream ss;
  io::write_benchmark(ss, table);
  if (f.out.empty() || f.out == "-")
    std::cout << ss.str();
  else
    io::write_text(f.out, ss.str());
  return 0;
}

void add_sim_flags(CLI::App* cmd, SimFlags& f) {
  const std::map<std::string, WeightMode> modes{{"consumer-reports", WeightMode::consumer_reports},
                                                {"random", WeightMode::random_uniform}};
  cmd->add_option("--n", f.config.n, "Number of objects")->check(CLI::Range(8, 1000000));
  cmd->add_option("--zeta1", f.config.zeta1, "Distance noise fraction")->check(CLI::NonNegativeNumber);
  cmd->add_option("--zeta2", f.config.zeta2, "Feature noise fraction")->check(CLI::NonNegativeNumber);
  cmd->add_option("--weight-mode", f.config.weight_mode, "consumer-reports|random")
      ->transform(CLI::CheckedTransformer(modes, CLI::ignore_case));
  cmd->add_option("--replicates", f.config.replicates, "Monte Carlo replicates")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.config.seed, "Base seed; replicate r uses seed + r");
  cmd->add_flag("--ordered-noise", [&f](std::int64_t) { f.config.noise_pairing = NoisePairing::ordered; },
                "Draw distance noise per ordered pair and average");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional multidimensional scaling with missing conditioning features"};
  app.require_subcommand(1);

  FitFlags fit_flags;
  auto* fit_cmd = app.add_subcommand("fit", "Fit an embedding and impute missing conditioning values");
  fit_cmd->add_option("--delta", fit_flags.delta, "Dissimilarity CSV")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--cond", fit_flags.cond, "Conditioning CSV (NA = missing)")
      ->required()
      ->check(CLI::ExistingFile);
  fit_cmd->add_option("--p", fit_flags.p, "Embedding dimension")->required()->check(CLI::PositiveNumber);
  auto* weights = fit_cmd->add_option("--weights", fit_flags.weights, "Weight CSV")->check(CLI::ExistingFile);
  fit_cmd->add_flag("--sammon", fit_flags.sammon, "Use w = 1/delta")->excludes(weights);
  fit_cmd->add_option("--gamma", fit_flags.gamma, "Stopping tolerance on stress decrease")
      ->check(CLI::PositiveNumber);
  fit_cmd->add_option("--max-iter", fit_flags.max_iter, "Iteration cap")->check(CLI::PositiveNumber);
  const std::map<std::string, InitStrategy> inits{{"naive", InitStrategy::naive},
                                                  {"closed-form", InitStrategy::closed_form},
                                                  {"complete-smacof", InitStrategy::complete_smacof}};
  fit_cmd->add_option("--init", fit_flags.init, "naive|closed-form|complete-smacof")
      ->transform(CLI::CheckedTransformer(inits));
  fit_cmd->add_option("--restarts", fit_flags.restarts, "Number of seeded restarts")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--seed", fit_flags.seed, "Base seed");
  fit_cmd->add_flag("--force-general-path", fit_flags.force_general, "Disable the equal-weight fast path");
  const std::map<std::string, Symmetrize> syms{{"avg", Symmetrize::average}, {"sum", Symmetrize::sum}};
  fit_cmd->add_option("--symmetrize", fit_flags.symmetrize, "avg|sum")->transform(CLI::CheckedTransformer(syms));
  fit_cmd->add_option("--out", fit_flags.out, "Output JSON")->required();

  ImputeFlags impute_flags;
  auto* impute_cmd = app.add_subcommand("impute", "Impute a conditioning file from a stored fit");
  impute_cmd->add_option("--fit", impute_flags.fit, "Fit JSON")->required()->check(CLI::ExistingFile);
  impute_cmd->add_option("--cond", impute_flags.cond, "Conditioning CSV")->required()->check(CLI::ExistingFile);
  impute_cmd->add_option("--out", impute_flags.out, "Output CSV")->required();

  SimFlags sim_flags;
  auto* sim_cmd = app.add_subcommand("simulate", "Write one car-brand replicate");
  add_sim_flags(sim_cmd, sim_flags);
  sim_cmd->add_option("--n1-ratio", sim_flags.config.n1_ratio, "Fraction of complete rows")
      ->check(CLI::Range(0.0, 1.0));
  sim_cmd->add_option("--out", sim_flags.out, "Output JSON")->required();

  SimFlags bench_flags;
  auto* bench_cmd = app.add_subcommand("bench", "Monte Carlo benchmark table");
  add_sim_flags(bench_cmd, bench_flags);
  bench_cmd->add_option("--n1-ratio", bench_flags.ratios, "Fractions of complete rows")
      ->check(CLI::Range(0.0, 1.0))
      ->expected(1, -1);
  bench_cmd->add_option("--threads", bench_flags.threads, "Worker threads")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--out", bench_flags.out, "Output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*fit_cmd) return run_fit(fit_flags);
    if (*impute_cmd) return run_impute(impute_flags);
    if (*sim_cmd) return run_simulate(sim_flags);
    if (*bench_cmd) return run_bench(bench_flags);
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return is_input_error(e.code()) ? kExitInput : kExitNumeric;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: InvalidArgument: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitInput;
}
