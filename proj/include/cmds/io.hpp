#pragma once

#include "cmds/error.hpp"
#include "cmds/fit.hpp"
#include "cmds/simbench.hpp"
#include "cmds/types.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace cmds::io {

inline constexpr std::string_view kMissingToken = "NA";

/// Numeric table with an optional label row and label column.
struct Table {
  Matrix values;
  Mask missing;
  std::vector<std::string> row_labels;
  std::vector<std::string> column_labels;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  std::string out(s.substr(first, last - first + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string_view rest(line);
  while (true) {
    const auto comma = rest.find(',');
    cells.push_back(trim(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return cells;
}

inline bool parse_number(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

inline bool is_value(const std::string& cell) {
  double v;
  return cell == kMissingToken || parse_number(cell, v);
}

}  // namespace detail

/// Parses comma-separated text. A first row is a label row when any of its
/// cells past the first is neither numeric nor "NA"; a first column is a label
/// column likewise. Cell positions in errors are 1-based file coordinates.
inline Table parse_table(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    rows.push_back(detail::split(line));
  }
  if (rows.empty()) throw Error(ErrorCode::EmptyFile, "file contains no data");

  Table t;
  bool header = false;
  for (std::size_t c = 1; c < rows[0].size(); ++c)
    if (!detail::is_value(rows[0][c])) header = true;
  if (rows[0].size() == 1 && !detail::is_value(rows[0][0])) header = true;
  const std::size_t first_row = header ? 1 : 0;
  if (rows.size() == first_row) throw Error(ErrorCode::EmptyFile, "file contains a header but no data");

  bool label_col = false;
  for (std::size_t r = first_row; r < rows.size(); ++r)
    if (!rows[r].empty() && !detail::is_value(rows[r][0])) label_col = true;
  const std::size_t first_col = label_col ? 1 : 0;

  const std::size_t width = rows[first_row].size() - first_col;
  if (width == 0) throw Error(ErrorCode::EmptyFile, "file contains no numeric columns");
  const Index n = static_cast<Index>(rows.size() - first_row);
  t.values.resize(n, static_cast<Index>(width));
  t.missing = Mask::Constant(n, static_cast<Index>(width), false);
  for (std::size_t r = first_row; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    if (cells.size() != width + first_col)
      throw Error(ErrorCode::DimensionMismatch,
                  "row " + std::to_string(r + 1) + " has " + std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(width + first_col));
    const Index i = static_cast<Index>(r - first_row);
    if (label_col) t.row_labels.push_back(cells[0]);
    for (std::size_t c = first_col; c < cells.size(); ++c) {
      const Index j = static_cast<Index>(c - first_col);
      if (cells[c] == kMissingToken) {
        t.missing(i, j) = true;
        t.values(i, j) = std::numeric_limits<double>::quiet_NaN();
      } else if (!detail::parse_number(cells[c], t.values(i, j))) {
        throw Error(ErrorCode::UnparsableCell, "UnparsableCell(" + std::to_string(r + 1) + "," +
                                                   std::to_string(c + 1) + "): '" + cells[c] + "'");
      }
    }
  }
  if (header)
    t.column_labels.assign(rows[0].begin() + static_cast<std::ptrdiff_t>(first_col), rows[0].end());
  return t;
}

inline Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open '" + path + "'");
  return parse_table(in);
}

/// Square dissimilarity table; "NA" cells are missing dissimilarities.
inline Table load_dissimilarity(const std::string& path) {
  Table t = read_table(path);
  if (t.values.rows() != t.values.cols())
    throw Error(ErrorCode::NotSquare, "dissimilarity table is " + std::to_string(t.values.rows()) + "x" +
                                          std::to_string(t.values.cols()));
  if (t.row_labels.empty() && !t.column_labels.empty()) t.row_labels = t.column_labels;
  return t;
}

/// N x q conditioning table; at least one row must be complete.
inline Table load_conditioning(const std::string& path) {
  Table t = read_table(path);
  if (!(t.missing.rowwise().any() == false).any())
    throw Error(ErrorCode::AllRowsIncomplete, "every conditioning row has a missing value");
  return t;
}

/// Plain weight table; must be numeric and complete.
inline Matrix load_weights(const std::string& path) {
  Table t = read_table(path);
  if (t.missing.any()) throw Error(ErrorCode::InvalidArgument, "weights may not contain NA");
  return t.values;
}

/// Shortest representation that round-trips to the same double
/// (at most 17 significant digits).
inline std::string format_double(double v) {
  if (std::isnan(v)) return std::string(kMissingToken);
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

inline void write_table(std::ostream& out, const Matrix& m, const std::vector<std::string>& column_labels = {},
                        const std::vector<std::string>& row_labels = {}) {
  const bool labelled_rows = !row_labels.empty();
  if (!column_labels.empty()) {
    if (labelled_rows) out << "label,";
    for (std::size_t c = 0; c < column_labels.size(); ++c) out << (c ? "," : "") << column_labels[c];
    out << '\n';
  }
  for (Index i = 0; i < m.rows(); ++i) {
    if (labelled_rows) out << row_labels[static_cast<std::size_t>(i)] << ',';
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
}

inline nlohmann::json to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Index j = 0; j < m.cols(); ++j) {
      if (std::isnan(m(i, j)))
        row.push_back(nullptr);
      else
        row.push_back(m(i, j));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorCode::InvalidArgument, "expected a matrix (array of rows)");
  const Index rows = static_cast<Index>(j.size());
  const Index cols = rows ? static_cast<Index>(j[0].size()) : 0;
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      throw Error(ErrorCode::DimensionMismatch, "ragged matrix in JSON");
    for (Index c = 0; c < cols; ++c) {
      const auto& cell = row[static_cast<std::size_t>(c)];
      m(i, c) = cell.is_null() ? std::numeric_limits<double>::quiet_NaN() : cell.get<double>();
    }
  }
  return m;
}

struct FitMetadata {
  std::vector<std::string> labels;  // object labels in input order; may be empty
  std::vector<std::string> conditioning_labels;
  Symmetrize symmetrize = Symmetrize::average;
  bool sammon = false;
};

/// FitResult document. Row order is the caller's object order throughout;
/// `incomplete_rows` lists the original indices behind the rows of
/// `v2_tilde` and `imputed`.
inline nlohmann::json fit_result_json(const FitOutcome& outcome, const SolverOptions& options,
                                      const FitMetadata& meta = {}) {
  const Solution& sol = outcome.solution;
  nlohmann::json j;
  j["labels"] = meta.labels;
  j["conditioning_labels"] = meta.conditioning_labels;
  j["u"] = to_json(sol.u);
  j["b"] = to_json(sol.b);
  j["incomplete_rows"] = outcome.partition.incomplete_rows();
  j["v2_tilde"] = to_json(sol.v2_tilde);
  if (outcome.imputed) {
    j["imputed"] = to_json(outcome.imputed->v2_hat);
  } else {
    j["imputed"] = nullptr;
  }
  if (!outcome.impute_error.empty()) j["impute_error"] = outcome.impute_error;
  j["final_stress"] = sol.final_stress();
  j["stress_trace"] = sol.stress_trace;
  j["iterations"] = sol.iterations;
  j["converged"] = sol.converged;
  j["path"] = to_string(sol.path);
  j["seed"] = sol.seed;
  j["restart"] = sol.restart;
  j["options"] = {{"p", outcome.problem.p},
                  {"gamma", options.gamma},
                  {"max_iter", options.l_max},
                  {"init", to_string(options.init)},
                  {"restarts", options.restarts},
                  {"seed", options.seed},
                  {"force_general_path", options.force_general_path},
                  {"symmetrize", meta.symmetrize == Symmetrize::sum ? "sum" : "avg"},
                  {"sammon", meta.sammon}};
  return j;
}

/// Serialized JSON; doubles use the shortest round-tripping form.
inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorCode::InvalidArgument, "write to '" + path + "' failed");
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Benchmark table with header n1_ratio,method,metric,median.
inline void write_benchmark(std::ostream& out, const BenchmarkTable& table) {
  out << "n1_ratio,method,metric,median\n";
  for (const auto& r : table.rows)
    out << format_double(r.n1_ratio) << ',' << r.method << ',' << r.metric << ',' << format_double(r.median)
        << '\n';
}

}  // namespace cmds::io
