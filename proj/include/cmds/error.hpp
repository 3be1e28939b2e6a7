#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cmds {

enum class ErrorCode {
  // input / validation
  DimensionMismatch,
  NegativeWeight,
  NegativeDissimilarity,
  DisconnectedWeights,
  RankDeficientConditioning,
  ZeroDissimilarity,
  DegenerateDissimilarities,
  NotSquare,
  UnparsableCell,
  EmptyFile,
  AllRowsIncomplete,
  InvalidArgument,
  // numeric
  SingularShiftedH,
  IllConditioned,
  NonMonotoneStress,
  DegenerateG,
  DegenerateWhitening,
  SingularB,
  RankDeficientInput,
  DegenerateConfiguration,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::NegativeDissimilarity: return "NegativeDissimilarity";
    case ErrorCode::DisconnectedWeights: return "DisconnectedWeights";
    case ErrorCode::RankDeficientConditioning: return "RankDeficientConditioning";
    case ErrorCode::ZeroDissimilarity: return "ZeroDissimilarity";
    case ErrorCode::DegenerateDissimilarities: return "DegenerateDissimilarities";
    case ErrorCode::NotSquare: return "NotSquare";
    case ErrorCode::UnparsableCell: return "UnparsableCell";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::AllRowsIncomplete: return "AllRowsIncomplete";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SingularShiftedH: return "SingularShiftedH";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::NonMonotoneStress: return "NonMonotoneStress";
    case ErrorCode::DegenerateG: return "DegenerateG";
    case ErrorCode::DegenerateWhitening: return "DegenerateWhitening";
    case ErrorCode::SingularB: return "SingularB";
    case ErrorCode::RankDeficientInput: return "RankDeficientInput";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
  }
  return "Unknown";
}

/// True for errors caused by the caller's input rather than by numerics.
constexpr bool is_input_error(ErrorCode code) {
  return code <= ErrorCode::InvalidArgument;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cmds
