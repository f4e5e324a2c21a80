#ifndef ENTROFUSE_ERROR_HPP
#define ENTROFUSE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace entrofuse {

enum class ErrorCode {
  // tensor / mask file validation
  MagicMismatch,
  HeaderMalformed,
  PayloadTruncated,
  ProbabilityOutOfRange,
  RowNotNormalized,
  NotP5,
  LabelExceedsClassCount,
  // manifest / prediction-matrix validation
  ManifestInvalid,
  MissingFoldPrediction,
  FoldLeakage,
  // argument contracts
  LengthMismatch,
  DimensionMismatch,
  ShapeMismatch,
  InvalidConfig,
  GridTooLarge,
  FitnessEvaluationFailure,
  // filesystem
  IoFailure,
};

const char* error_code_name(ErrorCode code);

/// Single exception type carrying a machine-checkable code plus a
/// human-readable message naming the offending file/image/value.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// True for filesystem-level failures (CLI exit code 2); everything
  /// else is a validation error (exit code 1).
  bool is_io() const noexcept { return code_ == ErrorCode::IoFailure; }

private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MagicMismatch: return "MagicMismatch";
    case ErrorCode::HeaderMalformed: return "HeaderMalformed";
    case ErrorCode::PayloadTruncated: return "PayloadTruncated";
    case ErrorCode::ProbabilityOutOfRange: return "ProbabilityOutOfRange";
    case ErrorCode::RowNotNormalized: return "RowNotNormalized";
    case ErrorCode::NotP5: return "NotP5";
    case ErrorCode::LabelExceedsClassCount: return "LabelExceedsClassCount";
    case ErrorCode::ManifestInvalid: return "ManifestInvalid";
    case ErrorCode::MissingFoldPrediction: return "MissingFoldPrediction";
    case ErrorCode::FoldLeakage: return "FoldLeakage";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::GridTooLarge: return "GridTooLarge";
    case ErrorCode::FitnessEvaluationFailure: return "FitnessEvaluationFailure";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "UnknownError";
}

} // namespace entrofuse

#endif
