#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rem {

enum class ErrorKind {
  CycleDetected,
  TyingShapeMismatch,
  UnknownVariable,
  UnknownLevel,
  InvalidModel,
  DimensionMismatch,
  NonFinite,
  ZeroProbability,
  ZeroEvidenceProbability,
  MissingPriorBlock,
  SupportViolation,
  SingularHessian,
  NonConvergence,
  SingularCovariance,
  NonPositiveInterval,
  InvalidBestGuess,
  PerMemberElicitation,
  CapExceeded,
  ParseError,
};

inline std::string_view kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::CycleDetected: return "CycleDetected";
    case ErrorKind::TyingShapeMismatch: return "TyingShapeMismatch";
    case ErrorKind::UnknownVariable: return "UnknownVariable";
    case ErrorKind::UnknownLevel: return "UnknownLevel";
    case ErrorKind::InvalidModel: return "InvalidModel";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::ZeroProbability: return "ZeroProbability";
    case ErrorKind::ZeroEvidenceProbability: return "ZeroEvidenceProbability";
    case ErrorKind::MissingPriorBlock: return "MissingPriorBlock";
    case ErrorKind::SupportViolation: return "SupportViolation";
    case ErrorKind::SingularHessian: return "SingularHessian";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::SingularCovariance: return "SingularCovariance";
    case ErrorKind::NonPositiveInterval: return "NonPositiveInterval";
    case ErrorKind::InvalidBestGuess: return "InvalidBestGuess";
    case ErrorKind::PerMemberElicitation: return "PerMemberElicitation";
    case ErrorKind::CapExceeded: return "CapExceeded";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

// Every failure raised by the library carries a machine-readable kind. The
// message is prefixed with the kind name so that plain `what()` output is
// greppable.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(kind_name(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  // Sample row that triggered the failure, when one applies.
  const std::optional<std::size_t>& row() const noexcept { return row_; }

  // Message without the kind prefix.
  std::string message() const {
    std::string msg = what();
    const auto prefix = std::string(kind_name(kind_)) + ": ";
    if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
    return msg;
  }

  Error with_row(std::size_t row) const {
    Error copy(kind_, message() + " (row " + std::to_string(row) + ")");
    copy.row_ = row;
    return copy;
  }

  Error with_context(const std::string& context) const {
    Error copy(kind_, message() + " [" + context + "]");
    copy.row_ = row_;
    return copy;
  }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> row_;
};

}  // namespace rem
