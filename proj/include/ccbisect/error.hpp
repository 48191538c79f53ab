#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace ccbisect {

enum class ErrorKind {
  DimensionMismatch,
  InvalidCutter,
  StarViolation,
  InvalidPlacement,
  NoBracket,
  Domain,
  AmbiguousWinding,
  NoZeroFound,
  Parse,
  MissingColumn,
  NonPositiveWeight,
  NonPositiveRadius,
  TooFewMeasures,
  TooManyMeasures,
  Unsupported,
  Io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InvalidCutter: return "InvalidCutter";
    case ErrorKind::StarViolation: return "StarViolation";
    case ErrorKind::InvalidPlacement: return "InvalidPlacement";
    case ErrorKind::NoBracket: return "NoBracket";
    case ErrorKind::Domain: return "DomainError";
    case ErrorKind::AmbiguousWinding: return "AmbiguousWinding";
    case ErrorKind::NoZeroFound: return "NoZeroFound";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::NonPositiveWeight: return "NonPositiveWeight";
    case ErrorKind::NonPositiveRadius: return "NonPositiveRadius";
    case ErrorKind::TooFewMeasures: return "TooFewMeasures";
    case ErrorKind::TooManyMeasures: return "TooManyMeasures";
    case ErrorKind::Unsupported: return "Unsupported";
    case ErrorKind::Io: return "IoError";
  }
  return "Unknown";
}

/// Library error. `row()` is set for parse errors tied to an input row
/// (1-based, header is row 1).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<std::size_t> row = std::nullopt)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        message_(message),
        row_(row) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix.
  const std::string& message() const noexcept { return message_; }
  std::optional<std::size_t> row() const noexcept { return row_; }

 private:
  ErrorKind kind_;
  std::string message_;
  std::optional<std::size_t> row_;
};

}  // namespace ccbisect
