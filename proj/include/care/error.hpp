#pragma once

#include <stdexcept>
#include <string>

namespace care {

enum class ErrorKind {
  InvalidArgument,
  DimensionMismatch,
  DomainError,
  NonFinite,
  NotInSpace,
  FeatureOverflow,
  MissingColumn,
  ParseError,
  NonPositiveTime,
  BadEventFlag,
  Io,
  AllFitsFailed,
  NoComparablePairs,
  Config,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` lets callers (the CLI in
/// particular) map failures onto exit codes without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::NotInSpace: return "NotInSpace";
    case ErrorKind::FeatureOverflow: return "FeatureOverflow";
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::NonPositiveTime: return "NonPositiveTime";
    case ErrorKind::BadEventFlag: return "BadEventFlag";
    case ErrorKind::Io: return "Io";
    case ErrorKind::AllFitsFailed: return "AllFitsFailed";
    case ErrorKind::NoComparablePairs: return "NoComparablePairs";
    case ErrorKind::Config: return "Config";
  }
  return "Unknown";
}

}  // namespace care
