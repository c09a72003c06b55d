#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bundlekit {

/// Every failure the toolkit can raise. Each kind maps to one CLI exit code.
enum class ErrorKind {
  MembershipViolation,
  NearCutLocus,
  SyntaxError,
  UnknownIdentifier,
  EvalDomainError,
  MissingVariable,
  UnknownCatalogEntry,
  InvalidParams,
  ChartAssignmentError,
  AtlasMismatch,
  ShapeMismatch,
  StepCollapse,
  NotALoop,
  GlueFailure,
  ValueNotInGroup,
  OverlapViolation,
  LiftDefectTooLarge,
  UnsupportedDeckPattern,
  ReferenceError,
  InvariantFailure,
  IoError,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);
  Error(ErrorKind kind, const std::string& message, std::size_t offset);

  ErrorKind kind() const noexcept { return kind_; }
  /// Byte offset into the parsed text, set for syntax errors.
  std::optional<std::size_t> offset() const noexcept { return offset_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> offset_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace bundlekit
