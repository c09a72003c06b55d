#include "bundlekit/error.hpp"

#include "bundlekit/defects.hpp"

namespace bundlekit {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MembershipViolation: return "MembershipViolation";
    case ErrorKind::NearCutLocus: return "NearCutLocus";
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::UnknownIdentifier: return "UnknownIdentifier";
    case ErrorKind::EvalDomainError: return "EvalDomainError";
    case ErrorKind::MissingVariable: return "MissingVariable";
    case ErrorKind::UnknownCatalogEntry: return "UnknownCatalogEntry";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::ChartAssignmentError: return "ChartAssignmentError";
    case ErrorKind::AtlasMismatch: return "AtlasMismatch";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::StepCollapse: return "StepCollapse";
    case ErrorKind::NotALoop: return "NotALoop";
    case ErrorKind::GlueFailure: return "GlueFailure";
    case ErrorKind::ValueNotInGroup: return "ValueNotInGroup";
    case ErrorKind::OverlapViolation: return "OverlapViolation";
    case ErrorKind::LiftDefectTooLarge: return "LiftDefectTooLarge";
    case ErrorKind::UnsupportedDeckPattern: return "UnsupportedDeckPattern";
    case ErrorKind::ReferenceError: return "ReferenceError";
    case ErrorKind::InvariantFailure: return "InvariantFailure";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

Error::Error(ErrorKind kind, const std::string& message, std::size_t offset)
    : std::runtime_error(std::string(to_string(kind)) + " at offset " + std::to_string(offset) +
                         ": " + message),
      kind_(kind),
      offset_(offset) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

double DefectReport::value(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c.value;
  }
  fail(ErrorKind::ReferenceError, "no check named '" + name + "'");
}

}  // namespace bundlekit
