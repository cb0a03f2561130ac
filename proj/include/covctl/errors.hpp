#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace covctl {

enum class ErrorKind {
  InvalidPolygon,
  DegenerateCell,
  DegenerateFace,
  CollinearGenerators,
  CoincidentGenerators,
  AgentOutsideDomain,
  CoincidentAgents,
  QuadratureNonConvergence,
  SingularSystem,
  TimeOutOfRange,
  NonconvexInterpolation,
  InvalidScript,
  FaceNotOnBoundary,
  WindowTooLong,
  InvalidConfig,
};

std::string_view to_string(ErrorKind kind);

/// Every recoverable failure in the library is reported through this type;
/// callers branch on kind() rather than on the message text.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace covctl
