#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace osc2cr {

enum class ErrorCode {
  MalformedXml,
  UnsupportedGeometry,
  UnsupportedLaneBorder,
  InvalidValue,
  MissingAttribute,
  OutOfRange,
  UnknownRoad,
  UnknownLane,
  DanglingLink,
  MissingRoadNetwork,
  DuplicateEntityName,
  UnresolvedParameter,
  TypeMismatch,
  UnsupportedExpression,
  CatalogNotFound,
  MissingInitPosition,
  UnresolvablePosition,
  EmptyTrajectory,
  NoVehicleEntity,
  OverrideNotFound,
  TrajectoryTooShort,
  IdSpaceExhausted,
  SerializationOverflow,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code and, when known, the
/// source location (file and 1-based line) of the offending input.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::optional<int> line = std::nullopt,
        std::string file = {});

  ErrorCode code() const noexcept { return code_; }
  std::optional<int> line() const noexcept { return line_; }
  const std::string& file() const noexcept { return file_; }
  const std::string& detail() const noexcept { return detail_; }

  /// Returns a copy tagged with `file`, keeping code, line and detail.
  Error with_file(std::string file) const;

 private:
  ErrorCode code_;
  std::optional<int> line_;
  std::string file_;
  std::string detail_;
};

enum class Severity { Info, Warning, Error };

std::string_view to_string(Severity severity);

struct Diagnostic {
  Severity severity = Severity::Warning;
  std::string message;
  std::optional<int> line;

  bool operator==(const Diagnostic&) const = default;
};

using Diagnostics = std::vector<Diagnostic>;

inline std::size_t count_severity(const Diagnostics& diags, Severity severity) {
  std::size_t n = 0;
  for (const auto& d : diags) n += d.severity == severity ? 1 : 0;
  return n;
}

}  // namespace osc2cr
