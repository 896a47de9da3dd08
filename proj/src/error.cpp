#include "osc2cr/error.hpp"

namespace osc2cr {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedXml: return "MalformedXml";
    case ErrorCode::UnsupportedGeometry: return "UnsupportedGeometry";
    case ErrorCode::UnsupportedLaneBorder: return "UnsupportedLaneBorder";
    case ErrorCode::InvalidValue: return "InvalidValue";
    case ErrorCode::MissingAttribute: return "MissingAttribute";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::UnknownRoad: return "UnknownRoad";
    case ErrorCode::UnknownLane: return "UnknownLane";
    case ErrorCode::DanglingLink: return "DanglingLink";
    case ErrorCode::MissingRoadNetwork: return "MissingRoadNetwork";
    case ErrorCode::DuplicateEntityName: return "DuplicateEntityName";
    case ErrorCode::UnresolvedParameter: return "UnresolvedParameter";
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::UnsupportedExpression: return "UnsupportedExpression";
    case ErrorCode::CatalogNotFound: return "CatalogNotFound";
    case ErrorCode::MissingInitPosition: return "MissingInitPosition";
    case ErrorCode::UnresolvablePosition: return "UnresolvablePosition";
    case ErrorCode::EmptyTrajectory: return "EmptyTrajectory";
    case ErrorCode::NoVehicleEntity: return "NoVehicleEntity";
    case ErrorCode::OverrideNotFound: return "OverrideNotFound";
    case ErrorCode::TrajectoryTooShort: return "TrajectoryTooShort";
    case ErrorCode::IdSpaceExhausted: return "IdSpaceExhausted";
    case ErrorCode::SerializationOverflow: return "SerializationOverflow";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

std::string_view to_string(Severity severity) {
  switch (severity) {
    case Severity::Info: return "info";
    case Severity::Warning: return "warning";
    case Severity::Error: return "error";
  }
  return "unknown";
}

namespace {

std::string compose(ErrorCode code, const std::string& message, std::optional<int> line,
                    const std::string& file) {
  std::string out;
  if (!file.empty()) {
    out += file;
    out += line ? ":" + std::to_string(*line) : std::string{};
    out += ": ";
  } else if (line) {
    out += "line " + std::to_string(*line) + ": ";
  }
  out += to_string(code);
  out += ": ";
  out += message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::optional<int> line, std::string file)
    : std::runtime_error(compose(code, message, line, file)),
      code_(code),
      line_(line),
      file_(std::move(file)),
      detail_(message) {}

Error Error::with_file(std::string file) const { return Error(code_, detail_, line_, std::move(file)); }

}  // namespace osc2cr
