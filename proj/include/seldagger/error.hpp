#pragma once

#include <stdexcept>
#include <string>

namespace seldagger {

enum class ErrorCode {
  TooFewWaypoints,
  DegenerateSegment,
  ProjectionDiverged,
  InvalidArchitecture,
  ShapeMismatch,
  EmptyDataset,
  EmptyEvaluation,
  TrackUnDrivable,
  MalformedFile,
  UnknownKey,
  TypeError,
  MissingFile,
  VersionMismatch,
  ChecksumError,
};

const char* to_string(ErrorCode code);

/// Single exception type for the library; `code()` tells callers which
/// contract was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::TooFewWaypoints: return "TooFewWaypoints";
    case ErrorCode::DegenerateSegment: return "DegenerateSegment";
    case ErrorCode::ProjectionDiverged: return "ProjectionDiverged";
    case ErrorCode::InvalidArchitecture: return "InvalidArchitecture";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::EmptyEvaluation: return "EmptyEvaluation";
    case ErrorCode::TrackUnDrivable: return "TrackUnDrivable";
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::UnknownKey: return "UnknownKey";
    case ErrorCode::TypeError: return "TypeError";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::ChecksumError: return "ChecksumError";
  }
  return "Unknown";
}

}  // namespace seldagger
