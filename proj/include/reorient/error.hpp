#pragma once

#include <stdexcept>
#include <string>

namespace reorient {

enum class ErrorCode {
  DegenerateMesh,
  NonWatertight,
  InvalidMesh,
  WrongDimension,
  NoStablePlacement,
  NoAccessibleGrasp,
  GraphDisconnected,
  IKFailure,
  InvalidRequest,
  Io,
  Schema,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateMesh: return "DegenerateMesh";
    case ErrorCode::NonWatertight: return "NonWatertight";
    case ErrorCode::InvalidMesh: return "InvalidMesh";
    case ErrorCode::WrongDimension: return "WrongDimension";
    case ErrorCode::NoStablePlacement: return "NoStablePlacement";
    case ErrorCode::NoAccessibleGrasp: return "NoAccessibleGrasp";
    case ErrorCode::GraphDisconnected: return "GraphDisconnected";
    case ErrorCode::IKFailure: return "IKFailure";
    case ErrorCode::InvalidRequest: return "InvalidRequest";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Schema: return "Schema";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it to an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace reorient
