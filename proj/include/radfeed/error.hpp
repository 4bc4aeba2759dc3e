#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace radfeed {

using BusId = std::size_t;

enum class ErrorCode {
  CycleDetected,
  DisconnectedBus,
  DuplicateId,
  NonDenseId,
  NegativeImpedance,
  NegativeCapability,
  NonFiniteValue,
  MultipleSlack,
  MissingSlack,
  SetpointOutOfRange,
  ProfileFeederMismatch,
  ZeroVoltage,
  Diverged,
  NonpositiveVoltage,
  PreconditionViolated,
  ClassMismatch,
  TooLarge,
  InvalidArgument,
  ParseError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::DisconnectedBus: return "DisconnectedBus";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::NonDenseId: return "NonDenseId";
    case ErrorCode::NegativeImpedance: return "NegativeImpedance";
    case ErrorCode::NegativeCapability: return "NegativeCapability";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::MultipleSlack: return "MultipleSlack";
    case ErrorCode::MissingSlack: return "MissingSlack";
    case ErrorCode::SetpointOutOfRange: return "SetpointOutOfRange";
    case ErrorCode::ProfileFeederMismatch: return "ProfileFeederMismatch";
    case ErrorCode::ZeroVoltage: return "ZeroVoltage";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::NonpositiveVoltage: return "NonpositiveVoltage";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::ClassMismatch: return "ClassMismatch";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Single exception type for the library. `bus()` is set when the error is
/// attributable to one bus; `count()` carries an iteration count or grid size.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message,
        std::optional<BusId> bus = std::nullopt,
        std::optional<std::size_t> count = std::nullopt)
      : std::runtime_error(compose(code, message, bus)),
        code_(code),
        bus_(bus),
        count_(count) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<BusId> bus() const noexcept { return bus_; }
  std::optional<std::size_t> count() const noexcept { return count_; }

 private:
  static std::string compose(ErrorCode code, const std::string& message,
                             std::optional<BusId> bus) {
    std::string out{to_string(code)};
    if (bus) out += "(" + std::to_string(*bus) + ")";
    if (!message.empty()) out += ": " + message;
    return out;
  }

  ErrorCode code_;
  std::optional<BusId> bus_;
  std::optional<std::size_t> count_;
};

}  // namespace radfeed
