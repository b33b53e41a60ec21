#pragma once

#include <stdexcept>
#include <string>

namespace rsfl {

// Stable error identities; tests and the CLI exit-code mapping key off these.
enum class ErrorCode {
  NotAPrime,
  ZeroInverse,
  DimensionMismatch,
  Singular,
  DuplicatePsi,
  BadRampParams,
  NotEnoughRows,
  InconsistentRows,
  SelfRepair,
  WrongContributorCount,
  ZeroContribution,
  MissingRandomness,
  MissingRouterAnswer,
  NotEnoughDatabases,
  InconsistentAnswer,
  MissingShare,
  UnknownDroppedClient,
  MissingCompensation,
  NotEnoughHelpers,
  NoMajority,
  DecodingFailure,
  ScenarioInfeasible,
  ProtocolAbort,
  ConfigError,
  UnknownExample,
};

const char* error_code_name(ErrorCode code);

class FslError : public std::runtime_error {
 public:
  FslError(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw FslError(code, message);
}

}  // namespace rsfl
