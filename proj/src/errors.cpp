#include "rsfl/errors.hpp"

#include "rsfl/rational.hpp"

namespace rsfl {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotAPrime: return "NotAPrime";
    case ErrorCode::ZeroInverse: return "ZeroInverse";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::Singular: return "Singular";
    case ErrorCode::DuplicatePsi: return "DuplicatePsi";
    case ErrorCode::BadRampParams: return "BadRampParams";
    case ErrorCode::NotEnoughRows: return "NotEnoughRows";
    case ErrorCode::InconsistentRows: return "InconsistentRows";
    case ErrorCode::SelfRepair: return "SelfRepair";
    case ErrorCode::WrongContributorCount: return "WrongContributorCount";
    case ErrorCode::ZeroContribution: return "ZeroContribution";
    case ErrorCode::MissingRandomness: return "MissingRandomness";
    case ErrorCode::MissingRouterAnswer: return "MissingRouterAnswer";
    case ErrorCode::NotEnoughDatabases: return "NotEnoughDatabases";
    case ErrorCode::InconsistentAnswer: return "InconsistentAnswer";
    case ErrorCode::MissingShare: return "MissingShare";
    case ErrorCode::UnknownDroppedClient: return "UnknownDroppedClient";
    case ErrorCode::MissingCompensation: return "MissingCompensation";
    case ErrorCode::NotEnoughHelpers: return "NotEnoughHelpers";
    case ErrorCode::NoMajority: return "NoMajority";
    case ErrorCode::DecodingFailure: return "DecodingFailure";
    case ErrorCode::ScenarioInfeasible: return "ScenarioInfeasible";
    case ErrorCode::ProtocolAbort: return "ProtocolAbort";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::UnknownExample: return "UnknownExample";
  }
  return "UnknownError";
}

Rat Rat::parse(const std::string& text) {
  size_t slash = text.find('/');
  try {
    if (slash == std::string::npos) {
      return Rat(std::stoll(text));
    }
    int64_t n = std::stoll(text.substr(0, slash));
    int64_t d = std::stoll(text.substr(slash + 1));
    return Rat(n, d);
  } catch (const std::logic_error&) {
    fail(ErrorCode::ConfigError, "bad rational literal '" + text + "'");
  }
}

}  // namespace rsfl
