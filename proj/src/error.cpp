#include "fgac/error.hpp"

namespace fgac {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::InvalidPolicy: return "InvalidPolicy";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::TypeError: return "TypeError";
    case ErrorCode::UnboundKeyword: return "UnboundKeyword";
    case ErrorCode::UnknownRole: return "UnknownRole";
    case ErrorCode::UnsupportedFeature: return "UnsupportedFeature";
    case ErrorCode::UnknownTable: return "UnknownTable";
    case ErrorCode::UnknownColumn: return "UnknownColumn";
    case ErrorCode::Uncompilable: return "Uncompilable";
    case ErrorCode::UnsupportedQuery: return "UnsupportedQuery";
    case ErrorCode::Untranslatable: return "Untranslatable";
    case ErrorCode::SolverUnavailable: return "SolverUnavailable";
    case ErrorCode::SolverProtocolError: return "SolverProtocolError";
    case ErrorCode::InconsistentChecks: return "InconsistentChecks";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

SyntaxError::SyntaxError(std::size_t position, const std::string& message)
    : Error(ErrorCode::SyntaxError, message + " at offset " + std::to_string(position)),
      position_(position) {}

TypeError::TypeError(std::string subexpression, std::string expected, std::string found)
    : Error(ErrorCode::TypeError,
            "in '" + subexpression + "': expected " + expected + ", found " + found),
      subexpression_(std::move(subexpression)),
      expected_(std::move(expected)),
      found_(std::move(found)) {}

}  // namespace fgac
