#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fgac {

enum class ErrorCode {
  InvalidModel,
  InvalidScenario,
  InvalidPolicy,
  InvalidInput,
  SyntaxError,
  TypeError,
  UnboundKeyword,
  UnknownRole,
  UnsupportedFeature,
  UnknownTable,
  UnknownColumn,
  Uncompilable,
  UnsupportedQuery,
  Untranslatable,
  SolverUnavailable,
  SolverProtocolError,
  InconsistentChecks,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised by the OCL and SQL parsers. `position` is a byte offset into the
// source text.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, const std::string& message);
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class TypeError : public Error {
 public:
  TypeError(std::string subexpression, std::string expected, std::string found);
  const std::string& subexpression() const noexcept { return subexpression_; }
  const std::string& expected() const noexcept { return expected_; }
  const std::string& found() const noexcept { return found_; }

 private:
  std::string subexpression_;
  std::string expected_;
  std::string found_;
};

}  // namespace fgac
