#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ppgage {

// Process exit codes double as machine-parsable error categories.
enum class ErrorCode : int {
  invalid_input = 2,
  no_events = 3,
  collinear = 4,
  io = 5,
  non_finite = 6,
  missing_artifact = 7,
  undefined_statistic = 8,
};

constexpr std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_input: return "invalid_input";
    case ErrorCode::no_events: return "no_events";
    case ErrorCode::collinear: return "collinear";
    case ErrorCode::io: return "io";
    case ErrorCode::non_finite: return "non_finite";
    case ErrorCode::missing_artifact: return "missing_artifact";
    case ErrorCode::undefined_statistic: return "undefined_statistic";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& what) : Error(ErrorCode::invalid_input, what) {}
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidInput(message);
}

}  // namespace ppgage
