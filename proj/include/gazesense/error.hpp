#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gazesense {

// Failure kinds raised across the pipeline. The category of each kind maps
// onto the CLI exit-code contract (see category()).
enum class ErrorCode {
  // I/O
  IoError,
  // data / validation
  MalformedCsv,
  NonMonotonicTime,
  MetadataMismatch,
  EmptyTrip,
  TooShort,
  LengthMismatch,
  NegativeInput,
  InsufficientData,
  TripTooShort,
  EmptyInput,
  AllInvalid,
  MissingChannel,
  EmptyMatrix,
  SingleClass,
  MissingClass,
  NameMismatch,
  TooFewParticipants,
  MissingScenario,
  NoPositives,
  Empty,
  InsufficientTrips,
  MissingScores,
  // parameters / configuration
  BadParams,
  BadGroupSize,
  BadConfig,
};

enum class ErrorCategory { Io = 1, Data = 2, Config = 3 };

constexpr ErrorCategory category(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError:
      return ErrorCategory::Io;
    case ErrorCode::BadParams:
    case ErrorCode::BadGroupSize:
    case ErrorCode::BadConfig:
      return ErrorCategory::Config;
    default:
      return ErrorCategory::Data;
  }
}

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  int exit_code() const noexcept { return static_cast<int>(category(code_)); }

 private:
  ErrorCode code_;
};

}  // namespace gazesense
