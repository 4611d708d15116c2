#include "gazesense/error.hpp"

namespace gazesense {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MalformedCsv: return "MalformedCsv";
    case ErrorCode::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::MetadataMismatch: return "MetadataMismatch";
    case ErrorCode::EmptyTrip: return "EmptyTrip";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NegativeInput: return "NegativeInput";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::TripTooShort: return "TripTooShort";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::AllInvalid: return "AllInvalid";
    case ErrorCode::MissingChannel: return "MissingChannel";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::MissingClass: return "MissingClass";
    case ErrorCode::NameMismatch: return "NameMismatch";
    case ErrorCode::TooFewParticipants: return "TooFewParticipants";
    case ErrorCode::MissingScenario: return "MissingScenario";
    case ErrorCode::NoPositives: return "NoPositives";
    case ErrorCode::Empty: return "Empty";
    case ErrorCode::InsufficientTrips: return "InsufficientTrips";
    case ErrorCode::MissingScores: return "MissingScores";
    case ErrorCode::BadParams: return "BadParams";
    case ErrorCode::BadGroupSize: return "BadGroupSize";
    case ErrorCode::BadConfig: return "BadConfig";
  }
  return "Unknown";
}

}  // namespace gazesense
