#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace revq {

enum class ErrorCode {
  MalformedHeader,
  DimensionMismatch,
  EmptyInput,
  DegenerateSample,
  InsufficientOverlap,
  VideoTooShort,
  FrameTooSmall,
  ShapeMismatch,
  NonFiniteInput,
  GraphNotRecorded,
  DegenerateInput,
  DegeneratePredictions,
  EmptyTrainSet,
  NoEvaluableScenes,
  CheckpointNotFound,
  MalformedCheckpoint,
  MalformedCache,
  ParseError,
  InvalidArgument,
  IoError,
  UnknownAnnotator,
  EmptyVideoSet,
  UnknownSession,
  OutOfOrder,
  OffGridScore,
  SessionNotRating,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::InsufficientOverlap: return "InsufficientOverlap";
    case ErrorCode::VideoTooShort: return "VideoTooShort";
    case ErrorCode::FrameTooSmall: return "FrameTooSmall";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::GraphNotRecorded: return "GraphNotRecorded";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::DegeneratePredictions: return "DegeneratePredictions";
    case ErrorCode::EmptyTrainSet: return "EmptyTrainSet";
    case ErrorCode::NoEvaluableScenes: return "NoEvaluableScenes";
    case ErrorCode::CheckpointNotFound: return "CheckpointNotFound";
    case ErrorCode::MalformedCheckpoint: return "MalformedCheckpoint";
    case ErrorCode::MalformedCache: return "MalformedCache";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::UnknownAnnotator: return "UnknownAnnotator";
    case ErrorCode::EmptyVideoSet: return "EmptyVideoSet";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::OutOfOrder: return "OutOfOrder";
    case ErrorCode::OffGridScore: return "OffGridScore";
    case ErrorCode::SessionNotRating: return "SessionNotRating";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the ErrorCode values so
/// callers (and the CLI) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace revq
