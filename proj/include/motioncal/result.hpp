#pragma once

#include <optional>
#include <string>
#include <utility>

namespace motioncal {

enum class ErrorCode {
  // geometry / camera
  NearIdentity,
  BehindCamera,
  // hand-eye
  InsufficientPairs,
  DegenerateAxes,
  RankDeficient,
  // icp
  InsufficientScans,
  NoOverlap,
  Diverged,
  // epipolar
  TooFewMatches,
  NoConsensus,
  CheiralityAmbiguous,
  // fusion
  NoVisiblePoints,
  TrackerFailure,
  DegenerateConfiguration,
  DegenerateGeometry,
  // pipeline
  InitializationFailed,
  DivergenceDetected,
  // io
  ParseError,
  IoError,
  InvalidArgument,
};

const char* error_code_name(ErrorCode code);

struct Error {
  ErrorCode code;
  std::string message;
};

// Minimal value-or-error carrier used by all solvers. No exceptions cross
// module boundaries; callers branch on ok().
template <typename T>
class Result {
 public:
  Result(T value) : value_(std::move(value)) {}
  Result(Error error) : error_(std::move(error)) {}
  Result(ErrorCode code, std::string message) : error_(Error{code, std::move(message)}) {}

  bool ok() const { return value_.has_value(); }
  explicit operator bool() const { return ok(); }

  const T& value() const& { return *value_; }
  T& value() & { return *value_; }
  T&& value() && { return *std::move(value_); }

  const Error& error() const { return *error_; }
  ErrorCode code() const { return error_->code; }

 private:
  std::optional<T> value_;
  std::optional<Error> error_;
};

}  // namespace motioncal
