#pragma once

#include <stdexcept>
#include <string>

namespace pear {

// Exit codes used by the command-line front end.
enum class ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kData = 2,
  kNumeric = 3,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const { return ExitCode::kData; }
  virtual const char* kind() const { return "error"; }
};

class UsageError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const override { return ExitCode::kUsage; }
  const char* kind() const override { return "usage"; }
};

// Malformed input, integrity violations, unusable datasets.
class DataError : public Error {
 public:
  enum class Code {
    kParse,
    kIntegrity,
    kEmptySupervision,
    kEmptySplit,
    kCoverage,
    kMissingAnchor,
    kMissingPair,
    kInvalidArgument,
    kIo,
  };

  DataError(Code code, const std::string& what) : Error(what), code_(code) {}
  Code code() const { return code_; }
  const char* kind() const override;

 private:
  Code code_;
};

// NaN, divergence or other numeric breakdown.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, long step = -1)
      : Error(what), step_(step) {}
  ExitCode exit_code() const override { return ExitCode::kNumeric; }
  const char* kind() const override { return "numeric"; }
  long step() const { return step_; }

 private:
  long step_;
};

inline const char* DataError::kind() const {
  switch (code_) {
    case Code::kParse: return "parse";
    case Code::kIntegrity: return "integrity";
    case Code::kEmptySupervision: return "empty_supervision";
    case Code::kEmptySplit: return "empty_split";
    case Code::kCoverage: return "coverage";
    case Code::kMissingAnchor: return "missing_anchor";
    case Code::kMissingPair: return "missing_pair";
    case Code::kInvalidArgument: return "invalid_argument";
    case Code::kIo: return "io";
  }
  return "data";
}

}  // namespace pear
