#pragma once

#include <stdexcept>
#include <string>

namespace lmcritic {

enum class ErrorCode {
  InvalidArgument,
  Io,
  EmptyCorpus,
  CorruptModelFile,
  ScorerUnavailable,
  Protocol,
  EmptyEvalSet,
  EmptyDataset,
  LengthMismatch,
  MalformedData,
};

const char* error_code_name(ErrorCode code) noexcept;

// Every failure raised by the core library carries one of the codes above so
// that the C boundary can translate it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace lmcritic
