#include "error.hpp"

namespace lmcritic {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::CorruptModelFile: return "CorruptModelFile";
    case ErrorCode::ScorerUnavailable: return "ScorerUnavailable";
    case ErrorCode::Protocol: return "Protocol";
    case ErrorCode::EmptyEvalSet: return "EmptyEvalSet";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::MalformedData: return "MalformedData";
  }
  return "Unknown";
}

}  // namespace lmcritic
