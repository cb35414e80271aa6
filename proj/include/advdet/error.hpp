#pragma once

#include <stdexcept>
#include <string>

namespace advdet {

// Error categories. The CLI maps these onto distinct process exit codes;
// library callers can switch on them directly.
enum class ErrorCode {
  kUsage,          // bad flags / bad arguments to a command
  kMissingFile,    // input path does not exist or cannot be opened
  kSchema,         // malformed record, bad field, label out of range
  kEmptyText,      // example tokenizes to nothing (unusable)
  kCorrupt,        // truncated or damaged binary file
  kVersion,        // wrong magic bytes / unsupported format version
  kTooFew,         // not enough samples to fit a distribution
  kNonFinite,      // NaN/Inf where a finite value is required
  kDisjointness,   // eval halves share a source_id
  kInsufficient,   // not enough natural examples for a balanced eval set
  kInvalidArgument,// contract violation (bad config value, unresolved id, ...)
  kNumeric,        // diverged optimization, non-finite loss
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUsage: return "usage";
    case ErrorCode::kMissingFile: return "missing-file";
    case ErrorCode::kSchema: return "schema";
    case ErrorCode::kEmptyText: return "empty-text";
    case ErrorCode::kCorrupt: return "corrupt";
    case ErrorCode::kVersion: return "version";
    case ErrorCode::kTooFew: return "too-few";
    case ErrorCode::kNonFinite: return "non-finite";
    case ErrorCode::kDisjointness: return "disjointness";
    case ErrorCode::kInsufficient: return "insufficient";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kNumeric: return "numeric";
  }
  return "unknown";
}

}  // namespace advdet
