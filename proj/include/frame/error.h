#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace frame {

enum class ErrorCode {
  kParse,
  kDuplicateId,
  kZeroTokenCount,
  kTokenCountMismatch,
  kEmptyText,
  kMissingText,
  kIo,
  kInvalidManifest,
  kNonPositivePerplexity,
  kMissingScore,
  kUnknownId,
  kInsufficientSamples,
  kDegenerateDistribution,
  kEmptyQuadrant,
  kMissingSplit,
  kSizeMismatch,
  kIdUniverseMismatch,
  kDomain,
  kEmptyGroup,
  kNonFiniteInput,
  kZeroSpectrum,
  kLengthMismatch,
  kConfig,
};

std::string_view error_code_name(ErrorCode code);

// Every failure raised by the library carries a code so callers (and the
// CLI exit-code mapping) can react without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace frame
