#include "frame/error.h"

namespace frame {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kDuplicateId: return "duplicate_id";
    case ErrorCode::kZeroTokenCount: return "zero_token_count";
    case ErrorCode::kTokenCountMismatch: return "token_count_mismatch";
    case ErrorCode::kEmptyText: return "empty_text";
    case ErrorCode::kMissingText: return "missing_text";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kInvalidManifest: return "invalid_manifest";
    case ErrorCode::kNonPositivePerplexity: return "non_positive_perplexity";
    case ErrorCode::kMissingScore: return "missing_score";
    case ErrorCode::kUnknownId: return "unknown_id";
    case ErrorCode::kInsufficientSamples: return "insufficient_samples";
    case ErrorCode::kDegenerateDistribution: return "degenerate_distribution";
    case ErrorCode::kEmptyQuadrant: return "empty_quadrant";
    case ErrorCode::kMissingSplit: return "missing_split";
    case ErrorCode::kSizeMismatch: return "size_mismatch";
    case ErrorCode::kIdUniverseMismatch: return "id_universe_mismatch";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kEmptyGroup: return "empty_group";
    case ErrorCode::kNonFiniteInput: return "non_finite_input";
    case ErrorCode::kZeroSpectrum: return "zero_spectrum";
    case ErrorCode::kLengthMismatch: return "length_mismatch";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

}  // namespace frame
