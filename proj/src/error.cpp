#include "docintel/error.hpp"

namespace docintel {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kUnsupportedFormat: return "unsupported_format";
    case ErrorCode::kIoError: return "io_error";
    case ErrorCode::kParseError: return "parse_error";
    case ErrorCode::kEmptyQuery: return "empty_query";
    case ErrorCode::kPureNegationQuery: return "pure_negation_query";
    case ErrorCode::kDuplicateChunk: return "duplicate_chunk";
    case ErrorCode::kStoreClosed: return "store_closed";
    case ErrorCode::kUnknownChunk: return "unknown_chunk";
    case ErrorCode::kDuplicateId: return "duplicate_id";
    case ErrorCode::kZeroVector: return "zero_vector";
    case ErrorCode::kEmptyIndex: return "empty_index";
    case ErrorCode::kCorruptStore: return "corrupt_store";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kNetworkError: return "network_error";
    case ErrorCode::kHttpStatusError: return "http_status_error";
    case ErrorCode::kBackendUnavailable: return "backend_unavailable";
    case ErrorCode::kMissingVar: return "missing_var";
    case ErrorCode::kUnknownVar: return "unknown_var";
    case ErrorCode::kTemplateSyntax: return "template_syntax";
    case ErrorCode::kStructuredFailure: return "structured_failure";
    case ErrorCode::kEmptyQuestion: return "empty_question";
    case ErrorCode::kSingleClass: return "single_class";
    case ErrorCode::kEmptyExamples: return "empty_examples";
    case ErrorCode::kConfigParseError: return "config_parse_error";
    case ErrorCode::kUnknownKey: return "unknown_key";
    case ErrorCode::kInvalidValue: return "invalid_value";
    case ErrorCode::kPartialWriteRollback: return "partial_write_rollback";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kStoreEmpty: return "store_empty";
    case ErrorCode::kIngestInProgress: return "ingest_in_progress";
    case ErrorCode::kInternal: return "internal";
  }
  return "internal";
}

}  // namespace docintel
