#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace docintel {

enum class ErrorCode {
  kInvalidArgument,
  kUnsupportedFormat,
  kIoError,
  kParseError,
  kEmptyQuery,
  kPureNegationQuery,
  kDuplicateChunk,
  kStoreClosed,
  kUnknownChunk,
  kDuplicateId,
  kZeroVector,
  kEmptyIndex,
  kCorruptStore,
  kDimensionMismatch,
  kNetworkError,
  kHttpStatusError,
  kBackendUnavailable,
  kMissingVar,
  kUnknownVar,
  kTemplateSyntax,
  kStructuredFailure,
  kEmptyQuestion,
  kSingleClass,
  kEmptyExamples,
  kConfigParseError,
  kUnknownKey,
  kInvalidValue,
  kPartialWriteRollback,
  kNotFound,
  kStoreEmpty,
  kIngestInProgress,
  kInternal,
};

// Machine-readable snake_case name, used verbatim as ApiError.code.
std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        nlohmann::json detail = nullptr)
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const nlohmann::json& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  nlohmann::json detail_;
};

// Query syntax error; position is a 0-based character index into the query.
class ParseError : public Error {
 public:
  ParseError(std::size_t position, const std::string& what)
      : Error(ErrorCode::kParseError,
              "parse error at position " + std::to_string(position) + ": " +
                  what,
              nlohmann::json{{"position", position}, {"reason", what}}),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class CorruptStore : public Error {
 public:
  CorruptStore(const std::string& file, std::uint64_t offset,
               const std::string& what)
      : Error(ErrorCode::kCorruptStore,
              file + ": corrupt at byte " + std::to_string(offset) + ": " + what,
              nlohmann::json{{"file", file}, {"offset", offset}}),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace docintel
