#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace typicality {

enum class ErrorCode {
  // datastore
  Io,
  Parse,
  Schema,
  Range,
  UnknownModel,
  // vector arithmetic
  DimMismatch,
  ZeroVector,
  NonFinite,
  EmptyInput,
  // scoring
  MissingLabelEmbedding,
  MissingLogits,
  MissingModality,
  TooFewExemplars,
  // statistics
  LengthMismatch,
  DegenerateInput,
  ZeroVariance,
  CollinearPredictors,
  NoImages,
  // pipeline
  NoEvaluableCategories,
  NoCommonCategories,
  Config,
};

/// Stable snake_case name, used as the reason code in warnings.
std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Malformed input line. `line` is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(ErrorCode::Parse, "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace typicality
