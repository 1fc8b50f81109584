#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace deeptrade {

enum class ErrorCode {
  MalformedRow,
  NonPositivePrice,
  DuplicateDate,
  UnknownTicker,
  BadSpec,
  InsufficientHistory,
  BadSpan,
  NonFiniteInput,
  TapeEmpty,
  ShapeMismatch,
  OutOfRange,
  EpisodeDone,
  EmptyBatch,
  IncompleteEpisode,
  EnvCountMismatch,
  DivergedLoss,
  EmptyPortfolio,
  DegenerateSeries,
  UnwritableOutput,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace deeptrade
