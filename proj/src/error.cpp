#include "deeptrade/error.hpp"

namespace deeptrade {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::NonPositivePrice: return "NonPositivePrice";
    case ErrorCode::DuplicateDate: return "DuplicateDate";
    case ErrorCode::UnknownTicker: return "UnknownTicker";
    case ErrorCode::BadSpec: return "BadSpec";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::BadSpan: return "BadSpan";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::TapeEmpty: return "TapeEmpty";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::EpisodeDone: return "EpisodeDone";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::IncompleteEpisode: return "IncompleteEpisode";
    case ErrorCode::EnvCountMismatch: return "EnvCountMismatch";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::EmptyPortfolio: return "EmptyPortfolio";
    case ErrorCode::DegenerateSeries: return "DegenerateSeries";
    case ErrorCode::UnwritableOutput: return "UnwritableOutput";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace deeptrade
