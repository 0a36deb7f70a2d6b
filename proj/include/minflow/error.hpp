#ifndef MINFLOW_ERROR_HPP_
#define MINFLOW_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace minflow {

enum class Errc {
  ShapeMismatch,
  DomainError,
  InvalidShape,
  InvalidArgument,
  DuplicateName,
  ArityError,
  UnknownInput,
  UnknownNode,
  GraphFrozen,
  NotScalarLoss,
  NonDifferentiableKind,
  HigherOrderGradient,
  EmptyGraph,
  AlreadyInitialized,
  NotInitialized,
  MissingFeed,
  NoTrainableVariables,
  IoError,
  ParseError,
  BadLabel,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::DomainError: return "DomainError";
    case Errc::InvalidShape: return "InvalidShape";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DuplicateName: return "DuplicateName";
    case Errc::ArityError: return "ArityError";
    case Errc::UnknownInput: return "UnknownInput";
    case Errc::UnknownNode: return "UnknownNode";
    case Errc::GraphFrozen: return "GraphFrozen";
    case Errc::NotScalarLoss: return "NotScalarLoss";
    case Errc::NonDifferentiableKind: return "NonDifferentiableKind";
    case Errc::HigherOrderGradient: return "HigherOrderGradient";
    case Errc::EmptyGraph: return "EmptyGraph";
    case Errc::AlreadyInitialized: return "AlreadyInitialized";
    case Errc::NotInitialized: return "NotInitialized";
    case Errc::MissingFeed: return "MissingFeed";
    case Errc::NoTrainableVariables: return "NoTrainableVariables";
    case Errc::IoError: return "IoError";
    case Errc::ParseError: return "ParseError";
    case Errc::BadLabel: return "BadLabel";
  }
  return "Unknown";
}

/// Every failure in the library surfaces as an Error carrying a code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Data ingestion error tied to a 1-based input line (0 when no line applies).
class DataError : public Error {
 public:
  DataError(Errc code, std::size_t line, const std::string& message)
      : Error(code, "line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace minflow

#endif  // MINFLOW_ERROR_HPP_
