#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace llmconf {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. `line` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConflictError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class AdjudicationRequired : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class RenderError : public Error {
 public:
  using Error::Error;
};

class ExtractionError : public Error {
 public:
  using Error::Error;
};

class OutOfRangeError : public ExtractionError {
 public:
  using ExtractionError::ExtractionError;
};

class NormalizationError : public Error {
 public:
  using Error::Error;
};

class EmptyCaseError : public Error {
 public:
  using Error::Error;
};

class CaseFailedError : public EmptyCaseError {
 public:
  using EmptyCaseError::EmptyCaseError;
};

class DegenerateLabelsError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

// Provider failures. `transient()` drives the retry loop.
class ProviderError : public Error {
 public:
  ProviderError(const std::string& what, bool transient, int attempts = 1)
      : Error(what), transient_(transient), attempts_(attempts) {}
  bool transient() const noexcept { return transient_; }
  // Number of attempts made before this error surfaced.
  int attempts() const noexcept { return attempts_; }

 private:
  bool transient_;
  int attempts_;
};

class ProviderUnavailable : public ProviderError {
 public:
  explicit ProviderUnavailable(const std::string& what, bool transient = true,
                               int attempts = 1)
      : ProviderError(what, transient, attempts) {}
};

class RateLimited : public ProviderError {
 public:
  explicit RateLimited(const std::string& what, int attempts = 1)
      : ProviderError(what, true, attempts) {}
};

class MissingKeyError : public ProviderError {
 public:
  explicit MissingKeyError(const std::string& what)
      : ProviderError(what, false) {}
};

}  // namespace llmconf
