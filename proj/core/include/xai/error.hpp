#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xai {

// Three families map onto the CLI exit codes: bad configuration, bad data,
// and failures during a computation.
enum class ErrorCategory { config, data, computation };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorCategory::config, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what)
      : Error(ErrorCategory::data, what) {}
};

class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

class ImputeError : public DataError {
 public:
  using DataError::DataError;
};

class SplitError : public DataError {
 public:
  using DataError::DataError;
};

class FoldError : public DataError {
 public:
  using DataError::DataError;
};

class ComputeError : public Error {
 public:
  explicit ComputeError(const std::string& what)
      : Error(ErrorCategory::computation, what) {}
};

class FitError : public ComputeError {
 public:
  using ComputeError::ComputeError;
};

}  // namespace xai
