#pragma once

#include <stdexcept>
#include <string>

namespace iegan {

// Exit codes shared by the CLI and the error categories below.
enum class ErrorCategory : int {
  Config = 2,
  Data = 3,
  Numeric = 4,
  Io = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, std::string message)
      : std::runtime_error(std::move(message)), category_(category) {}

  ErrorCategory category() const { return category_; }
  int exit_code() const { return static_cast<int>(category_); }

 private:
  ErrorCategory category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(std::string message)
      : Error(ErrorCategory::Config, std::move(message)) {}
};

class DataError : public Error {
 public:
  explicit DataError(std::string message)
      : Error(ErrorCategory::Data, std::move(message)) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(std::string message)
      : Error(ErrorCategory::Numeric, std::move(message)) {}
};

class IoError : public Error {
 public:
  explicit IoError(std::string message)
      : Error(ErrorCategory::Io, std::move(message)) {}
};

}  // namespace iegan
