#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace leap {

/// Root of every exception thrown by the library. The CLI maps
/// validation-type errors to exit code 1 and everything else to 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration value violates its documented constraints.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error("config error [" + field + "]: " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// A caller broke an API precondition (length mismatch, empty input, ...).
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& message) : Error("usage error: " + message) {}
};

/// A NaN or infinity showed up where a finite value is required.
class NumericFault : public Error {
 public:
  NumericFault(const std::string& where, std::size_t index)
      : Error("numeric fault in " + where + " at index " + std::to_string(index)),
        index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error("parse error at byte offset " + std::to_string(offset) + ": " + what),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("I/O error: " + message) {}
};

/// Landscape catalog construction or validation failed.
class CatalogError : public Error {
 public:
  explicit CatalogError(const std::string& message) : Error("catalog error: " + message) {}
};

/// Not enough valid points for a regression.
class FitError : public Error {
 public:
  explicit FitError(const std::string& message) : Error("fit error: " + message) {}
};

}  // namespace leap
