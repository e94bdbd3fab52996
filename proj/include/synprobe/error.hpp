#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace synprobe {

/// Failure classes; the CLI maps them onto its exit codes.
enum class ErrorKind {
  kUsage = 1,
  kData = 2,
  kNumerical = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::kUsage, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::kNumerical, what) {}
};

/// Malformed bracketed treebank text. Line and column are 1-based.
class ParseError : public DataError {
 public:
  ParseError(const std::string& msg, std::size_t line, std::size_t column)
      : DataError(msg + " at line " + std::to_string(line) + ", column " +
                  std::to_string(column)),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Corrupt binary file (representation or checkpoint).
class FormatError : public DataError {
 public:
  FormatError(const std::string& msg, std::size_t offset)
      : DataError(msg + " (byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class AlignmentError : public DataError {
 public:
  explicit AlignmentError(const std::string& what) : DataError(what) {}
};

}  // namespace synprobe
