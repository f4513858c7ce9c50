#pragma once

#include <stdexcept>
#include <string>

namespace pqpan {

/// Base of every error raised by the model. The CLI maps `Error` to exit
/// code 3 and `IoError` to exit code 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class UnknownScheme : public Error {
 public:
  explicit UnknownScheme(const std::string& name)
      : Error("unknown scheme: " + name) {}
};

class UnsupportedScheme : public Error {
 public:
  using Error::Error;
};

/// CSV parse failure; `row` is 1-based and counts the header line.
class ParseError : public Error {
 public:
  ParseError(std::size_t row, std::size_t column, const std::string& what)
      : Error("parse error at row " + std::to_string(row) + ", column " +
              std::to_string(column) + ": " + what),
        row_(row),
        column_(column) {}

  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class SizeMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class InvalidProfile : public Error {
 public:
  using Error::Error;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

class HandshakeFailure : public Error {
 public:
  using Error::Error;
};

class NotEstablished : public Error {
 public:
  using Error::Error;
};

class BackendUnavailable : public Error {
 public:
  using Error::Error;
};

}  // namespace pqpan
