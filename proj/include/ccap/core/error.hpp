#pragma once

#include <stdexcept>
#include <string>

namespace ccap {

// Values double as process exit codes for the command-line tool.
enum class ErrorKind : int {
  usage = 1,
  data = 2,
  training = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& what) : Error(ErrorKind::training, what) {}
};

// Throws the subclass matching `kind`.
[[noreturn]] inline void raise(ErrorKind kind, const std::string& what) {
  switch (kind) {
    case ErrorKind::usage: throw UsageError(what);
    case ErrorKind::data: throw DataError(what);
    case ErrorKind::training: throw TrainingError(what);
  }
  throw Error(kind, what);
}

}  // namespace ccap
