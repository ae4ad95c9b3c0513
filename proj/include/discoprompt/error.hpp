#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace discoprompt {

// Error families map one-to-one onto CLI exit codes.
enum class ErrorKind {
  validation = 1,
  backend = 2,
  data = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

// Raised for malformed configs, templates, instances and out-of-range
// arguments. `subject` names the offending node/field when one exists.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what, std::string subject = {})
      : Error(ErrorKind::validation, what), subject_(std::move(subject)) {}

  const std::string& subject() const noexcept { return subject_; }

 private:
  std::string subject_;
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

enum class BackendFailure {
  timeout,
  malformed_payload,
  invalid_distribution,
  http_status,
  missing_role,
};

inline const char* to_string(BackendFailure f) {
  switch (f) {
    case BackendFailure::timeout: return "timeout";
    case BackendFailure::malformed_payload: return "malformed_payload";
    case BackendFailure::invalid_distribution: return "invalid_distribution";
    case BackendFailure::http_status: return "http_status";
    case BackendFailure::missing_role: return "missing_role";
  }
  return "unknown";
}

class BackendError : public Error {
 public:
  BackendError(BackendFailure failure, const std::string& what)
      : Error(ErrorKind::backend, std::string(to_string(failure)) + ": " + what),
        failure_(failure) {}

  BackendFailure failure() const noexcept { return failure_; }

 private:
  BackendFailure failure_;
};

}  // namespace discoprompt
