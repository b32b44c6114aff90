#ifndef DELTAGRAD_ERROR_HPP
#define DELTAGRAD_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace deltagrad {

/// Broad error classes. The CLI maps each class to its own exit code.
enum class ErrorKind {
  invalid_argument = 2,
  dimension_mismatch = 3,
  parse = 4,
  cache_format = 5,
  fingerprint_mismatch = 6,
  divergence = 7,
  numerical = 8,
  privacy = 9,
  io = 10,
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

class InvalidArgument : public Error {
public:
  explicit InvalidArgument(const std::string& what)
    : Error(ErrorKind::invalid_argument, what) {}
};

class DimensionMismatch : public Error {
public:
  explicit DimensionMismatch(const std::string& what)
    : Error(ErrorKind::dimension_mismatch, "dimension mismatch: " + what) {}
};

class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t line)
    : Error(ErrorKind::parse, "line " + std::to_string(line) + ": " + what),
      line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Bad magic, bad version and truncated body are distinguished by `reason`.
class CacheFormatError : public Error {
public:
  enum class Reason { bad_magic, bad_version, truncated_body, inconsistent_header };

  CacheFormatError(Reason reason, const std::string& what)
    : Error(ErrorKind::cache_format, what), reason_(reason) {}

  Reason reason() const noexcept { return reason_; }

private:
  Reason reason_;
};

class FingerprintMismatch : public Error {
public:
  FingerprintMismatch()
    : Error(ErrorKind::fingerprint_mismatch,
            "fingerprint mismatch: history was recorded on a different dataset") {}
};

class DivergenceError : public Error {
public:
  DivergenceError(const std::string& stage, std::size_t iteration)
    : Error(ErrorKind::divergence,
            stage + ": non-finite value at iteration " + std::to_string(iteration)),
      iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

private:
  std::size_t iteration_;
};

/// Raised when the compact quasi-Hessian middle matrix is not positive definite.
class CholeskyFailure : public Error {
public:
  CholeskyFailure()
    : Error(ErrorKind::numerical, "cholesky factorization of the compact middle matrix failed") {}
};

class PrivacyError : public Error {
public:
  explicit PrivacyError(const std::string& what) : Error(ErrorKind::privacy, what) {}
};

class IoError : public Error {
public:
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

}  // namespace deltagrad

#endif  // DELTAGRAD_ERROR_HPP
