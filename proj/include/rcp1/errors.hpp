#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rcp1 {

// Base class for all library errors. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Structural problem in an input file (wrong row width, empty data section).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row)
      : Error(what + " (row " + std::to_string(row) + ")"), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

// A value violates a domain rule (non-finite entry, non-probability row, ...).
class ValueError : public Error {
 public:
  explicit ValueError(const std::string& what) : Error(what) {}
  ValueError(const std::string& what, std::size_t row, std::size_t col)
      : Error(what + " (row " + std::to_string(row) + ", col " +
              std::to_string(col) + ")"),
        row_(row),
        col_(col) {}
  std::size_t row() const { return row_; }
  std::size_t col() const { return col_; }

 private:
  std::size_t row_ = 0;
  std::size_t col_ = 0;
};

// Label index outside [0, n_labels).
class LabelError : public Error {
 public:
  explicit LabelError(const std::string& what) : Error(what) {}
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(what) {}
};

// Mismatched dimensions between aligned containers.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(what) {}
};

// (scheme, norm) pair for which no certificate is implemented.
class UnsupportedCertificate : public Error {
 public:
  explicit UnsupportedCertificate(const std::string& what) : Error(what) {}
};

// A required artifact file is absent (CLI exit code 3).
class MissingArtifact : public Error {
 public:
  explicit MissingArtifact(const std::string& what) : Error(what) {}
};

}  // namespace rcp1
