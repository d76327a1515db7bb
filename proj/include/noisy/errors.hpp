#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace noisy {

// Malformed input text. Line numbers are 1-based and count the header.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Timestamps that fail to increase strictly within one stream.
class OrderingError : public std::runtime_error {
 public:
  OrderingError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A fold whose training split cannot be used (e.g. a single class).
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(std::size_t fold, const std::string& what)
      : std::runtime_error("fold " + std::to_string(fold) + ": " + what),
        fold_(fold) {}

  std::size_t fold() const { return fold_; }

 private:
  std::size_t fold_;
};

// Pearson correlation requested on a constant series.
class UndefinedCorrelationError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace noisy
