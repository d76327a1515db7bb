#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "noisy/errors.hpp"

namespace noisy::detail {

// Iterates LF-terminated lines; a trailing CR is dropped, and a final empty
// line (from the terminating LF) is not reported.
class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}

  std::optional<std::string_view> next() {
    if (pos_ >= text_.size()) return std::nullopt;
    std::size_t end = text_.find('\n', pos_);
    if (end == std::string_view::npos) end = text_.size();
    std::string_view line = text_.substr(pos_, end - pos_);
    pos_ = end + 1;
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
  }

  std::size_t line_no() const { return line_no_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline std::optional<double> to_double(std::string_view field) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || field.empty() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

inline double parse_number(std::string_view field, std::size_t line,
                           std::string_view column) {
  const auto v = to_double(field);
  if (!v) {
    throw ParseError(line, "non-numeric value '" + std::string(field) +
                               "' in column " + std::string(column));
  }
  return *v;
}

inline void expect_header(std::optional<std::string_view> line,
                          std::string_view header) {
  if (!line || *line != header) {
    throw ParseError(1, "expected header '" + std::string(header) + "'");
  }
}

inline void expect_columns(const std::vector<std::string_view>& fields,
                           std::size_t want, std::size_t line) {
  if (fields.size() != want) {
    throw ParseError(line, "expected " + std::to_string(want) +
                               " columns, found " +
                               std::to_string(fields.size()));
  }
}

}  // namespace noisy::detail
