// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rvrank/common.hpp"

namespace rvrank::detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

inline std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

template <typename Int>
std::optional<Int> parse_int(std::string_view token) {
  Int v{};
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) return std::nullopt;
  return v;
}

inline std::optional<double> parse_double(std::string_view token) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) return std::nullopt;
  return v;
}

/// Line-oriented CSV reader that tracks 1-based line numbers and skips
/// leading '#' comment lines (collected for provenance).
class CsvReader {
 public:
  explicit CsvReader(const std::filesystem::path& path) : in_(path), name_(path.string()) {
    if (!in_) throw Error(ErrorCode::kIo, "cannot open: " + name_);
  }

  /// Reads comments then the header line; throws unless it equals `expected`.
  void expect_header(std::string_view expected) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      std::string_view v = strip_cr(line);
      if (!v.empty() && v.front() == '#') {
        comments_.emplace_back(v);
        continue;
      }
      if (v != expected) {
        throw Error(ErrorCode::kMalformedHeader, name_ + ":" + std::to_string(line_no_) +
                                                     ": expected header '" + std::string(expected) +
                                                     "', got '" + std::string(v) + "'");
      }
      return;
    }
    throw Error(ErrorCode::kMalformedHeader, name_ + ": missing header '" + std::string(expected) + "'");
  }

  /// Next non-empty data row, or nullopt at EOF.
  std::optional<std::vector<std::string_view>> next_row(std::size_t expected_fields) {
    while (std::getline(in_, current_)) {
      ++line_no_;
      std::string_view v = strip_cr(current_);
      if (v.empty()) continue;
      auto fields = split_csv(v);
      if (fields.size() != expected_fields) {
        fail("expected " + std::to_string(expected_fields) + " fields, got " +
             std::to_string(fields.size()));
      }
      return fields;
    }
    return std::nullopt;
  }

  [[noreturn]] void fail(const std::string& msg, ErrorCode code = ErrorCode::kMalformedRow) const {
    throw Error(code, name_ + ":" + std::to_string(line_no_) + ": " + msg);
  }

  std::size_t line_no() const { return line_no_; }
  const std::vector<std::string>& comments() const { return comments_; }

 private:
  std::ifstream in_;
  std::string name_;
  std::string current_;
  std::size_t line_no_ = 0;
  std::vector<std::string> comments_;
};

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open for writing: " + path.string());
  return out;
}

}  // namespace rvrank::detail
