#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cryptofactor/calendar.hpp"
#include "cryptofactor/errors.hpp"

namespace cryptofactor {

// Minimal comma-separated table reader. No quoting: fields must not contain
// commas. Lines starting with '#' are provenance/comment lines and skipped.
class CsvFile {
 public:
  CsvFile(const std::filesystem::path& path,
          const std::vector<std::string>& required_columns);

  size_t col(std::string_view name) const;
  size_t row_count() const { return rows_.size(); }
  size_t line_number(size_t row) const { return line_no_[row]; }
  std::string_view field(size_t row, size_t c) const { return rows_[row][c]; }

  bool try_number(size_t row, size_t c, double& out) const;
  bool try_integer(size_t row, size_t c, long& out) const;
  bool try_date(size_t row, size_t c, Date& out) const;

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::string content_;
  std::vector<std::vector<std::string_view>> rows_;
  std::vector<size_t> line_no_;
  std::map<std::string, size_t, std::less<>> columns_;
};

// Collects per-row violations so a load reports every bad line at once.
class ErrorList {
 public:
  void add(Errc code, size_t line, const std::string& message);
  bool empty() const { return items_.empty(); }
  size_t size() const { return items_.size(); }
  Errc first_code() const { return items_.front().code; }
  // Throws DataError carrying the first code and all messages (capped).
  void throw_if_any(const std::string& path) const;

 private:
  struct Item {
    Errc code;
    size_t line;
    std::string message;
  };
  std::vector<Item> items_;
};

bool parse_double(std::string_view s, double& out);
bool parse_long(std::string_view s, long& out);

// printf-style "%.<sig>g" formatting used by all CSV writers.
std::string format_sig(double v, int significant_digits);

}  // namespace cryptofactor
