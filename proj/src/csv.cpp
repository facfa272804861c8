#include "cryptofactor/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cryptofactor {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace

CsvFile::CsvFile(const std::filesystem::path& path,
                 const std::vector<std::string>& required_columns)
    : path_(path.string()) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError(Errc::missing_artifact, "cannot open file: " + path_);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  content_ = ss.str();

  std::vector<std::string_view> header;
  size_t line_no = 0;
  size_t pos = 0;
  bool have_header = false;
  while (pos <= content_.size()) {
    size_t eol = content_.find('\n', pos);
    std::string_view line;
    if (eol == std::string::npos) {
      line = std::string_view(content_).substr(pos);
      pos = content_.size() + 1;
    } else {
      line = std::string_view(content_).substr(pos, eol - pos);
      pos = eol + 1;
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    if (!have_header) {
      header = split_fields(line);
      for (size_t i = 0; i < header.size(); ++i) {
        columns_.emplace(std::string(header[i]), i);
      }
      have_header = true;
      continue;
    }
    auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw DataError(Errc::bad_value,
                      path_ + ":" + std::to_string(line_no) + ": expected " +
                          std::to_string(header.size()) + " fields, got " +
                          std::to_string(fields.size()));
    }
    rows_.push_back(std::move(fields));
    line_no_.push_back(line_no);
  }
  if (!have_header) {
    throw DataError(Errc::missing_column, path_ + ": no header row");
  }
  for (const auto& name : required_columns) {
    if (!columns_.count(name)) {
      throw DataError(Errc::missing_column,
                      path_ + ": missing required column '" + name + "'");
    }
  }
}

size_t CsvFile::col(std::string_view name) const {
  auto it = columns_.find(name);
  if (it == columns_.end()) {
    throw DataError(Errc::missing_column,
                    path_ + ": missing column '" + std::string(name) + "'");
  }
  return it->second;
}

bool CsvFile::try_number(size_t row, size_t c, double& out) const {
  return parse_double(rows_[row][c], out);
}

bool CsvFile::try_integer(size_t row, size_t c, long& out) const {
  return parse_long(rows_[row][c], out);
}

bool CsvFile::try_date(size_t row, size_t c, Date& out) const {
  return try_parse_date(rows_[row][c], out);
}

void ErrorList::add(Errc code, size_t line, const std::string& message) {
  items_.push_back(Item{code, line, message});
}

void ErrorList::throw_if_any(const std::string& path) const {
  if (items_.empty()) return;
  constexpr size_t kMaxReported = 20;
  std::string msg = path + ": " + std::to_string(items_.size()) +
                    " invalid row(s):";
  for (size_t i = 0; i < items_.size() && i < kMaxReported; ++i) {
    msg += "\n  line " + std::to_string(items_[i].line) + ": [" +
           errc_name(items_[i].code) + "] " + items_[i].message;
  }
  if (items_.size() > kMaxReported) {
    msg += "\n  ... " + std::to_string(items_.size() - kMaxReported) + " more";
  }
  throw DataError(items_.front().code, msg);
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

bool parse_long(std::string_view s, long& out) {
  if (s.empty()) return false;
  auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

std::string format_sig(double v, int significant_digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", significant_digits, v);
  return buf;
}

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::missing_column: return "missing_column";
    case Errc::bad_numeric: return "bad_numeric";
    case Errc::bad_value: return "bad_value";
    case Errc::duplicate_key: return "duplicate_key";
    case Errc::empty_series: return "empty_series";
    case Errc::empty_universe: return "empty_universe";
    case Errc::too_few_coins: return "too_few_coins";
    case Errc::empty_cell: return "empty_cell";
    case Errc::too_few_observations: return "too_few_observations";
    case Errc::singular_design: return "singular_design";
    case Errc::rank_deficient: return "rank_deficient";
    case Errc::underdetermined: return "underdetermined";
    case Errc::too_few_groups: return "too_few_groups";
    case Errc::absorbed: return "absorbed";
    case Errc::empty_panel: return "empty_panel";
    case Errc::invalid_config: return "invalid_config";
    case Errc::missing_artifact: return "missing_artifact";
    case Errc::no_riskfree: return "no_riskfree";
    case Errc::gap_break: return "gap_break";
  }
  return "unknown";
}

}  // namespace cryptofactor
