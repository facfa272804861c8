#include "cryptofactor/log.hpp"

#include <fstream>

namespace cryptofactor {

void StageLog::skip(const std::string& what, Errc reason,
                    const std::string& detail) {
  std::string line = "skip " + what + " reason=" + errc_name(reason);
  if (!detail.empty()) line += " " + detail;
  lines_.push_back(std::move(line));
  ++counts_[reason];
}

void StageLog::note(const std::string& message) {
  lines_.push_back("note " + message);
}

size_t StageLog::count(Errc reason) const {
  auto it = counts_.find(reason);
  return it == counts_.end() ? 0 : it->second;
}

void StageLog::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  for (const auto& line : lines_) out << line << '\n';
}

}  // namespace cryptofactor
