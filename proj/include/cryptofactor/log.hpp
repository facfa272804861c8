#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cryptofactor/errors.hpp"

namespace cryptofactor {

// Append-only stage log. Every skipped/dropped entity gets exactly one line
// with a machine-readable reason code. Content carries no timestamps so
// reruns on identical inputs are byte-identical.
class StageLog {
 public:
  void skip(const std::string& what, Errc reason, const std::string& detail);
  void note(const std::string& message);

  const std::vector<std::string>& lines() const { return lines_; }
  size_t count(Errc reason) const;

  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> lines_;
  std::map<Errc, size_t> counts_;
};

}  // namespace cryptofactor
