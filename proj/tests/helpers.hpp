#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "cryptofactor/ingest.hpp"

namespace testutil {

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto base = std::filesystem::temp_directory_path();
    path_ = base / ("cryptofactor_test_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

inline std::filesystem::path write_file(const std::filesystem::path& p,
                                        const std::string& content) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
  return p;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline cryptofactor::CoinSeries make_series(
    const std::vector<cryptofactor::CoinDay>& days) {
  cryptofactor::CoinSeries s;
  s.days = days;
  return s;
}

// N consecutive daily rows starting at `start` with constant volume/mcap.
inline cryptofactor::CoinSeries flat_series(cryptofactor::Date start, int n,
                                            double close, double volume,
                                            double mcap) {
  cryptofactor::CoinSeries s;
  for (int i = 0; i < n; ++i) {
    s.days.push_back(cryptofactor::CoinDay{start + i, close, volume, mcap});
  }
  return s;
}

}  // namespace testutil
