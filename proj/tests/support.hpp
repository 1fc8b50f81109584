#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "deeptrade/date.hpp"
#include "deeptrade/market_data.hpp"

namespace testing_support {

using deeptrade::Date;

// Geometric random walk with daily log-return std `vol`.
inline std::vector<double> random_walk(std::size_t n, std::uint64_t seed, double vol = 0.01, double start = 100.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> p(n);
  double logp = std::log(start);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = std::exp(logp);
    logp += vol * z(rng);
  }
  return p;
}

inline std::vector<Date> weekdays(std::size_t n, Date start = deeptrade::make_date(2005, 1, 3)) {
  std::vector<Date> out;
  for (Date d = start; out.size() < n; d += std::chrono::days{1}) {
    if (deeptrade::is_weekday(d)) out.push_back(d);
  }
  return out;
}

inline deeptrade::data::PriceSeries make_series(std::vector<double> closes, std::string ticker = "TST",
                                                deeptrade::data::AssetClass cls = deeptrade::data::AssetClass::Commodity,
                                                Date start = deeptrade::make_date(2005, 1, 3)) {
  deeptrade::data::PriceSeries s;
  s.ticker = std::move(ticker);
  s.asset_class = cls;
  s.dates = weekdays(closes.size(), start);
  s.closes = std::move(closes);
  return s;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("deeptrade_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::FILE* f = std::fopen(p.string().c_str(), "wb");
  std::fwrite(text.data(), 1, text.size(), f);
  std::fclose(f);
}

inline std::string read_file(const std::filesystem::path& p) {
  std::string out;
  std::FILE* f = std::fopen(p.string().c_str(), "rb");
  if (!f) return out;
  char buf[65536];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) out.append(buf, n);
  std::fclose(f);
  return out;
}

}  // namespace testing_support
