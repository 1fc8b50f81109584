#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "deeptrade/date.hpp"

namespace deeptrade::data {

enum class AssetClass { Commodity, EquityIndex, FixedIncome, FX };

inline constexpr AssetClass kAllAssetClasses[] = {AssetClass::Commodity, AssetClass::EquityIndex,
                                                  AssetClass::FixedIncome, AssetClass::FX};

std::string_view to_string(AssetClass c);
// Accepts the canonical names plus a few spellings ("Equity Index", "FixedIncome", "fx").
std::optional<AssetClass> parse_asset_class(std::string_view text);
// Display label used in report tables ("Commodity", "Equity Index", ...).
std::string_view display_name(AssetClass c);

// Shortest history from which a full feature row can be computed: a 252-day
// lookback, a 63-day price std window and one tradable day.
inline constexpr std::size_t kMinSeriesLength = 316;

// Daily close prices of one continuous (ratio-adjusted) contract.
struct PriceSeries {
  std::string ticker;
  AssetClass asset_class = AssetClass::Commodity;
  std::vector<Date> dates;
  std::vector<double> closes;

  std::size_t size() const { return closes.size(); }

  // Throws Error{DuplicateDate, MalformedRow, NonPositivePrice} when the
  // dates are not strictly increasing or a close is non-finite or <= 0.
  void validate() const;

  // First index with dates[i] >= d (size() if none).
  std::size_t lower_index(Date d) const;
  // Last index with dates[i] <= d, or nullopt.
  std::optional<std::size_t> upper_index(Date d) const;

  // Copy truncated to dates strictly before `cutoff`.
  PriceSeries truncated_before(Date cutoff) const;
};

struct Instrument {
  std::string ticker;
  std::string description;
  AssetClass asset_class;
};

class InstrumentCatalog {
 public:
  InstrumentCatalog() = default;
  explicit InstrumentCatalog(std::vector<Instrument> entries);

  // The 50-contract universe: 25 commodities, 11 equity indexes, 5 fixed
  // income and 9 FX contracts.
  static InstrumentCatalog default_catalog();

  // CSV with header `ticker,description,asset_class`.
  static InstrumentCatalog load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  const Instrument* find(std::string_view ticker) const;
  const std::vector<Instrument>& entries() const { return entries_; }
  std::size_t count(AssetClass c) const;

 private:
  std::vector<Instrument> entries_;
};

struct LoadOptions {
  // Used when the file has no `ticker` column.
  std::optional<std::string> ticker;
  // Required when the ticker is absent from the catalog.
  std::optional<AssetClass> asset_class;
};

// Reads `date,close[,ticker]` (extra columns ignored). Rows are sorted by date
// on load. Ticker comes from options, then a `ticker` column, then the file
// stem.
PriceSeries load_csv(const std::filesystem::path& path, const InstrumentCatalog& catalog,
                     const LoadOptions& options = {});

// Writes `date,close,ticker` with shortest round-trip formatting.
void write_csv(const PriceSeries& series, const std::filesystem::path& path);

struct DriftRegime {
  std::size_t length = 0;        // trading days
  double annualized_drift = 0.0; // continuously compounded
};

struct SyntheticSpec {
  std::string ticker = "SYN";
  AssetClass asset_class = AssetClass::Commodity;
  std::size_t n_days = 0;
  // Cycled when their total length is shorter than n_days.
  std::vector<DriftRegime> drift_regimes;
  double annualized_vol = 0.15;
  double start_price = 100.0;
  Date start_date = make_date(2005, 1, 3);
};

// Geometric Brownian motion on a Monday-Friday calendar with piecewise-constant
// drift: log p_{t+1} = log p_t + (g/252 - s^2/2) + s Z, s = vol/sqrt(252).
// Bit-identical for equal (spec, seed).
PriceSeries generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

struct DateRange {
  Date start;
  Date end;  // inclusive

  bool contains(Date d) const { return d >= start && d <= end; }
  friend bool operator==(const DateRange&, const DateRange&) = default;
};

struct WalkForwardSplit {
  DateRange train;
  DateRange test;
  friend bool operator==(const WalkForwardSplit&, const WalkForwardSplit&) = default;
};

// Expanding-window schedule. The first test block starts on Jan 1 of
// first_test_year and each block spans retrain_interval_years calendar years;
// the last block is truncated at the final data date. Every train range starts
// at the first data date and ends the day before its test block.
std::vector<WalkForwardSplit> walk_forward_splits(const std::vector<Date>& series_dates,
                                                  int retrain_interval_years, int first_test_year);

}  // namespace deeptrade::data
