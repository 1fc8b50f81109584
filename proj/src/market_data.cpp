#include "deeptrade/market_data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "deeptrade/csv.hpp"
#include "deeptrade/error.hpp"

namespace deeptrade::data {

std::string_view to_string(AssetClass c) {
  switch (c) {
    case AssetClass::Commodity: return "Commodity";
    case AssetClass::EquityIndex: return "EquityIndex";
    case AssetClass::FixedIncome: return "FixedIncome";
    case AssetClass::FX: return "FX";
  }
  return "Commodity";
}

std::string_view display_name(AssetClass c) {
  switch (c) {
    case AssetClass::Commodity: return "Commodity";
    case AssetClass::EquityIndex: return "Equity Index";
    case AssetClass::FixedIncome: return "Fixed Income";
    case AssetClass::FX: return "FX";
  }
  return "Commodity";
}

std::optional<AssetClass> parse_asset_class(std::string_view text) {
  std::string key;
  for (char ch : text) {
    if (ch == ' ' || ch == '_' || ch == '-') continue;
    key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  if (key == "commodity" || key == "commodities") return AssetClass::Commodity;
  if (key == "equityindex" || key == "equityindexes" || key == "equity") return AssetClass::EquityIndex;
  if (key == "fixedincome" || key == "fixedincomes" || key == "rates") return AssetClass::FixedIncome;
  if (key == "fx" || key == "forex" || key == "currency") return AssetClass::FX;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// PriceSeries

void PriceSeries::validate() const {
  if (dates.size() != closes.size()) {
    throw Error(ErrorCode::MalformedRow, ticker + ": dates and closes differ in length");
  }
  for (std::size_t i = 0; i < closes.size(); ++i) {
    if (!std::isfinite(closes[i])) {
      throw Error(ErrorCode::MalformedRow, ticker + ": non-finite close at " + format_date(dates[i]));
    }
    if (closes[i] <= 0.0) {
      throw Error(ErrorCode::NonPositivePrice, ticker + ": close " + csv::format_double(closes[i]) +
                                                   " at " + format_date(dates[i]));
    }
    if (i > 0 && dates[i] <= dates[i - 1]) {
      throw Error(ErrorCode::DuplicateDate, ticker + ": dates not strictly increasing at " +
                                                format_date(dates[i]));
    }
  }
}

std::size_t PriceSeries::lower_index(Date d) const {
  return static_cast<std::size_t>(std::lower_bound(dates.begin(), dates.end(), d) - dates.begin());
}

std::optional<std::size_t> PriceSeries::upper_index(Date d) const {
  const auto it = std::upper_bound(dates.begin(), dates.end(), d);
  if (it == dates.begin()) return std::nullopt;
  return static_cast<std::size_t>(it - dates.begin()) - 1;
}

PriceSeries PriceSeries::truncated_before(Date cutoff) const {
  PriceSeries out = *this;
  const std::size_t n = lower_index(cutoff);
  out.dates.resize(n);
  out.closes.resize(n);
  return out;
}

// ---------------------------------------------------------------------------
// InstrumentCatalog

InstrumentCatalog::InstrumentCatalog(std::vector<Instrument> entries) : entries_(std::move(entries)) {
  std::set<std::string> seen;
  for (const auto& e : entries_) {
    if (e.ticker.empty()) throw Error(ErrorCode::BadSpec, "catalog entry with empty ticker");
    if (!seen.insert(e.ticker).second) {
      throw Error(ErrorCode::BadSpec, "duplicate catalog ticker " + e.ticker);
    }
  }
}

InstrumentCatalog InstrumentCatalog::default_catalog() {
  using AC = AssetClass;
  return InstrumentCatalog({
      {"CC", "COCOA", AC::Commodity},
      {"DA", ".MILK III, Comp", AC::Commodity},
      {"GI", "GOLDMAN SAKS C. I.", AC::Commodity},
      {"JO", "ORANGE JUICE", AC::Commodity},
      {"KC", "COFFEE", AC::Commodity},
      {"KW", "WHEAT, KC", AC::Commodity},
      {"LB", "LUMBER", AC::Commodity},
      {"NR", "ROUGH RICE", AC::Commodity},
      {"SB", "SUGAR #11", AC::Commodity},
      {"ZA", "PALLADIUM, Electronic", AC::Commodity},
      {"ZC", "CORN, Electronic", AC::Commodity},
      {"ZF", "FEEDER CATTLE, Electronic", AC::Commodity},
      {"ZG", "GOLD, Electronic", AC::Commodity},
      {"ZH", "HEATING OIL, Electronic", AC::Commodity},
      {"ZI", "SILVER, Electronic", AC::Commodity},
      {"ZK", "COPPER, Electronic", AC::Commodity},
      {"ZL", "SOYBEAN OIL, Electronic", AC::Commodity},
      {"ZN", "NATURAL GAS, Electronic", AC::Commodity},
      {"ZO", "OATS, Electronic", AC::Commodity},
      {"ZP", "PLATINUM, electronic", AC::Commodity},
      {"ZR", "ROUGH RICE, Electronic", AC::Commodity},
      {"ZT", "LIVE CATTLE, Electronic", AC::Commodity},
      {"ZU", "CRUDE OIL, Electronic", AC::Commodity},
      {"ZW", "WHEAT, Electronic", AC::Commodity},
      {"ZZ", "LEAN HOGS, Electronic", AC::Commodity},
      {"CA", "CAC40 INDEX", AC::EquityIndex},
      {"EN", "NASDAQ, MINI", AC::EquityIndex},
      {"ER", "RUSSELL 2000, MINI", AC::EquityIndex},
      {"ES", "S & P 500, MINI", AC::EquityIndex},
      {"LX", "FTSE 100 INDEX", AC::EquityIndex},
      {"MD", "S&P 400 (Mini Electronic)", AC::EquityIndex},
      {"SC", "S & P 500, Composite", AC::EquityIndex},
      {"SP", "S & P 500, Day Session", AC::EquityIndex},
      {"XU", "DOW JONES EUROSTOXX50", AC::EquityIndex},
      {"XX", "DOW JONES STOXX 50", AC::EquityIndex},
      {"YM", "Mini Dow Jones ($5.00)", AC::EquityIndex},
      {"DT", "EURO BOND (BUND)", AC::FixedIncome},
      {"FB", "T-NOTE, 5-year Composite", AC::FixedIncome},
      {"TY", "T-NOTE, 10-year Composite", AC::FixedIncome},
      {"UB", "EURO BOBL", AC::FixedIncome},
      {"US", "T-BONDS, Composite", AC::FixedIncome},
      {"AN", "AUSTRALIAN, Day Session", AC::FX},
      {"BN", "BRITISH POUND, Composite", AC::FX},
      {"CN", "CANADIAN, Composite", AC::FX},
      {"DX", "US DOLLAR INDEX", AC::FX},
      {"FN", "EURO, Composite", AC::FX},
      {"JN", "JAPANESE YEN, Composite", AC::FX},
      {"MP", "MEXICAN PESO", AC::FX},
      {"NK", "NIKKEI INDEX", AC::FX},
      {"SN", "SWISS FRANC, Composite", AC::FX},
  });
}

InstrumentCatalog InstrumentCatalog::load(const std::filesystem::path& path) {
  const auto lines = csv::read_lines(path);
  if (lines.empty()) throw Error(ErrorCode::MalformedRow, path.string() + ": empty catalog");
  const auto header = csv::split(lines[0]);
  if (header.size() < 3 || header[0] != "ticker" || header.back() != "asset_class") {
    throw Error(ErrorCode::MalformedRow, path.string() + ": expected header ticker,description,asset_class");
  }
  std::vector<Instrument> entries;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto fields = csv::split(lines[i]);
    if (fields.size() < 3) {
      throw Error(ErrorCode::MalformedRow, path.string() + ": row " + std::to_string(i + 1));
    }
    const auto cls = parse_asset_class(fields.back());
    if (!cls) {
      throw Error(ErrorCode::MalformedRow,
                  path.string() + ": unknown asset class '" + fields.back() + "' on row " + std::to_string(i + 1));
    }
    // Descriptions may themselves contain commas.
    std::string description = fields[1];
    for (std::size_t k = 2; k + 1 < fields.size(); ++k) description += ", " + fields[k];
    entries.push_back({fields[0], description, *cls});
  }
  return InstrumentCatalog(std::move(entries));
}

void InstrumentCatalog::save(const std::filesystem::path& path) const {
  std::ostringstream os;
  os << "ticker,description,asset_class\n";
  for (const auto& e : entries_) os << e.ticker << ',' << e.description << ',' << to_string(e.asset_class) << '\n';
  csv::write_text(path, os.str());
}

const Instrument* InstrumentCatalog::find(std::string_view ticker) const {
  for (const auto& e : entries_) {
    if (e.ticker == ticker) return &e;
  }
  return nullptr;
}

std::size_t InstrumentCatalog::count(AssetClass c) const {
  return static_cast<std::size_t>(
      std::count_if(entries_.begin(), entries_.end(), [c](const Instrument& e) { return e.asset_class == c; }));
}

// ---------------------------------------------------------------------------
// CSV I/O

PriceSeries load_csv(const std::filesystem::path& path, const InstrumentCatalog& catalog,
                     const LoadOptions& options) {
  const auto lines = csv::read_lines(path);
  if (lines.empty()) throw Error(ErrorCode::MalformedRow, path.string() + ": empty file");

  const auto header = csv::split(lines[0]);
  int date_col = -1, close_col = -1, ticker_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "date") date_col = static_cast<int>(i);
    if (header[i] == "close") close_col = static_cast<int>(i);
    if (header[i] == "ticker") ticker_col = static_cast<int>(i);
  }
  if (date_col < 0 || close_col < 0) {
    throw Error(ErrorCode::MalformedRow, path.string() + ": header must contain date and close");
  }

  struct Row {
    Date date;
    double close;
    std::size_t line;
  };
  std::vector<Row> rows;
  std::string column_ticker;
  const std::size_t needed = static_cast<std::size_t>(std::max({date_col, close_col, ticker_col})) + 1;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = csv::split(lines[i]);
    const std::string where = path.string() + " row " + std::to_string(i + 1);
    if (fields.size() < needed) throw Error(ErrorCode::MalformedRow, where + ": too few columns");
    const auto date = parse_date(fields[static_cast<std::size_t>(date_col)]);
    if (!date) throw Error(ErrorCode::MalformedRow, where + ": bad date '" + fields[static_cast<std::size_t>(date_col)] + "'");
    const auto close = csv::parse_double(fields[static_cast<std::size_t>(close_col)]);
    if (!close || !std::isfinite(*close)) {
      throw Error(ErrorCode::MalformedRow, where + ": bad close '" + fields[static_cast<std::size_t>(close_col)] + "'");
    }
    if (*close <= 0.0) throw Error(ErrorCode::NonPositivePrice, where + ": close " + fields[static_cast<std::size_t>(close_col)]);
    if (ticker_col >= 0 && column_ticker.empty()) column_ticker = fields[static_cast<std::size_t>(ticker_col)];
    rows.push_back({*date, *close, i + 1});
  }

  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.date < b.date; });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].date == rows[i - 1].date) {
      throw Error(ErrorCode::DuplicateDate, path.string() + " row " + std::to_string(rows[i].line) + ": " +
                                                format_date(rows[i].date) + " repeated");
    }
  }

  PriceSeries series;
  if (options.ticker) {
    series.ticker = *options.ticker;
  } else if (!column_ticker.empty()) {
    series.ticker = column_ticker;
  } else {
    series.ticker = path.stem().string();
  }
  if (options.asset_class) {
    series.asset_class = *options.asset_class;
  } else if (const Instrument* inst = catalog.find(series.ticker)) {
    series.asset_class = inst->asset_class;
  } else {
    throw Error(ErrorCode::UnknownTicker,
                path.string() + ": ticker '" + series.ticker + "' not in catalog; supply an asset class");
  }
  series.dates.reserve(rows.size());
  series.closes.reserve(rows.size());
  for (const auto& r : rows) {
    series.dates.push_back(r.date);
    series.closes.push_back(r.close);
  }
  return series;
}

void write_csv(const PriceSeries& series, const std::filesystem::path& path) {
  std::string out = "date,close,ticker\n";
  out.reserve(series.size() * 32);
  for (std::size_t i = 0; i < series.size(); ++i) {
    out += format_date(series.dates[i]);
    out += ',';
    out += csv::format_double(series.closes[i]);
    out += ',';
    out += series.ticker;
    out += '\n';
  }
  csv::write_text(path, out);
}

// ---------------------------------------------------------------------------
// Synthetic data

PriceSeries generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.n_days < kMinSeriesLength) {
    throw Error(ErrorCode::BadSpec, "n_days must be at least " + std::to_string(kMinSeriesLength));
  }
  if (!(spec.annualized_vol >= 0.0) || !std::isfinite(spec.annualized_vol)) {
    throw Error(ErrorCode::BadSpec, "annualized_vol must be finite and >= 0");
  }
  if (!(spec.start_price > 0.0) || !std::isfinite(spec.start_price)) {
    throw Error(ErrorCode::BadSpec, "start_price must be > 0");
  }
  if (spec.drift_regimes.empty()) throw Error(ErrorCode::BadSpec, "at least one drift regime required");
  for (const auto& r : spec.drift_regimes) {
    if (r.length == 0) throw Error(ErrorCode::BadSpec, "drift regime lengths must be positive");
    if (!std::isfinite(r.annualized_drift)) throw Error(ErrorCode::BadSpec, "non-finite drift");
  }

  PriceSeries s;
  s.ticker = spec.ticker;
  s.asset_class = spec.asset_class;
  s.dates.reserve(spec.n_days);
  s.closes.reserve(spec.n_days);

  Date d = spec.start_date;
  while (!is_weekday(d)) d += std::chrono::days{1};

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double daily_vol = spec.annualized_vol / std::sqrt(252.0);

  std::size_t regime = 0;
  std::size_t left_in_regime = spec.drift_regimes[0].length;
  double log_level = 0.0;
  for (std::size_t t = 0; t < spec.n_days; ++t) {
    if (t > 0) {
      const double g = spec.drift_regimes[regime].annualized_drift / 252.0;
      double increment = g;
      if (daily_vol > 0.0) increment += -0.5 * daily_vol * daily_vol + daily_vol * normal(rng);
      log_level += increment;
      if (--left_in_regime == 0) {
        regime = (regime + 1) % spec.drift_regimes.size();
        left_in_regime = spec.drift_regimes[regime].length;
      }
      do {
        d += std::chrono::days{1};
      } while (!is_weekday(d));
    }
    s.dates.push_back(d);
    s.closes.push_back(spec.start_price * std::exp(log_level));
  }
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// Walk-forward schedule

std::vector<WalkForwardSplit> walk_forward_splits(const std::vector<Date>& series_dates,
                                                  int retrain_interval_years, int first_test_year) {
  if (retrain_interval_years < 1) throw Error(ErrorCode::BadSpec, "retrain interval must be >= 1 year");
  if (series_dates.empty()) throw Error(ErrorCode::InsufficientHistory, "no dates");
  const Date data_start = series_dates.front();
  const Date data_end = series_dates.back();
  if (year_of(data_start) >= first_test_year) {
    throw Error(ErrorCode::InsufficientHistory,
                "data starts " + format_date(data_start) + ", no training year before " +
                    std::to_string(first_test_year));
  }
  if (data_end < jan_first(first_test_year)) {
    throw Error(ErrorCode::InsufficientHistory,
                "data ends " + format_date(data_end) + ", before the first test year " + std::to_string(first_test_year));
  }

  std::vector<WalkForwardSplit> splits;
  for (int y = first_test_year; jan_first(y) <= data_end; y += retrain_interval_years) {
    WalkForwardSplit s;
    s.train = {data_start, jan_first(y) - std::chrono::days{1}};
    s.test = {jan_first(y), std::min(dec_last(y + retrain_interval_years - 1), data_end)};
    splits.push_back(s);
  }
  return splits;
}

}  // namespace deeptrade::data
