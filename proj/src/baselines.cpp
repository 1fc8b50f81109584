#include "deeptrade/baselines.hpp"

#include <cmath>
#include <sstream>

#include "deeptrade/csv.hpp"
#include "deeptrade/error.hpp"
#include "deeptrade/indicators.hpp"

namespace deeptrade::baselines {

namespace {

double combined_macd(std::span<const std::vector<double>> per_scale, std::size_t t, MacdCombine combine) {
  double sum = 0.0;
  for (const auto& m : per_scale) sum += m[t];
  return combine == MacdCombine::Average ? sum / static_cast<double>(per_scale.size()) : sum;
}

std::vector<std::vector<double>> macd_columns(std::span<const double> prices, const BaselineSpec& spec) {
  if (spec.macd_scales.empty()) throw Error(ErrorCode::BadSpec, "MACD baseline needs at least one scale pair");
  std::vector<std::vector<double>> out;
  for (const auto& [s, l] : spec.macd_scales) out.push_back(indicators::macd_raw(prices, s, l));
  return out;
}

}  // namespace

std::string_view to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::Long: return "Long";
    case BaselineKind::SignR: return "Sign(R)";
    case BaselineKind::MacdSignal: return "MACD";
  }
  return "?";
}

std::optional<BaselineKind> parse_baseline(std::string_view text) {
  if (text == "Long" || text == "long") return BaselineKind::Long;
  if (text == "Sign(R)" || text == "sign" || text == "signr") return BaselineKind::SignR;
  if (text == "MACD" || text == "macd") return BaselineKind::MacdSignal;
  return std::nullopt;
}

double sign_momentum(std::span<const double> prices, std::size_t t) {
  if (t < kMomentumLookback || t >= prices.size()) {
    throw Error(ErrorCode::InsufficientHistory, "sign momentum needs 252 days of history");
  }
  const double diff = prices[t] - prices[t - kMomentumLookback];
  return diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
}

double phi(double x) { return x * std::exp(-x * x / 4.0) / kPhiScale; }

double macd_signal(std::span<const double> prices, std::size_t t, const BaselineSpec& spec) {
  if (t >= prices.size()) throw Error(ErrorCode::OutOfRange, "MACD signal index past the series end");
  if (t < indicators::kMacdFirstIndex) throw Error(ErrorCode::InsufficientHistory, "MACD signal needs 316 days of history");
  const auto cols = macd_columns(prices.first(t + 1), spec);
  return phi(combined_macd(cols, t, spec.combine));
}

std::vector<double> positions(std::span<const double> prices, std::size_t first, std::size_t last,
                              const BaselineSpec& spec) {
  if (first > last || last >= prices.size()) throw Error(ErrorCode::OutOfRange, "baseline position range");
  std::vector<double> out;
  out.reserve(last - first + 1);
  switch (spec.kind) {
    case BaselineKind::Long:
      out.assign(last - first + 1, long_only());
      break;
    case BaselineKind::SignR:
      for (std::size_t t = first; t <= last; ++t) out.push_back(sign_momentum(prices, t));
      break;
    case BaselineKind::MacdSignal: {
      if (first < indicators::kMacdFirstIndex) {
        throw Error(ErrorCode::InsufficientHistory, "MACD signal needs 316 days of history");
      }
      const auto cols = macd_columns(prices.first(last + 1), spec);
      for (std::size_t t = first; t <= last; ++t) out.push_back(phi(combined_macd(cols, t, spec.combine)));
      break;
    }
  }
  return out;
}

void write_positions_csv(std::span<const Date> dates, std::span<const double> positions,
                         const std::filesystem::path& path) {
  if (dates.size() != positions.size()) throw Error(ErrorCode::ShapeMismatch, "dates and positions differ in length");
  std::ostringstream os;
  os << "date,position\n";
  for (std::size_t i = 0; i < dates.size(); ++i) os << format_date(dates[i]) << ',' << csv::format_double(positions[i]) << '\n';
  csv::write_text(path, os.str());
}

}  // namespace deeptrade::baselines
