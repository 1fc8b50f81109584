#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deeptrade/agents.hpp"
#include "deeptrade/baselines.hpp"
#include "deeptrade/date.hpp"
#include "deeptrade/env.hpp"
#include "deeptrade/market_data.hpp"

namespace deeptrade::eval {

// Net trade returns of one strategy on one contract. Entry k is the return of
// the position taken at decision index first_decision + k, dated on the day
// it is realized.
struct TradeReturnSeries {
  std::string strategy;
  std::string ticker;
  data::AssetClass asset_class = data::AssetClass::Commodity;
  std::size_t first_decision = 0;
  std::vector<Date> dates;
  std::vector<double> returns;
  std::vector<double> positions;   // scaled position held over the period
  std::vector<double> turnover;    // |change in scaled position| at the decision
  std::vector<double> cost_value;  // bp * price * turnover, currency per contract
};

// Steps a frozen position sequence through the reward accounting with
// cfg.bp as the cost rate. positions[k] is the target for decision first + k.
TradeReturnSeries backtest_contract(const agents::ContractData& contract, std::size_t first_decision,
                                    std::span<const double> positions, const env::RewardConfig& cfg,
                                    std::string strategy);

// Positions in [-1, 1] for decisions first..last of a contract.
using PositionSource =
    std::function<std::vector<double>(const agents::ContractData&, std::size_t first, std::size_t last)>;

PositionSource baseline_source(baselines::BaselineSpec spec);
// The checkpoint must outlive the returned source.
PositionSource policy_source(const agents::PolicyCheckpoint& policy);

// Backtest over the decisions of `range` (see agents::decision_span).
// Throws Error{InsufficientHistory} when the range holds no decision.
TradeReturnSeries backtest_range(const PositionSource& source, const agents::ContractData& contract,
                                 const data::DateRange& range, const env::RewardConfig& cfg, std::string strategy);

enum class Alignment { Intersection, UnionZeroFill };

struct PortfolioSeries {
  std::vector<Date> dates;
  std::vector<double> returns;
  std::vector<std::string> members;
  bool vol_overlay_applied = false;
};

// Equal-weight mean of member returns per date. Intersection keeps dates every
// member trades; UnionZeroFill keeps all dates and counts a missing member as
// a zero return. Throws Error{EmptyPortfolio}.
PortfolioSeries portfolio_returns(std::span<const TradeReturnSeries> members,
                                  Alignment alignment = Alignment::Intersection);

inline constexpr std::size_t kOverlayWarmup = 60;

// out[t] = port[t] * sigma_tgt_daily / max(sigma_hat_{t-1}, vol_floor), where
// sigma_hat is the span-60 EWM std of raw returns through t-1. The first
// `warmup` observations are dropped. Throws Error{InsufficientHistory}.
PortfolioSeries vol_target_overlay(const PortfolioSeries& port, double sigma_tgt, double vol_floor = 1e-4,
                                   std::size_t warmup = kOverlayWarmup);

inline constexpr std::size_t kMetricCount = 9;
inline constexpr std::array<std::string_view, kMetricCount> kMetricNames = {
    "E(R)", "Std(R)", "DD", "Sharpe", "Sortino", "MDD", "Calmar", "% of +Ret", "Ave. P / Ave. L"};
inline constexpr std::array<std::string_view, kMetricCount> kMetricKeys = {
    "expected_return", "std", "downside_deviation", "sharpe", "sortino",
    "mdd", "calmar", "pct_positive", "avg_profit_over_avg_loss"};

// Annualized statistics of a daily return series. Undefined values (zero
// variance, fewer than two losses, no drawdown, no profits or losses) are
// empty rather than infinite.
struct MetricsReport {
  double expected_return = 0.0;
  double std_dev = 0.0;
  std::optional<double> downside_deviation;
  std::optional<double> sharpe;
  std::optional<double> sortino;
  double mdd = 0.0;
  std::optional<double> calmar;
  double pct_positive = 0.0;
  std::optional<double> avg_profit_over_avg_loss;

  std::array<std::optional<double>, kMetricCount> values() const;
  bool fully_defined() const;
};

// Largest peak-to-trough fractional loss of an equity path, clamped to [0, 1].
double max_drawdown(std::span<const double> equity);

// Equity path 1, (1+r_0), (1+r_0)(1+r_1), ...
std::vector<double> equity_curve(std::span<const double> returns);

// Throws Error{DegenerateSeries} for fewer than two observations.
MetricsReport compute_metrics(std::span<const double> returns, double periods_per_year = 252.0);

struct ContractPositions {
  const agents::ContractData* contract = nullptr;
  std::size_t first_decision = 0;
  std::vector<double> positions;
};

struct CostSweepRow {
  std::string strategy;
  double bp = 0.0;
  std::optional<double> sharpe;                 // equal-weight portfolio, no overlay
  std::optional<double> avg_cost_per_contract;  // currency per contract traded
};

inline constexpr std::array<double, 7> kDefaultSweepBp = {0.0, 0.0001, 0.0005, 0.0010, 0.0015, 0.0020, 0.0025};

// Re-runs the accounting at each rate. Positions are frozen, so only costs move.
std::vector<CostSweepRow> cost_sweep(const std::string& strategy, std::span<const ContractPositions> book,
                                     std::span<const double> rates, const env::RewardConfig& base);

struct ContractStats {
  std::string strategy;
  std::string ticker;
  data::AssetClass asset_class = data::AssetClass::Commodity;
  std::optional<double> sharpe;
  std::optional<double> return_per_turnover;  // sum R / sum |position change|
};

std::vector<ContractStats> per_contract_stats(std::span<const TradeReturnSeries> series);

struct MetricsRow {
  std::string strategy;
  std::string scope;
  bool overlay = false;
  MetricsReport report;
};

struct EquityCurve {
  std::string strategy;
  PortfolioSeries portfolio;
};

// Undefined values are written as NA.
void write_metrics_csv(std::span<const MetricsRow> rows, const std::filesystem::path& path);
void write_equity_curve_csv(std::span<const EquityCurve> curves, const std::filesystem::path& path);
void write_cost_sweep_csv(std::span<const CostSweepRow> rows, const std::filesystem::path& path);
void write_per_contract_csv(std::span<const ContractStats> rows, const std::filesystem::path& path);
void write_trade_returns_csv(std::span<const TradeReturnSeries> series, const std::filesystem::path& path);

std::string format_metric(const std::optional<double>& v);

}  // namespace deeptrade::eval
