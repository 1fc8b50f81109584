#include "deeptrade/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "deeptrade/csv.hpp"
#include "deeptrade/error.hpp"
#include "deeptrade/indicators.hpp"

namespace deeptrade::eval {

namespace {

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

// Sample (n - 1) standard deviation; needs two or more values.
double sample_std(std::span<const double> x) {
  const double m = mean_of(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

}  // namespace

TradeReturnSeries backtest_contract(const agents::ContractData& contract, std::size_t first_decision,
                                    std::span<const double> positions, const env::RewardConfig& cfg,
                                    std::string strategy) {
  TradeReturnSeries out;
  out.strategy = std::move(strategy);
  out.ticker = contract.series.ticker;
  out.asset_class = contract.series.asset_class;
  out.first_decision = first_decision;
  if (positions.empty()) return out;

  env::TradingEnv e(contract.series, contract.features, cfg, env::ActionMode::Continuous);
  e.reset(first_decision, positions.size());
  const auto n = positions.size();
  out.dates.reserve(n);
  out.returns.reserve(n);
  out.positions.reserve(n);
  out.turnover.reserve(n);
  out.cost_value.reserve(n);
  double prev = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t t = first_decision + k;
    const env::StepResult r = e.step(positions[k]);
    const double turnover = std::abs(r.scaled_position - prev);
    prev = r.scaled_position;
    out.dates.push_back(contract.series.dates[t + 1]);
    out.returns.push_back(r.reward);
    out.positions.push_back(r.scaled_position);
    out.turnover.push_back(turnover);
    out.cost_value.push_back(cfg.bp * contract.series.closes[t] * turnover);
  }
  return out;
}

PositionSource baseline_source(baselines::BaselineSpec spec) {
  return [spec = std::move(spec)](const agents::ContractData& c, std::size_t first, std::size_t last) {
    return baselines::positions(c.series.closes, first, last, spec);
  };
}

PositionSource policy_source(const agents::PolicyCheckpoint& policy) {
  return [&policy](const agents::ContractData& c, std::size_t first, std::size_t last) {
    std::vector<indicators::StateWindow> states;
    states.reserve(last - first + 1);
    for (std::size_t t = first; t <= last; ++t) states.push_back(indicators::state_at(c.features.matrix, t));
    return agents::greedy_positions(policy, states);
  };
}

TradeReturnSeries backtest_range(const PositionSource& source, const agents::ContractData& contract,
                                 const data::DateRange& range, const env::RewardConfig& cfg, std::string strategy) {
  const auto span = agents::decision_span(contract, range);
  if (!span) {
    throw Error(ErrorCode::InsufficientHistory,
                contract.series.ticker + " has no tradable day between " + format_date(range.start) + " and " +
                    format_date(range.end));
  }
  const std::vector<double> pos = source(contract, span->first, span->second);
  return backtest_contract(contract, span->first, pos, cfg, std::move(strategy));
}

PortfolioSeries portfolio_returns(std::span<const TradeReturnSeries> members, Alignment alignment) {
  if (members.empty()) throw Error(ErrorCode::EmptyPortfolio, "portfolio has no members");
  std::map<Date, std::pair<double, std::size_t>> by_date;
  for (const auto& m : members) {
    for (std::size_t i = 0; i < m.dates.size(); ++i) {
      auto& slot = by_date[m.dates[i]];
      slot.first += m.returns[i];
      slot.second += 1;
    }
  }
  PortfolioSeries out;
  for (const auto& m : members) out.members.push_back(m.ticker);
  std::sort(out.members.begin(), out.members.end());
  const double n = static_cast<double>(members.size());
  for (const auto& [date, slot] : by_date) {
    if (alignment == Alignment::Intersection && slot.second != members.size()) continue;
    out.dates.push_back(date);
    out.returns.push_back(slot.first / n);
  }
  return out;
}

PortfolioSeries vol_target_overlay(const PortfolioSeries& port, double sigma_tgt, double vol_floor,
                                   std::size_t warmup) {
  if (!(sigma_tgt > 0.0) || !(vol_floor > 0.0)) throw Error(ErrorCode::BadSpec, "overlay target and floor must be positive");
  if (warmup == 0 || port.returns.size() <= warmup) {
    throw Error(ErrorCode::InsufficientHistory, "volatility overlay needs more than " + std::to_string(warmup) +
                                                    " portfolio observations");
  }
  const indicators::Series sigma = indicators::ewm_std(port.returns, indicators::kVolSpan);
  const double target_daily = sigma_tgt / std::sqrt(env::kTradingDays);
  PortfolioSeries out;
  out.members = port.members;
  out.vol_overlay_applied = true;
  for (std::size_t t = warmup; t < port.returns.size(); ++t) {
    out.dates.push_back(port.dates[t]);
    out.returns.push_back(port.returns[t] * target_daily / std::max(sigma[t - 1], vol_floor));
  }
  return out;
}

std::array<std::optional<double>, kMetricCount> MetricsReport::values() const {
  return {expected_return, std_dev, downside_deviation, sharpe, sortino, mdd, calmar, pct_positive,
          avg_profit_over_avg_loss};
}

bool MetricsReport::fully_defined() const {
  const auto v = values();
  return std::all_of(v.begin(), v.end(), [](const auto& x) { return x.has_value() && std::isfinite(*x); });
}

std::vector<double> equity_curve(std::span<const double> returns) {
  std::vector<double> eq;
  eq.reserve(returns.size() + 1);
  eq.push_back(1.0);
  for (double r : returns) eq.push_back(eq.back() * (1.0 + r));
  return eq;
}

double max_drawdown(std::span<const double> equity) {
  double peak = -std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (double e : equity) {
    peak = std::max(peak, e);
    if (peak > 0.0) worst = std::max(worst, 1.0 - e / peak);
  }
  return std::clamp(worst, 0.0, 1.0);
}

MetricsReport compute_metrics(std::span<const double> returns, double periods_per_year) {
  if (returns.size() < 2) throw Error(ErrorCode::DegenerateSeries, "metrics need at least two observations");
  for (double r : returns) {
    if (!std::isfinite(r)) throw Error(ErrorCode::NonFiniteInput, "non-finite trade return");
  }
  const double root = std::sqrt(periods_per_year);
  MetricsReport m;
  m.expected_return = mean_of(returns) * periods_per_year;
  m.std_dev = sample_std(returns) * root;
  if (m.std_dev > 0.0) m.sharpe = m.expected_return / m.std_dev;

  std::vector<double> gains, losses;
  for (double r : returns) {
    if (r > 0.0) gains.push_back(r);
    if (r < 0.0) losses.push_back(r);
  }
  if (losses.size() >= 2) {
    const double dd = sample_std(losses) * root;
    if (dd > 0.0) {
      m.downside_deviation = dd;
      m.sortino = m.expected_return / dd;
    }
  }
  m.mdd = max_drawdown(equity_curve(returns));
  if (m.mdd > 0.0) m.calmar = m.expected_return / m.mdd;
  m.pct_positive = static_cast<double>(gains.size()) / static_cast<double>(returns.size());
  if (!gains.empty() && !losses.empty()) m.avg_profit_over_avg_loss = mean_of(gains) / std::abs(mean_of(losses));
  return m;
}

std::vector<CostSweepRow> cost_sweep(const std::string& strategy, std::span<const ContractPositions> book,
                                     std::span<const double> rates, const env::RewardConfig& base) {
  std::vector<CostSweepRow> rows;
  for (double bp : rates) {
    if (!(bp >= 0.0)) throw Error(ErrorCode::BadSpec, "cost rates must be non-negative");
    env::RewardConfig cfg = base;
    cfg.bp = bp;
    std::vector<TradeReturnSeries> runs;
    double cost = 0.0;
    double turnover = 0.0;
    for (const auto& entry : book) {
      runs.push_back(backtest_contract(*entry.contract, entry.first_decision, entry.positions, cfg, strategy));
      cost = std::accumulate(runs.back().cost_value.begin(), runs.back().cost_value.end(), cost);
      turnover = std::accumulate(runs.back().turnover.begin(), runs.back().turnover.end(), turnover);
    }
    CostSweepRow row;
    row.strategy = strategy;
    row.bp = bp;
    if (!runs.empty()) {
      const PortfolioSeries port = portfolio_returns(runs);
      if (port.returns.size() >= 2) row.sharpe = compute_metrics(port.returns).sharpe;
    }
    if (turnover > 0.0) row.avg_cost_per_contract = cost / turnover;
    rows.push_back(row);
  }
  return rows;
}

std::vector<ContractStats> per_contract_stats(std::span<const TradeReturnSeries> series) {
  std::vector<ContractStats> out;
  for (const auto& s : series) {
    ContractStats c;
    c.strategy = s.strategy;
    c.ticker = s.ticker;
    c.asset_class = s.asset_class;
    if (s.returns.size() >= 2) c.sharpe = compute_metrics(s.returns).sharpe;
    const double turnover = std::accumulate(s.turnover.begin(), s.turnover.end(), 0.0);
    if (turnover > 0.0) c.return_per_turnover = std::accumulate(s.returns.begin(), s.returns.end(), 0.0) / turnover;
    out.push_back(c);
  }
  return out;
}

std::string format_metric(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return "NA";
  return csv::format_double(*v);
}

void write_metrics_csv(std::span<const MetricsRow> rows, const std::filesystem::path& path) {
  std::ostringstream os;
  os << "strategy,scope,overlay";
  for (auto k : kMetricKeys) os << ',' << k;
  os << '\n';
  for (const auto& r : rows) {
    os << r.strategy << ',' << r.scope << ',' << (r.overlay ? "true" : "false");
    for (const auto& v : r.report.values()) os << ',' << format_metric(v);
    os << '\n';
  }
  csv::write_text(path, os.str());
}

void write_equity_curve_csv(std::span<const EquityCurve> curves, const std::filesystem::path& path) {
  std::ostringstream os;
  os << "date,strategy,cum_return\n";
  for (const auto& c : curves) {
    const std::vector<double> eq = equity_curve(c.portfolio.returns);
    for (std::size_t i = 0; i < c.portfolio.dates.size(); ++i) {
      os << format_date(c.portfolio.dates[i]) << ',' << c.strategy << ',' << csv::format_double(eq[i + 1] - 1.0)
         << '\n';
    }
  }
  csv::write_text(path, os.str());
}

void write_cost_sweep_csv(std::span<const CostSweepRow> rows, const std::filesystem::path& path) {
  std::ostringstream os;
  os << "strategy,bp,sharpe,avg_cost_per_contract\n";
  for (const auto& r : rows) {
    os << r.strategy << ',' << csv::format_double(r.bp) << ',' << format_metric(r.sharpe) << ','
       << format_metric(r.avg_cost_per_contract) << '\n';
  }
  csv::write_text(path, os.str());
}

void write_per_contract_csv(std::span<const ContractStats> rows, const std::filesystem::path& path) {
  std::ostringstream os;
  os << "strategy,ticker,asset_class,sharpe,return_per_turnover\n";
  for (const auto& r : rows) {
    os << r.strategy << ',' << r.ticker << ',' << data::to_string(r.asset_class) << ',' << format_metric(r.sharpe)
       << ',' << format_metric(r.return_per_turnover) << '\n';
  }
  csv::write_text(path, os.str());
}

void write_trade_returns_csv(std::span<const TradeReturnSeries> series, const std::filesystem::path& path) {
  std::ostringstream os;
  os << "strategy,ticker,date,position,turnover,return\n";
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.dates.size(); ++i) {
      os << s.strategy << ',' << s.ticker << ',' << format_date(s.dates[i]) << ',' << csv::format_double(s.positions[i])
         << ',' << csv::format_double(s.turnover[i]) << ',' << csv::format_double(s.returns[i]) << '\n';
    }
  }
  csv::write_text(path, os.str());
}

}  // namespace deeptrade::eval
