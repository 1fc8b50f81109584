#include "deeptrade/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>

#include "deeptrade/csv.hpp"
#include "deeptrade/error.hpp"
#include "deeptrade/report.hpp"

namespace deeptrade::pipeline {

namespace fs = std::filesystem;

namespace {

struct BundledContract {
  const char* ticker;
  data::AssetClass asset_class;
  double vol;
};

constexpr BundledContract kBundled[] = {
    {"ZG", data::AssetClass::Commodity, 0.25},   {"ZU", data::AssetClass::Commodity, 0.25},
    {"ZC", data::AssetClass::Commodity, 0.25},   {"ES", data::AssetClass::EquityIndex, 0.18},
    {"CA", data::AssetClass::EquityIndex, 0.18}, {"XU", data::AssetClass::EquityIndex, 0.18},
    {"TY", data::AssetClass::FixedIncome, 0.07}, {"DT", data::AssetClass::FixedIncome, 0.07},
    {"US", data::AssetClass::FixedIncome, 0.07}, {"FN", data::AssetClass::FX, 0.10},
    {"JN", data::AssetClass::FX, 0.10},          {"BN", data::AssetClass::FX, 0.10},
};

// Drift in units of annual vol; regimes rotate per contract.
constexpr double kDriftMultiple[] = {1.0, -0.6, 0.8, -1.0};
constexpr std::size_t kRegimeLength[] = {378, 504, 630};

constexpr agents::Algo kAlgos[] = {agents::Algo::DQN, agents::Algo::PG, agents::Algo::A2C};

Date config_date(const std::string& text, const char* key) {
  const auto d = parse_date(text);
  if (!d) throw Error(ErrorCode::ConfigError, std::string(key) + ": not a YYYY-MM-DD date: " + text);
  return *d;
}

fs::path out_dir(const config::RunConfig& cfg) { return cfg.output_dir; }

std::string strategy_name(agents::Algo algo) {
  switch (algo) {
    case agents::Algo::DQN: return "DQN";
    case agents::Algo::PG: return "PG";
    case agents::Algo::A2C: return "A2C";
  }
  return "DQN";
}

// Contiguous runs of the (class-sorted) universe.
std::vector<std::pair<data::AssetClass, std::span<const agents::ContractData>>> by_class(
    const std::vector<agents::ContractData>& universe) {
  std::vector<std::pair<data::AssetClass, std::span<const agents::ContractData>>> out;
  std::size_t i = 0;
  while (i < universe.size()) {
    std::size_t j = i;
    const auto cls = universe[i].series.asset_class;
    while (j < universe.size() && universe[j].series.asset_class == cls) ++j;
    out.emplace_back(cls, std::span<const agents::ContractData>(universe.data() + i, j - i));
    i = j;
  }
  return out;
}

std::vector<const agents::ContractData*> pointers(std::span<const agents::ContractData> contracts) {
  std::vector<const agents::ContractData*> out;
  for (const auto& c : contracts) out.push_back(&c);
  return out;
}

data::DateRange test_range(const config::RunConfig& cfg, const agents::ContractData& c) {
  return {jan_first(cfg.first_test_year), c.series.dates.back()};
}

std::uint64_t training_seed(std::uint64_t seed, data::AssetClass cls, agents::Algo algo, std::size_t split) {
  std::uint64_t h = seed * 0x9E3779B97F4A7C15ULL;
  h ^= (static_cast<std::uint64_t>(cls) + 1) * 0xBF58476D1CE4E5B9ULL;
  h ^= (static_cast<std::uint64_t>(algo) + 1) * 0x94D049BB133111EBULL;
  h ^= (split + 1) * 0xD6E8FEB86659FD93ULL;
  return h ^ (h >> 31);
}

void log(const std::string& line) { std::cerr << line << '\n'; }

std::vector<double> agent_positions(const config::RunConfig& cfg, agents::Algo algo,
                                    const agents::ContractData& contract,
                                    const std::vector<data::WalkForwardSplit>& splits, std::size_t first,
                                    std::size_t last, std::map<std::string, agents::PolicyCheckpoint>& cache) {
  const auto& dates = contract.series.dates;
  std::vector<double> out;
  out.reserve(last - first + 1);
  std::size_t t = first;
  while (t <= last) {
    const auto split = std::find_if(splits.begin(), splits.end(),
                                    [&](const data::WalkForwardSplit& s) { return s.test.contains(dates[t]); });
    if (split == splits.end()) {
      throw Error(ErrorCode::InsufficientHistory,
                  contract.series.ticker + ": no walk-forward block covers " + format_date(dates[t]));
    }
    std::size_t end = t;
    while (end + 1 <= last && split->test.contains(dates[end + 1])) ++end;
    const auto stem = checkpoint_stem(algo, contract.series.asset_class, year_of(split->test.start));
    auto it = cache.find(stem);
    if (it == cache.end()) {
      const auto path = out_dir(cfg) / "checkpoints" / (stem + ".ckpt");
      if (!fs::exists(path)) {
        throw Error(ErrorCode::IoError, path.string() + " not found; run train first");
      }
      it = cache.emplace(stem, agents::PolicyCheckpoint::load(path)).first;
    }
    const auto part = eval::policy_source(it->second)(contract, t, end);
    out.insert(out.end(), part.begin(), part.end());
    t = end + 1;
  }
  return out;
}

std::optional<baselines::BaselineSpec> baseline_for(const config::RunConfig& cfg, const std::string& strategy) {
  const auto kind = baselines::parse_baseline(strategy);
  if (!kind) return std::nullopt;
  baselines::BaselineSpec spec;
  spec.kind = *kind;
  spec.combine = cfg.macd_combine;
  return spec;
}

}  // namespace

std::size_t weekday_count(Date start, Date end) {
  std::size_t n = 0;
  for (Date d = start; d <= end; d += std::chrono::days{1}) n += is_weekday(d) ? 1 : 0;
  return n;
}

std::vector<data::SyntheticSpec> bundled_universe(const config::RunConfig& cfg) {
  const Date start = config_date(cfg.synth_start, "synth.start");
  const Date end = config_date(cfg.synth_end, "synth.end");
  if (end < start) throw Error(ErrorCode::ConfigError, "synth.end precedes synth.start");
  const std::size_t n_days = weekday_count(start, end);
  std::vector<data::SyntheticSpec> out;
  for (std::size_t k = 0; k < std::size(kBundled); ++k) {
    data::SyntheticSpec spec;
    spec.ticker = kBundled[k].ticker;
    spec.asset_class = kBundled[k].asset_class;
    spec.n_days = n_days;
    spec.annualized_vol = kBundled[k].vol;
    spec.start_price = 50.0 + 25.0 * static_cast<double>(k);
    spec.start_date = start;
    for (std::size_t r = 0; r < std::size(kDriftMultiple); ++r) {
      const double m = kDriftMultiple[(r + k) % std::size(kDriftMultiple)];
      const std::size_t len = kRegimeLength[(r + 2 * k) % std::size(kRegimeLength)];
      spec.drift_regimes.push_back({len, m * spec.annualized_vol});
    }
    out.push_back(spec);
  }
  return out;
}

std::vector<agents::ContractData> load_universe(const config::RunConfig& cfg) {
  std::vector<data::PriceSeries> series;
  if (cfg.data_source == "synthetic") {
    const auto specs = bundled_universe(cfg);
    for (std::size_t k = 0; k < specs.size(); ++k) {
      series.push_back(data::generate_synthetic(specs[k], cfg.synth_seed + k));
    }
  } else {
    if (cfg.data_dir.empty() || !fs::is_directory(cfg.data_dir)) {
      throw Error(ErrorCode::ConfigError, "data.dir is not a directory: '" + cfg.data_dir + "'");
    }
    const auto catalog = cfg.data_catalog.empty() ? data::InstrumentCatalog::default_catalog()
                                                  : data::InstrumentCatalog::load(cfg.data_catalog);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(cfg.data_dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error(ErrorCode::ConfigError, "no .csv files under " + cfg.data_dir);
    for (const auto& f : files) series.push_back(data::load_csv(f, catalog));
  }
  std::stable_sort(series.begin(), series.end(), [](const data::PriceSeries& a, const data::PriceSeries& b) {
    if (a.asset_class != b.asset_class) return a.asset_class < b.asset_class;
    return a.ticker < b.ticker;
  });
  std::vector<agents::ContractData> out;
  out.reserve(series.size());
  for (auto& s : series) out.push_back(agents::prepare_contract(std::move(s)));
  return out;
}

std::vector<data::WalkForwardSplit> class_splits(const config::RunConfig& cfg,
                                                 const std::vector<const agents::ContractData*>& members) {
  std::set<Date> all;
  for (const auto* c : members) all.insert(c->series.dates.begin(), c->series.dates.end());
  return data::walk_forward_splits({all.begin(), all.end()}, cfg.retrain_years, cfg.first_test_year);
}

std::string checkpoint_stem(agents::Algo algo, data::AssetClass cls, int test_year) {
  return std::string(agents::to_string(algo)) + "_" + std::string(data::to_string(cls)) + "_" +
         std::to_string(test_year);
}

std::map<std::string, std::vector<eval::ContractPositions>> build_books(
    const config::RunConfig& cfg, const std::vector<agents::ContractData>& universe) {
  std::map<std::string, std::vector<eval::ContractPositions>> books;
  std::map<std::string, agents::PolicyCheckpoint> cache;
  for (const auto& [cls, members] : by_class(universe)) {
    const auto splits = class_splits(cfg, pointers(members));
    for (const auto& contract : members) {
      const auto span = agents::decision_span(contract, test_range(cfg, contract));
      if (!span) {
        throw Error(ErrorCode::InsufficientHistory,
                    contract.series.ticker + " has no tradable day from " + std::to_string(cfg.first_test_year));
      }
      for (const auto& strategy : cfg.strategies) {
        eval::ContractPositions book{&contract, span->first, {}};
        if (const auto spec = baseline_for(cfg, strategy)) {
          book.positions = eval::baseline_source(*spec)(contract, span->first, span->second);
        } else {
          const auto algo = agents::parse_algo(strategy);
          if (!algo) throw Error(ErrorCode::ConfigError, "unknown strategy " + strategy);
          book.positions = agent_positions(cfg, *algo, contract, splits, span->first, span->second, cache);
        }
        books[strategy].push_back(std::move(book));
      }
    }
  }
  return books;
}

void run_synth(const config::RunConfig& cfg) {
  const auto specs = bundled_universe(cfg);
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const auto series = data::generate_synthetic(specs[k], cfg.synth_seed + k);
    data::write_csv(series, out_dir(cfg) / "data" / (series.ticker + ".csv"));
  }
  log("synth: wrote " + std::to_string(specs.size()) + " contracts to " + (out_dir(cfg) / "data").string());
}

void run_features(const config::RunConfig& cfg) {
  const auto universe = load_universe(cfg);
  for (const auto& c : universe) {
    c.features.matrix.write_csv(out_dir(cfg) / "features" / (c.series.ticker + ".csv"));
  }
  log("features: wrote " + std::to_string(universe.size()) + " feature files");
}

void run_train(const config::RunConfig& cfg) {
  const auto universe = load_universe(cfg);
  for (const auto& [cls, members] : by_class(universe)) {
    const auto splits = class_splits(cfg, pointers(members));
    for (const auto algo : kAlgos) {
      if (!cfg.wants(strategy_name(algo))) continue;
      for (std::size_t s = 0; s < splits.size(); ++s) {
        const int year = year_of(splits[s].test.start);
        const auto stem = checkpoint_stem(algo, cls, year);
        const auto result = agents::train(members, splits[s].train, cfg.agent(algo), cfg.reward,
                                          training_seed(cfg.seed, cls, algo, s), std::string(data::to_string(cls)));
        result.checkpoint.save(out_dir(cfg) / "checkpoints" / (stem + ".ckpt"));
        agents::write_curve_csv(result.curve, out_dir(cfg) / "curves" / (stem + ".csv"));
        log("train: " + stem + " done after " + std::to_string(result.checkpoint.env_steps) + " steps");
      }
    }
  }
}

void run_backtest(const config::RunConfig& cfg) {
  const auto universe = load_universe(cfg);
  const auto books = build_books(cfg, universe);

  std::map<std::string, std::vector<eval::TradeReturnSeries>> series;
  std::vector<eval::TradeReturnSeries> all_series;
  for (const auto& strategy : cfg.strategies) {
    for (const auto& b : books.at(strategy)) {
      series[strategy].push_back(eval::backtest_contract(*b.contract, b.first_decision, b.positions, cfg.reward,
                                                         strategy));
      all_series.push_back(series[strategy].back());
    }
  }

  std::vector<std::string> scopes;
  for (const auto cls : data::kAllAssetClasses) {
    const bool present = std::any_of(universe.begin(), universe.end(),
                                     [&](const agents::ContractData& c) { return c.series.asset_class == cls; });
    if (present) scopes.emplace_back(data::display_name(cls));
  }
  scopes.emplace_back("All");

  std::vector<eval::MetricsRow> rows;
  std::vector<eval::EquityCurve> curves;
  for (const bool overlay : {true, false}) {
    for (const auto& scope : scopes) {
      for (const auto& strategy : cfg.strategies) {
        std::vector<eval::TradeReturnSeries> members;
        for (const auto& s : series[strategy]) {
          if (scope == "All" || data::display_name(s.asset_class) == scope) members.push_back(s);
        }
        auto port = eval::portfolio_returns(members, cfg.alignment);
        if (overlay) port = eval::vol_target_overlay(port, cfg.portfolio_sigma_tgt, cfg.reward.vol_floor);
        rows.push_back({strategy, scope, overlay, eval::compute_metrics(port.returns)});
        if (overlay && scope == "All") curves.push_back({strategy, port});
      }
    }
  }
  const auto dir = out_dir(cfg);
  eval::write_metrics_csv(rows, dir / "metrics.csv");
  eval::write_equity_curve_csv(curves, dir / "equity_curve.csv");
  eval::write_per_contract_csv(eval::per_contract_stats(all_series), dir / "per_contract.csv");
  eval::write_trade_returns_csv(all_series, dir / "trade_returns.csv");
  log("backtest: " + std::to_string(rows.size()) + " metric rows written to " + (dir / "metrics.csv").string());
}

void run_sweep(const config::RunConfig& cfg) {
  const auto universe = load_universe(cfg);
  const auto books = build_books(cfg, universe);
  std::vector<eval::CostSweepRow> rows;
  for (const auto& strategy : cfg.strategies) {
    const auto part = eval::cost_sweep(strategy, books.at(strategy), cfg.sweep_rates, cfg.reward);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  eval::write_cost_sweep_csv(rows, out_dir(cfg) / "cost_sweep.csv");
  log("sweep: " + std::to_string(rows.size()) + " rows");
}

void run_report(const config::RunConfig& cfg) {
  report::emit_report(out_dir(cfg), cfg.portfolio_sigma_tgt);
  log("report: wrote " + (out_dir(cfg) / "report.txt").string());
}

void write_manifest(const config::RunConfig& cfg, const std::string& command) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(cfg.hash()));
  std::ostringstream os;
  os << "version = " << DEEPTRADE_VERSION << '\n'
     << "command = " << command << '\n'
     << "config_hash = " << hash << '\n'
     << "seed = " << cfg.seed << '\n'
     << "synth_seed = " << cfg.synth_seed << '\n'
     << "\n# config\n"
     << cfg.serialize();
  csv::write_text(out_dir(cfg) / "manifest.txt", os.str());
}

}  // namespace deeptrade::pipeline
