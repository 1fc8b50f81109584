#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "deeptrade/agents.hpp"
#include "deeptrade/config.hpp"
#include "deeptrade/evaluation.hpp"
#include "deeptrade/market_data.hpp"

namespace deeptrade::pipeline {

// Number of Monday-Friday days in [start, end].
std::size_t weekday_count(Date start, Date end);

// Twelve contracts, three per asset class, with trending drift regimes.
std::vector<data::SyntheticSpec> bundled_universe(const config::RunConfig& cfg);

// Synthetic universe or every <ticker>.csv under data.dir, sorted by asset
// class then ticker, with features computed.
std::vector<agents::ContractData> load_universe(const config::RunConfig& cfg);

// Walk-forward schedule of one asset class over the union of its dates.
std::vector<data::WalkForwardSplit> class_splits(const config::RunConfig& cfg,
                                                 const std::vector<const agents::ContractData*>& members);

std::string checkpoint_stem(agents::Algo algo, data::AssetClass cls, int test_year);

// Frozen positions of every configured strategy over each contract's test
// decisions, keyed by strategy name. Agent strategies read checkpoints from
// <out>/checkpoints and throw Error{IoError} when one is missing.
std::map<std::string, std::vector<eval::ContractPositions>> build_books(
    const config::RunConfig& cfg, const std::vector<agents::ContractData>& universe);

void run_synth(const config::RunConfig& cfg);
void run_features(const config::RunConfig& cfg);
void run_train(const config::RunConfig& cfg);
void run_backtest(const config::RunConfig& cfg);
void run_sweep(const config::RunConfig& cfg);
void run_report(const config::RunConfig& cfg);

// <out>/manifest.txt: version, command, config hash, seeds and the config.
void write_manifest(const config::RunConfig& cfg, const std::string& command);

}  // namespace deeptrade::pipeline
