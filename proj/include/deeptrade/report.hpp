#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "deeptrade/evaluation.hpp"

namespace deeptrade::report {

// Reads a metrics.csv written by eval::write_metrics_csv.
std::vector<eval::MetricsRow> read_metrics_csv(const std::filesystem::path& path);

// Table laid out by scope blocks (strategies as rows, the nine metrics as
// columns, best value per column and block marked with '*'). Only rows whose
// overlay flag matches are included.
std::string render_table(const std::vector<eval::MetricsRow>& rows, bool overlay, const std::string& title);

// Same content as CSV: scope,strategy,<metric keys>,best.
std::string render_table_csv(const std::vector<eval::MetricsRow>& rows, bool overlay);

// Marks per column for one block; true where the value is the best.
std::vector<std::vector<bool>> best_flags(const std::vector<const eval::MetricsRow*>& block);

// SVG plots derived from the report CSVs. Each returns false when its input
// file is absent.
bool plot_equity_curves(const std::filesystem::path& csv, const std::filesystem::path& svg);
bool plot_cost_sweep(const std::filesystem::path& csv, const std::filesystem::path& svg);
bool plot_per_contract(const std::filesystem::path& csv, const std::filesystem::path& svg);

// Writes report.txt, report.csv and the SVG plots under `dir` from the CSVs
// already there. Throws Error{IoError} when metrics.csv is missing.
void emit_report(const std::filesystem::path& dir, double portfolio_sigma_tgt);

}  // namespace deeptrade::report
