#include "deeptrade/report.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "deeptrade/csv.hpp"
#include "deeptrade/error.hpp"

namespace deeptrade::report {

namespace {

// +1 larger is better, -1 smaller is better, 0 not ranked.
constexpr int kDirection[eval::kMetricCount] = {1, 0, -1, 1, 1, -1, 1, 1, 1};

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::optional<double> metric_cell(const std::string& s) {
  if (s == "NA") return std::nullopt;
  return csv::parse_double(s);
}

std::vector<std::string> in_order(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& s : items) {
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  return out;
}

std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Line {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct Frame {
  double width = 820, height = 460;
  double left = 70, right = 170, top = 40, bottom = 50;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

  double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
  double py(double y) const { return top + (y1 - y) / (y1 - y0) * (height - top - bottom); }
};

void fit(Frame& f, double xmin, double xmax, double ymin, double ymax) {
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  if (!(ymax > ymin)) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double pad = 0.05 * (ymax - ymin);
  f.x0 = xmin;
  f.x1 = xmax;
  f.y0 = ymin - pad;
  f.y1 = ymax + pad;
}

void frame_open(std::ostringstream& os, const Frame& f, const std::string& title, const std::string& xlabel,
                const std::string& ylabel) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\"" << f.height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << f.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << svg_escape(title)
     << "</text>\n";
  const double bx = f.left, by = f.top, bw = f.width - f.left - f.right, bh = f.height - f.top - f.bottom;
  os << "<rect x=\"" << bx << "\" y=\"" << by << "\" width=\"" << bw << "\" height=\"" << bh
     << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = f.y0 + (f.y1 - f.y0) * k / 4.0;
    os << "<text x=\"" << bx - 6 << "\" y=\"" << csv::format_fixed(f.py(v) + 4, 1) << "\" text-anchor=\"end\">"
       << csv::format_fixed(v, 2) << "</text>\n";
    os << "<line x1=\"" << bx << "\" x2=\"" << bx + bw << "\" y1=\"" << csv::format_fixed(f.py(v), 1) << "\" y2=\""
       << csv::format_fixed(f.py(v), 1) << "\" stroke=\"#ddd\"/>\n";
  }
  os << "<text x=\"" << bx + bw / 2 << "\" y=\"" << f.height - 12 << "\" text-anchor=\"middle\">"
     << svg_escape(xlabel) << "</text>\n";
  os << "<text x=\"16\" y=\"" << by + bh / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << by + bh / 2
     << ")\">" << svg_escape(ylabel) << "</text>\n";
}

void draw_lines(std::ostringstream& os, const Frame& f, const std::vector<Line>& lines) {
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < lines[i].x.size(); ++k) {
      os << (k ? " " : "") << csv::format_fixed(f.px(lines[i].x[k]), 1) << ','
         << csv::format_fixed(f.py(lines[i].y[k]), 1);
    }
    os << "\"/>\n";
    const double ly = f.top + 16 + 18.0 * static_cast<double>(i);
    const double lx = f.width - f.right + 12;
    os << "<line x1=\"" << lx << "\" x2=\"" << lx + 18 << "\" y1=\"" << ly - 4 << "\" y2=\"" << ly - 4
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << lx + 24 << "\" y=\"" << ly << "\">" << svg_escape(lines[i].name) << "</text>\n";
  }
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<std::vector<std::string>> read_table(const std::filesystem::path& path) {
  std::vector<std::vector<std::string>> rows;
  const auto lines = csv::read_lines(path);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (!lines[i].empty()) rows.push_back(csv::split(lines[i]));
  }
  return rows;
}

}  // namespace

std::vector<eval::MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
  std::vector<eval::MetricsRow> out;
  for (const auto& f : read_table(path)) {
    if (f.size() != 3 + eval::kMetricCount) throw Error(ErrorCode::MalformedRow, path.string() + ": wrong column count");
    eval::MetricsRow r;
    r.strategy = f[0];
    r.scope = f[1];
    r.overlay = f[2] == "true";
    std::array<std::optional<double>, eval::kMetricCount> v;
    for (std::size_t k = 0; k < eval::kMetricCount; ++k) v[k] = metric_cell(f[3 + k]);
    r.report.expected_return = v[0].value_or(0.0);
    r.report.std_dev = v[1].value_or(0.0);
    r.report.downside_deviation = v[2];
    r.report.sharpe = v[3];
    r.report.sortino = v[4];
    r.report.mdd = v[5].value_or(0.0);
    r.report.calmar = v[6];
    r.report.pct_positive = v[7].value_or(0.0);
    r.report.avg_profit_over_avg_loss = v[8];
    out.push_back(r);
  }
  return out;
}

std::vector<std::vector<bool>> best_flags(const std::vector<const eval::MetricsRow*>& block) {
  std::vector<std::vector<bool>> flags(block.size(), std::vector<bool>(eval::kMetricCount, false));
  for (std::size_t c = 0; c < eval::kMetricCount; ++c) {
    if (kDirection[c] == 0) continue;
    std::optional<double> best;
    for (const auto* r : block) {
      const auto v = r->report.values()[c];
      if (v && (!best || kDirection[c] * *v > kDirection[c] * *best)) best = v;
    }
    if (!best) continue;
    for (std::size_t i = 0; i < block.size(); ++i) {
      const auto v = block[i]->report.values()[c];
      flags[i][c] = v && std::abs(*v - *best) <= 1e-12 * std::max(1.0, std::abs(*best));
    }
  }
  return flags;
}

namespace {

std::vector<std::pair<std::string, std::vector<const eval::MetricsRow*>>> blocks(
    const std::vector<eval::MetricsRow>& rows, bool overlay) {
  std::vector<std::string> scopes;
  for (const auto& r : rows) {
    if (r.overlay == overlay) scopes.push_back(r.scope);
  }
  std::vector<std::pair<std::string, std::vector<const eval::MetricsRow*>>> out;
  for (const auto& s : in_order(scopes)) {
    std::vector<const eval::MetricsRow*> members;
    for (const auto& r : rows) {
      if (r.overlay == overlay && r.scope == s) members.push_back(&r);
    }
    out.emplace_back(s, members);
  }
  return out;
}

}  // namespace

std::string render_table(const std::vector<eval::MetricsRow>& rows, bool overlay, const std::string& title) {
  std::vector<std::size_t> widths;
  for (auto name : eval::kMetricNames) widths.push_back(std::max<std::size_t>(name.size(), 8) + 2);
  constexpr std::size_t kLabel = 10;
  std::size_t total = kLabel;
  for (auto w : widths) total += w;

  std::ostringstream os;
  os << title << "\n\n" << std::string(kLabel, ' ');
  for (std::size_t c = 0; c < eval::kMetricCount; ++c) {
    os << std::string(widths[c] - eval::kMetricNames[c].size(), ' ') << eval::kMetricNames[c];
  }
  os << '\n';
  for (const auto& [scope, members] : blocks(rows, overlay)) {
    os << std::string(total, '-') << '\n' << scope << '\n' << std::string(total, '-') << '\n';
    const auto flags = best_flags(members);
    for (std::size_t i = 0; i < members.size(); ++i) {
      std::string label = members[i]->strategy;
      label.resize(kLabel, ' ');
      os << label;
      const auto values = members[i]->report.values();
      for (std::size_t c = 0; c < eval::kMetricCount; ++c) {
        std::string cell = values[c] ? csv::format_fixed(*values[c], 3) : "NA";
        cell += flags[i][c] ? "*" : " ";
        os << std::string(widths[c] > cell.size() ? widths[c] - cell.size() : 1, ' ') << cell;
      }
      os << '\n';
    }
  }
  os << std::string(total, '-') << "\n* best in column within the block\n";
  return os.str();
}

std::string render_table_csv(const std::vector<eval::MetricsRow>& rows, bool overlay) {
  std::ostringstream os;
  os << "scope,strategy";
  for (auto k : eval::kMetricKeys) os << ',' << k;
  os << ",best\n";
  for (const auto& [scope, members] : blocks(rows, overlay)) {
    const auto flags = best_flags(members);
    for (std::size_t i = 0; i < members.size(); ++i) {
      os << scope << ',' << members[i]->strategy;
      for (const auto& v : members[i]->report.values()) os << ',' << eval::format_metric(v);
      std::string best;
      for (std::size_t c = 0; c < eval::kMetricCount; ++c) {
        if (flags[i][c]) best += (best.empty() ? "" : ";") + std::string(eval::kMetricKeys[c]);
      }
      os << ',' << best << '\n';
    }
  }
  return os.str();
}

bool plot_equity_curves(const std::filesystem::path& csv_path, const std::filesystem::path& svg) {
  if (!std::filesystem::exists(csv_path)) return false;
  std::vector<Line> lines;
  std::map<std::string, std::size_t> index;
  std::optional<Date> origin;
  double ymin = 0.0, ymax = 0.0, xmax = 0.0;
  for (const auto& f : read_table(csv_path)) {
    if (f.size() != 3) throw Error(ErrorCode::MalformedRow, csv_path.string() + ": expected date,strategy,cum_return");
    const auto d = parse_date(f[0]);
    const auto y = csv::parse_double(f[2]);
    if (!d || !y) throw Error(ErrorCode::MalformedRow, csv_path.string() + ": bad row");
    if (!origin || *d < *origin) origin = origin ? std::min(*origin, *d) : *d;
    auto [it, fresh] = index.emplace(f[1], lines.size());
    if (fresh) lines.push_back({f[1], {}, {}});
    Line& l = lines[it->second];
    l.x.push_back(static_cast<double>(d->time_since_epoch().count()));
    l.y.push_back(*y);
  }
  if (lines.empty()) return false;
  for (auto& l : lines) {
    for (double& x : l.x) {
      x -= static_cast<double>(origin->time_since_epoch().count());
      xmax = std::max(xmax, x);
    }
    for (double y : l.y) {
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  Frame f;
  fit(f, 0.0, xmax, ymin, ymax);
  std::ostringstream os;
  frame_open(os, f, "Cumulative trade returns, all contracts", "calendar days from " + format_date(*origin),
             "cumulative return");
  draw_lines(os, f, lines);
  os << "</svg>\n";
  csv::write_text(svg, os.str());
  return true;
}

bool plot_cost_sweep(const std::filesystem::path& csv_path, const std::filesystem::path& svg) {
  if (!std::filesystem::exists(csv_path)) return false;
  std::vector<Line> lines;
  std::map<std::string, std::size_t> index;
  double xmax = 0.0, ymin = 0.0, ymax = 0.0;
  for (const auto& f : read_table(csv_path)) {
    if (f.size() != 4) throw Error(ErrorCode::MalformedRow, csv_path.string() + ": expected 4 columns");
    const auto bp = csv::parse_double(f[1]);
    const auto sharpe = metric_cell(f[2]);
    if (!bp) throw Error(ErrorCode::MalformedRow, csv_path.string() + ": bad rate");
    auto [it, fresh] = index.emplace(f[0], lines.size());
    if (fresh) lines.push_back({f[0], {}, {}});
    if (!sharpe) continue;
    lines[it->second].x.push_back(*bp * 1e4);
    lines[it->second].y.push_back(*sharpe);
    xmax = std::max(xmax, *bp * 1e4);
    ymin = std::min(ymin, *sharpe);
    ymax = std::max(ymax, *sharpe);
  }
  if (lines.empty()) return false;
  Frame f;
  fit(f, 0.0, xmax, ymin, ymax);
  std::ostringstream os;
  frame_open(os, f, "Sharpe ratio against cost rate, all contracts", "cost rate (bp)", "Sharpe ratio");
  draw_lines(os, f, lines);
  os << "</svg>\n";
  csv::write_text(svg, os.str());
  return true;
}

bool plot_per_contract(const std::filesystem::path& csv_path, const std::filesystem::path& svg) {
  if (!std::filesystem::exists(csv_path)) return false;
  std::vector<std::pair<std::string, std::vector<double>>> groups;
  for (const auto& f : read_table(csv_path)) {
    if (f.size() != 5) throw Error(ErrorCode::MalformedRow, csv_path.string() + ": expected 5 columns");
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == f[0]; });
    if (it == groups.end()) {
      groups.push_back({f[0], {}});
      it = groups.end() - 1;
    }
    if (const auto s = metric_cell(f[3])) it->second.push_back(*s);
  }
  if (groups.empty()) return false;
  double ymin = 0.0, ymax = 0.0;
  for (const auto& g : groups) {
    for (double v : g.second) {
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  }
  Frame f;
  f.right = 30;
  fit(f, 0.0, static_cast<double>(groups.size()), ymin, ymax);
  std::ostringstream os;
  frame_open(os, f, "Per-contract Sharpe ratio", "strategy", "Sharpe ratio");
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const double cx = f.px(static_cast<double>(i) + 0.5);
    os << "<text x=\"" << csv::format_fixed(cx, 1) << "\" y=\"" << f.height - f.bottom + 16
       << "\" text-anchor=\"middle\">" << svg_escape(groups[i].first) << "</text>\n";
    const auto& v = groups[i].second;
    if (v.empty()) continue;
    const double lo = quantile(v, 0.0), q1 = quantile(v, 0.25), med = quantile(v, 0.5), q3 = quantile(v, 0.75),
                 hi = quantile(v, 1.0);
    const double half = 0.3 * (f.px(1.0) - f.px(0.0));
    const char* color = kPalette[i % std::size(kPalette)];
    auto y = [&](double val) { return csv::format_fixed(f.py(val), 1); };
    os << "<line x1=\"" << csv::format_fixed(cx, 1) << "\" x2=\"" << csv::format_fixed(cx, 1) << "\" y1=\"" << y(lo)
       << "\" y2=\"" << y(hi) << "\" stroke=\"#444\"/>\n";
    os << "<rect x=\"" << csv::format_fixed(cx - half, 1) << "\" y=\"" << y(q3) << "\" width=\""
       << csv::format_fixed(2 * half, 1) << "\" height=\"" << csv::format_fixed(f.py(q1) - f.py(q3), 1)
       << "\" fill=\"" << color << "\" fill-opacity=\"0.5\" stroke=\"#444\"/>\n";
    os << "<line x1=\"" << csv::format_fixed(cx - half, 1) << "\" x2=\"" << csv::format_fixed(cx + half, 1)
       << "\" y1=\"" << y(med) << "\" y2=\"" << y(med) << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
  }
  os << "</svg>\n";
  csv::write_text(svg, os.str());
  return true;
}

void emit_report(const std::filesystem::path& dir, double portfolio_sigma_tgt) {
  const auto metrics_path = dir / "metrics.csv";
  if (!std::filesystem::exists(metrics_path)) {
    throw Error(ErrorCode::IoError, metrics_path.string() + " not found; run backtest first");
  }
  const auto rows = read_metrics_csv(metrics_path);
  std::string text = render_table(rows, true,
                                  "Portfolio-level volatility targeting (sigma_tgt = " +
                                      csv::format_double(portfolio_sigma_tgt) + ")");
  text += "\n\n" + render_table(rows, false, "Without portfolio-level volatility targeting");
  csv::write_text(dir / "report.txt", text);
  csv::write_text(dir / "report.csv", render_table_csv(rows, true));
  plot_equity_curves(dir / "equity_curve.csv", dir / "equity_curve.svg");
  plot_cost_sweep(dir / "cost_sweep.csv", dir / "cost_sweep.svg");
  plot_per_contract(dir / "per_contract.csv", dir / "per_contract.svg");
}

}  // namespace deeptrade::report
