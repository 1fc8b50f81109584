#include "deeptrade/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "deeptrade/csv.hpp"
#include "deeptrade/error.hpp"

namespace deeptrade::config {

namespace {

[[noreturn]] void config_error(std::string_view key, const std::string& msg) {
  throw Error(ErrorCode::ConfigError, std::string(key) + ": " + msg);
}

double real_value(std::string_view key, std::string_view value) {
  const auto v = csv::parse_double(value);
  if (!v || !std::isfinite(*v)) config_error(key, "expected a number, got '" + std::string(value) + "'");
  return *v;
}

template <typename Int>
Int int_value(std::string_view key, std::string_view value) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    config_error(key, "expected an integer, got '" + std::string(value) + "'");
  }
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

}  // namespace

std::string default_output_dir() {
  const char* root = std::getenv("DEEPTRADE_OUTPUT_ROOT");
  return root && *root ? std::string(root) : std::string("deeptrade_out");
}

void RunConfig::set(std::string_view key, std::string_view raw) {
  const std::string value = trim(raw);
  if (key == "output.dir") {
    output_dir = value;
  } else if (key == "data.source") {
    if (value != "synthetic" && value != "csv") config_error(key, "expected synthetic or csv");
    data_source = value;
  } else if (key == "data.dir") {
    data_dir = value;
  } else if (key == "data.catalog") {
    data_catalog = value;
  } else if (key == "synth.seed") {
    synth_seed = int_value<std::uint64_t>(key, value);
  } else if (key == "synth.start" || key == "synth.end") {
    if (!parse_date(value)) config_error(key, "expected YYYY-MM-DD, got '" + value + "'");
    (key == "synth.start" ? synth_start : synth_end) = value;
  } else if (key == "split.retrain_years") {
    retrain_years = int_value<int>(key, value);
  } else if (key == "split.first_test_year") {
    first_test_year = int_value<int>(key, value);
  } else if (key == "strategies") {
    std::vector<std::string> list = csv::split(value);
    for (const auto& s : list) {
      if (std::find(kAllStrategies.begin(), kAllStrategies.end(), s) == kAllStrategies.end()) {
        config_error(key, "unknown strategy '" + s + "'");
      }
    }
    strategies = list;
  } else if (key == "baselines.macd_combine") {
    if (value == "average") {
      macd_combine = baselines::MacdCombine::Average;
    } else if (value == "sum") {
      macd_combine = baselines::MacdCombine::Sum;
    } else {
      config_error(key, "expected average or sum");
    }
  } else if (key == "reward.mu") {
    reward.mu = real_value(key, value);
  } else if (key == "reward.sigma_tgt") {
    reward.sigma_tgt = real_value(key, value);
  } else if (key == "reward.bp") {
    reward.bp = real_value(key, value);
  } else if (key == "reward.vol_floor") {
    reward.vol_floor = real_value(key, value);
  } else if (key == "reward.convention") {
    const auto c = env::parse_return_convention(value);
    if (!c) config_error(key, "expected percentage or price_difference");
    reward.convention = *c;
  } else if (key == "portfolio.sigma_tgt") {
    portfolio_sigma_tgt = real_value(key, value);
  } else if (key == "portfolio.alignment") {
    if (value == "intersection") {
      alignment = eval::Alignment::Intersection;
    } else if (value == "union") {
      alignment = eval::Alignment::UnionZeroFill;
    } else {
      config_error(key, "expected intersection or union");
    }
  } else if (key == "sweep.rates") {
    std::vector<double> rates;
    for (const auto& r : csv::split(value)) rates.push_back(real_value(key, r));
    sweep_rates = rates;
  } else if (key == "seed") {
    seed = int_value<std::uint64_t>(key, value);
  } else if (key.starts_with("agent.")) {
    const std::string_view rest = key.substr(6);
    const auto dot = rest.find('.');
    if (dot == std::string_view::npos) config_error(key, "expected agent.<algo>.<field>");
    const auto algo = agents::parse_algo(rest.substr(0, dot));
    const std::string_view field = rest.substr(dot + 1);
    if (!algo) config_error(key, "unknown algorithm");
    if (field == "algo") config_error(key, "the algorithm of a section is fixed");
    agents::AgentConfig& target = *algo == agents::Algo::DQN ? dqn : (*algo == agents::Algo::PG ? pg : a2c);
    try {
      if (!target.set(field, value)) config_error(key, "unknown agent field");
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ConfigError) throw;
      throw Error(ErrorCode::ConfigError, "agent." + std::string(rest.substr(0, dot)) + "." + e.detail());
    }
  } else {
    config_error(key, "unknown key");
  }
}

void RunConfig::validate() const {
  try {
    reward.validate();
    dqn.validate();
    pg.validate();
    a2c.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.detail());
  }
  if (retrain_years < 1) config_error("split.retrain_years", "must be at least 1");
  if (!(portfolio_sigma_tgt > 0.0)) config_error("portfolio.sigma_tgt", "must be positive");
  if (strategies.empty()) config_error("strategies", "at least one strategy is required");
  for (double r : sweep_rates) {
    if (!(r >= 0.0)) config_error("sweep.rates", "rates must be non-negative");
  }
  if (data_source == "csv" && data_dir.empty()) config_error("data.dir", "required when data.source = csv");
  if (*parse_date(synth_end) <= *parse_date(synth_start)) config_error("synth.end", "must follow synth.start");
}

const agents::AgentConfig& RunConfig::agent(agents::Algo algo) const {
  return algo == agents::Algo::DQN ? dqn : (algo == agents::Algo::PG ? pg : a2c);
}

bool RunConfig::wants(std::string_view strategy) const {
  return std::find(strategies.begin(), strategies.end(), strategy) != strategies.end();
}

std::string RunConfig::serialize() const {
  std::ostringstream os;
  auto line = [&os](std::string_view k, const std::string& v) { os << k << " = " << v << '\n'; };
  auto num = [](double v) { return csv::format_double(v); };
  line("data.source", data_source);
  line("data.dir", data_dir);
  line("data.catalog", data_catalog);
  line("synth.seed", std::to_string(synth_seed));
  line("synth.start", synth_start);
  line("synth.end", synth_end);
  line("split.retrain_years", std::to_string(retrain_years));
  line("split.first_test_year", std::to_string(first_test_year));
  line("strategies", join(strategies));
  line("baselines.macd_combine", macd_combine == baselines::MacdCombine::Average ? "average" : "sum");
  line("reward.mu", num(reward.mu));
  line("reward.sigma_tgt", num(reward.sigma_tgt));
  line("reward.bp", num(reward.bp));
  line("reward.vol_floor", num(reward.vol_floor));
  line("reward.convention", std::string(env::to_string(reward.convention)));
  line("portfolio.sigma_tgt", num(portfolio_sigma_tgt));
  line("portfolio.alignment", alignment == eval::Alignment::Intersection ? "intersection" : "union");
  std::vector<std::string> rates;
  for (double r : sweep_rates) rates.push_back(num(r));
  line("sweep.rates", join(rates));
  line("seed", std::to_string(seed));
  for (const auto* a : {&dqn, &pg, &a2c}) {
    const std::string prefix = "agent." + std::string(agents::to_string(a->algo)) + ".";
    for (const auto& [k, v] : a->to_key_values()) {
      if (k != "algo") line(prefix + k, v);
    }
  }
  return os.str();
}

std::uint64_t RunConfig::hash() const {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : serialize()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(number) + ": expected key = value");
    }
    cfg.set(trim(std::string_view(body).substr(0, eq)), std::string_view(body).substr(eq + 1));
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace deeptrade::config
