#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "deeptrade/date.hpp"

namespace deeptrade::baselines {

enum class BaselineKind { Long, SignR, MacdSignal };

std::string_view to_string(BaselineKind k);  // "Long", "Sign(R)", "MACD"
std::optional<BaselineKind> parse_baseline(std::string_view text);

enum class MacdCombine { Average, Sum };

inline constexpr std::size_t kMomentumLookback = 252;
inline constexpr double kPhiScale = 0.89;

struct BaselineSpec {
  BaselineKind kind = BaselineKind::Long;
  std::vector<std::pair<std::size_t, std::size_t>> macd_scales = {{8, 24}, {16, 48}, {32, 96}};
  MacdCombine combine = MacdCombine::Average;
};

inline double long_only() { return 1.0; }

// sign(p_t - p_{t-252}), 0 on a tie. Throws Error{InsufficientHistory} for t < 252.
double sign_momentum(std::span<const double> prices, std::size_t t);

// x exp(-x^2 / 4) / 0.89.
double phi(double x);

// phi of the combined MACD at t, using prices[0..t] only. Throws
// Error{InsufficientHistory} before the MACD is defined.
double macd_signal(std::span<const double> prices, std::size_t t, const BaselineSpec& spec);

// Positions for every t in [first, last]; equal to calling the pointwise
// functions above but computed in one pass.
std::vector<double> positions(std::span<const double> prices, std::size_t first, std::size_t last,
                              const BaselineSpec& spec);

void write_positions_csv(std::span<const Date> dates, std::span<const double> positions,
                         const std::filesystem::path& path);

}  // namespace deeptrade::baselines
