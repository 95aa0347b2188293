#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace marlsig::signal {

// Four-phase single ring. Numeric values double as Q-network output indices.
enum class Phase : std::uint8_t { NSLeft = 0, NSThrough = 1, EWLeft = 2, EWThrough = 3 };

inline constexpr int kNumPhases = 4;
inline constexpr std::array<Phase, kNumPhases> kAllPhases = {Phase::NSLeft, Phase::NSThrough,
                                                             Phase::EWLeft, Phase::EWThrough};

enum class Indication : std::uint8_t { Green, Yellow, AllRed };

using PhaseMask = std::array<bool, kNumPhases>;

constexpr int index_of(Phase p) { return static_cast<int>(p); }
constexpr Phase phase_from_index(int i) { return static_cast<Phase>(i); }
constexpr bool is_left(Phase p) { return p == Phase::NSLeft || p == Phase::EWLeft; }

std::string_view to_string(Phase p);
std::string_view to_string(Indication ind);

inline int count(const PhaseMask& m) {
  int n = 0;
  for (bool b : m) n += b ? 1 : 0;
  return n;
}

// Passage-detector state per phase: seconds since the last actuation and a presence call.
struct DetectorReadings {
  std::array<double, kNumPhases> gap{};
  std::array<bool, kNumPhases> call{};
};

struct TimingParams {
  double min_green_through = 8.0;
  double min_green_left = 5.0;
  double max_green_through = 60.0;
  double max_green_left = 20.0;
  double yellow = 3.5;
  double all_red = 1.5;

  double min_green(Phase p) const { return is_left(p) ? min_green_left : min_green_through; }
  double max_green(Phase p) const { return is_left(p) ? max_green_left : max_green_through; }
  double clearance() const { return yellow + all_red; }
};

}  // namespace marlsig::signal
