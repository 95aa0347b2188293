#include "marlsig/signal/controller_state.hpp"

#include <algorithm>
#include <cmath>

#include "marlsig/contract.hpp"

namespace marlsig::signal {

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::NSLeft: return "NS_Left";
    case Phase::NSThrough: return "NS_Through";
    case Phase::EWLeft: return "EW_Left";
    case Phase::EWThrough: return "EW_Through";
  }
  return "?";
}

std::string_view to_string(Indication ind) {
  switch (ind) {
    case Indication::Green: return "Green";
    case Indication::Yellow: return "Yellow";
    case Indication::AllRed: return "AllRed";
  }
  return "?";
}

SignalControllerState::SignalControllerState(TimingParams timing, double tick_seconds, Phase initial)
    : timing_(timing), tick_seconds_(tick_seconds), active_(initial) {
  green_start_log_[index_of(initial)].push_back(0.0);
  log(0.0, Indication::Green, SignalEventKind::Onset);
}

std::int64_t SignalControllerState::ticks(double seconds) const {
  return static_cast<std::int64_t>(std::llround(seconds / tick_seconds_));
}

void SignalControllerState::log(double t, Indication ind, SignalEventKind kind) {
  events_.push_back({t, active_, ind, kind});
}

PhaseMask SignalControllerState::valid_actions() const {
  PhaseMask mask{};
  if (indication_ != Indication::Green) return mask;
  if (elapsed_ticks_ < ticks(timing_.min_green(active_))) {
    mask[index_of(active_)] = true;
    return mask;
  }
  mask.fill(true);
  if (elapsed_ticks_ >= ticks(timing_.max_green(active_))) mask[index_of(active_)] = false;
  return mask;
}

void SignalControllerState::apply_action(Phase next, double now) {
  MARLSIG_EXPECTS(valid_actions()[index_of(next)]);
  if (next == active_) return;
  completed_greens_.emplace_back(active_, elapsed_in_indication());
  log(now, Indication::Green, SignalEventKind::End);
  indication_ = Indication::Yellow;
  pending_ = next;
  elapsed_ticks_ = 0;
  log(now, Indication::Yellow, SignalEventKind::Onset);
}

void SignalControllerState::tick(double now) {
  ++elapsed_ticks_;
  if (indication_ == Indication::Yellow && elapsed_ticks_ >= ticks(timing_.yellow)) {
    last_yellow_ticks_ = elapsed_ticks_;
    log(now, Indication::Yellow, SignalEventKind::End);
    indication_ = Indication::AllRed;
    elapsed_ticks_ = 0;
    log(now, Indication::AllRed, SignalEventKind::Onset);
  } else if (indication_ == Indication::AllRed && elapsed_ticks_ >= ticks(timing_.all_red)) {
    completed_clearances_.emplace_back(static_cast<double>(last_yellow_ticks_) * tick_seconds_,
                                       elapsed_in_indication());
    log(now, Indication::AllRed, SignalEventKind::End);
    active_ = *pending_;
    pending_.reset();
    indication_ = Indication::Green;
    elapsed_ticks_ = 0;
    green_start_log_[index_of(active_)].push_back(now);
    log(now, Indication::Green, SignalEventKind::Onset);
  }
}

double SignalControllerState::lock_time() const {
  const double min_green = timing_.min_green(serving_phase());
  switch (indication_) {
    case Indication::Yellow:
      return std::max(0.0, timing_.yellow - elapsed_in_indication()) + timing_.all_red + min_green;
    case Indication::AllRed:
      return std::max(0.0, timing_.all_red - elapsed_in_indication()) + min_green;
    case Indication::Green:
      return std::max(0.0, min_green - elapsed_in_indication());
  }
  return 0.0;
}

std::vector<double> measure_offset(const std::vector<double>& onsets_a, const std::vector<double>& onsets_b) {
  std::vector<double> out;
  for (double tb : onsets_b) {
    auto it = std::upper_bound(onsets_a.begin(), onsets_a.end(), tb);
    if (it == onsets_a.begin()) continue;
    out.push_back(tb - *std::prev(it));
  }
  return out;
}

}  // namespace marlsig::signal
