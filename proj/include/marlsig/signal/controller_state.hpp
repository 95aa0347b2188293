#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "marlsig/signal/phase.hpp"

namespace marlsig::signal {

enum class SignalEventKind : std::uint8_t { Onset, End };

struct SignalEvent {
  double t = 0.0;
  Phase phase = Phase::EWThrough;
  Indication indication = Indication::Green;
  SignalEventKind kind = SignalEventKind::Onset;
};

// Per-intersection phase machine. Time is kept in integer ticks of the simulation
// step so that clearance intervals have exact durations.
class SignalControllerState {
 public:
  SignalControllerState(TimingParams timing, double tick_seconds, Phase initial = Phase::EWThrough);

  Phase active_phase() const { return active_; }
  Indication indication() const { return indication_; }
  std::optional<Phase> pending_phase() const { return pending_; }
  const TimingParams& timing() const { return timing_; }
  double tick_seconds() const { return tick_seconds_; }

  double elapsed_in_indication() const { return static_cast<double>(elapsed_ticks_) * tick_seconds_; }
  // Zero outside Green.
  double elapsed_green() const { return indication_ == Indication::Green ? elapsed_in_indication() : 0.0; }
  std::int64_t elapsed_ticks() const { return elapsed_ticks_; }

  // Phase whose green is current or next: the pending phase during clearance.
  Phase serving_phase() const { return pending_.value_or(active_); }

  // Empty during clearance; {active} before min green; all but active at max green.
  PhaseMask valid_actions() const;

  // Same phase continues green; a different phase starts Yellow, AllRed, then green.
  // Aborts if next is not a valid action.
  void apply_action(Phase next, double now);

  // Advances one tick; `now` is the time at the end of the tick.
  void tick(double now);

  // Seconds until this controller may next change phase: remaining clearance plus the
  // remaining min green of the serving phase.
  double lock_time() const;

  bool is_green(Phase p) const { return indication_ == Indication::Green && active_ == p; }
  bool in_clearance() const { return indication_ != Indication::Green; }

  const std::array<std::vector<double>, kNumPhases>& green_start_log() const { return green_start_log_; }
  const std::vector<SignalEvent>& events() const { return events_; }
  // Lengths of completed green intervals, in seconds, per phase (for safety checks).
  const std::vector<std::pair<Phase, double>>& completed_greens() const { return completed_greens_; }
  // Observed (yellow, all-red) durations of every completed clearance.
  const std::vector<std::pair<double, double>>& completed_clearances() const { return completed_clearances_; }

 private:
  std::int64_t ticks(double seconds) const;
  void log(double t, Indication ind, SignalEventKind kind);

  TimingParams timing_;
  double tick_seconds_;
  Phase active_;
  Indication indication_ = Indication::Green;
  std::optional<Phase> pending_;
  std::int64_t elapsed_ticks_ = 0;
  std::int64_t last_yellow_ticks_ = 0;
  std::array<std::vector<double>, kNumPhases> green_start_log_{};
  std::vector<SignalEvent> events_;
  std::vector<std::pair<Phase, double>> completed_greens_;
  std::vector<std::pair<double, double>> completed_clearances_;
};

// Theta' per EW_Through green onset at B: onset time minus the latest A onset at or before it.
std::vector<double> measure_offset(const std::vector<double>& ew_through_onsets_a,
                                   const std::vector<double>& ew_through_onsets_b);

// Base offset: block length over free-flow speed.
inline double base_offset(double spacing_ft, double speed_fps) { return spacing_ft / speed_fps; }

struct OffsetSpec {
  double theta_base = 0.0;
  double delta_theta = 5.0;
  double bonus = 100.0;

  bool within(double theta_prime) const {
    return theta_prime - delta_theta <= theta_base && theta_base <= theta_prime + delta_theta;
  }
};

}  // namespace marlsig::signal
