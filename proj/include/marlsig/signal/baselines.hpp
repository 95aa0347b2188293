#pragma once

#include <array>

#include "marlsig/signal/controller_state.hpp"
#include "marlsig/sim/config.hpp"

namespace marlsig::signal {

// Ring order shared by both baselines.
inline constexpr std::array<Phase, kNumPhases> kRingSequence = {Phase::EWThrough, Phase::EWLeft, Phase::NSThrough,
                                                                Phase::NSLeft};

Phase next_in_ring(Phase p);

// Critical per-lane flow (veh/h) of each phase, indexed by phase.
std::array<double, kNumPhases> critical_lane_flows(const sim::Demand& demand);

struct WebsterPlan {
  double flow_ratio_sum = 0.0;   // Y
  double lost_time = 0.0;        // L, seconds per cycle
  double optimal_cycle = 0.0;    // (1.5 L + 5) / (1 - Y), before clamping
  double cycle = 0.0;            // after clamping and green rounding
  std::array<double, kNumPhases> green{};
};

// Webster's optimal cycle with greens proportional to critical flow ratios. Greens are
// clamped to the timing's min/max and rounded to 0.1 s; the cycle is rebuilt from them.
WebsterPlan webster_plan(const std::array<double, kNumPhases>& lane_flows, double saturation_flow,
                         const TimingParams& timing, double min_cycle = 60.0, double max_cycle = 120.0);

struct FixedTimePlan {
  std::array<double, kNumPhases> green{};  // by phase index
  double clearance = 5.0;
  double offset = 0.0;

  double cycle() const;
};

// Phase that should be green (or being cleared toward) at time t.
Phase fixed_time_decide(const SignalControllerState& state, const FixedTimePlan& plan, double t);

struct ActuatedPlan {
  std::array<double, kNumPhases> max_green{};  // split greens by phase; coordinated entry is its yield point
  double cycle = 0.0;
  double offset = 0.0;
  double gap_out = 3.0;
  double clearance = 5.0;
  Phase coordinated = Phase::EWThrough;
};

// Coordinated-actuated single ring: the coordinated phase holds until its cycle-anchored
// yield point; side phases gap out, max out, or hit their force-off; phases without a
// call are skipped.
Phase actuated_decide(const SignalControllerState& state, const DetectorReadings& detectors, const ActuatedPlan& plan,
                      double t);

FixedTimePlan fixed_plan_from(const WebsterPlan& w, const TimingParams& timing, double offset);
ActuatedPlan actuated_plan_from(const WebsterPlan& w, const TimingParams& timing, double offset);

}  // namespace marlsig::signal
