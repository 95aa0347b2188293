#include "marlsig/signal/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace marlsig::signal {

namespace {

double cycle_position(double t, double offset, double cycle) {
  double local = std::fmod(t - offset, cycle);
  if (local < 0.0) local += cycle;
  return local;
}

double round_tenth(double x) { return std::round(x * 10.0) / 10.0; }

}  // namespace

Phase next_in_ring(Phase p) {
  for (int k = 0; k < kNumPhases; ++k)
    if (kRingSequence[k] == p) return kRingSequence[(k + 1) % kNumPhases];
  return kRingSequence[0];
}

std::array<double, kNumPhases> critical_lane_flows(const sim::Demand& d) {
  std::array<double, kNumPhases> f{};
  f[index_of(Phase::EWThrough)] = d.main_through / 2.0;
  f[index_of(Phase::EWLeft)] = d.main_left;
  f[index_of(Phase::NSThrough)] = d.cross_through;
  f[index_of(Phase::NSLeft)] = d.cross_left;
  return f;
}

WebsterPlan webster_plan(const std::array<double, kNumPhases>& lane_flows, double saturation_flow,
                         const TimingParams& timing, double min_cycle, double max_cycle) {
  WebsterPlan plan;
  std::array<double, kNumPhases> y{};
  for (int p = 0; p < kNumPhases; ++p) {
    y[p] = lane_flows[p] / saturation_flow;
    plan.flow_ratio_sum += y[p];
  }
  plan.lost_time = kNumPhases * timing.clearance();
  plan.optimal_cycle = plan.flow_ratio_sum < 1.0 ? (1.5 * plan.lost_time + 5.0) / (1.0 - plan.flow_ratio_sum)
                                                 : max_cycle;
  const double cycle = std::clamp(plan.optimal_cycle, min_cycle, max_cycle);
  const double effective = cycle - plan.lost_time;
  plan.cycle = 0.0;
  for (int p = 0; p < kNumPhases; ++p) {
    const Phase ph = phase_from_index(p);
    double g = plan.flow_ratio_sum > 0.0 ? effective * y[p] / plan.flow_ratio_sum : effective / kNumPhases;
    g = round_tenth(std::clamp(g, timing.min_green(ph), timing.max_green(ph)));
    plan.green[p] = g;
    plan.cycle += g + timing.clearance();
  }
  return plan;
}

double FixedTimePlan::cycle() const {
  double c = 0.0;
  for (double g : green) c += g + clearance;
  return c;
}

Phase fixed_time_decide(const SignalControllerState&, const FixedTimePlan& plan, double t) {
  const double local = cycle_position(t, plan.offset, plan.cycle());
  double start = 0.0;
  for (int k = 0; k < kNumPhases; ++k) {
    const Phase p = kRingSequence[k];
    const double green_end = start + plan.green[index_of(p)];
    if (local < green_end) return p;
    const double segment_end = green_end + plan.clearance;
    if (local < segment_end) return kRingSequence[(k + 1) % kNumPhases];
    start = segment_end;
  }
  return kRingSequence[0];
}

Phase actuated_decide(const SignalControllerState& state, const DetectorReadings& det, const ActuatedPlan& plan,
                      double t) {
  if (state.in_clearance()) return state.serving_phase();
  const Phase active = state.active_phase();
  const double elapsed = state.elapsed_green();
  const double eps = 1e-9;
  if (elapsed + eps < state.timing().min_green(active)) return active;

  const double local = cycle_position(t, plan.offset, plan.cycle);
  const double yield_point = plan.max_green[index_of(plan.coordinated)];
  const bool timing_max_out = elapsed + eps >= state.timing().max_green(active);

  auto next_with_call = [&](Phase from) {
    Phase p = next_in_ring(from);
    while (p != plan.coordinated) {
      if (det.call[index_of(p)]) return p;
      p = next_in_ring(p);
    }
    return plan.coordinated;
  };

  if (active == plan.coordinated) {
    // Yield once per cycle: only a green that was already running at the yield point.
    const bool at_yield = local + eps >= yield_point && elapsed + eps >= local - yield_point;
    if (at_yield || timing_max_out) {
      const Phase next = next_with_call(active);
      if (next != active) return next;
      if (timing_max_out) return next_in_ring(active);
    }
    return active;
  }

  // Force-off point of this side phase within the cycle.
  double force_off = yield_point + plan.clearance;
  for (Phase p = next_in_ring(plan.coordinated); p != active; p = next_in_ring(p))
    force_off += plan.max_green[index_of(p)] + plan.clearance;
  force_off += plan.max_green[index_of(active)];

  const bool forced = local + eps < yield_point || local + eps >= force_off;
  const bool gap_out = det.gap[index_of(active)] > plan.gap_out;
  const bool max_out = timing_max_out || elapsed + eps >= plan.max_green[index_of(active)];
  if (forced || gap_out || max_out) return next_with_call(active);
  return active;
}

FixedTimePlan fixed_plan_from(const WebsterPlan& w, const TimingParams& timing, double offset) {
  FixedTimePlan plan;
  plan.green = w.green;
  plan.clearance = timing.clearance();
  plan.offset = offset;
  return plan;
}

ActuatedPlan actuated_plan_from(const WebsterPlan& w, const TimingParams& timing, double offset) {
  ActuatedPlan plan;
  plan.max_green = w.green;
  plan.cycle = w.cycle;
  plan.offset = offset;
  plan.clearance = timing.clearance();
  return plan;
}

}  // namespace marlsig::signal
