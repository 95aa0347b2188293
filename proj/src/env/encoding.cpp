#include "marlsig/env/encoding.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "marlsig/contract.hpp"

namespace marlsig::env {

using signal::Phase;
using sim::World;

namespace {

int other(int intersection) { return intersection == sim::kIntersectionA ? sim::kIntersectionB : sim::kIntersectionA; }

double indication_code(const signal::SignalControllerState& s) {
  switch (s.indication()) {
    case signal::Indication::Green: return 0.0;
    case signal::Indication::Yellow: return 1.0;
    case signal::Indication::AllRed: return 2.0;
  }
  return 0.0;
}

}  // namespace

int background_obs_width(const EncodingOptions& opt) {
  return kBackgroundObsWidth + (opt.indication_channel ? 2 : 0);
}

int tsp_obs_width(const EncodingOptions& opt) { return background_obs_width(opt) + 2 * kBusCells; }

std::array<double, kVehStateWidth> veh_state_vector(const World& world, int intersection) {
  std::array<double, kVehStateWidth> out{};
  const double range = world.config().comm_range;
  for (int local = 0; local < kVehStateWidth; ++local) {
    const auto& lane = world.lane(World::approach_lane(intersection, local));
    for (const auto& v : lane.vehicles)
      if (lane.spec.length - v.position <= range) out[local] += 1.0;
  }
  return out;
}

std::array<double, signal::kNumPhases> sig_state_column(const signal::SignalControllerState& state) {
  std::array<double, signal::kNumPhases> col{};
  col[signal::index_of(state.active_phase())] = state.elapsed_in_indication();
  return col;
}

BusVectors bus_vectors(const World& world, int intersection) {
  BusVectors out;
  const double bar = world.route_stop_bar(intersection);
  const double range = world.config().comm_range;
  const double cell = range / kBusCells;
  const double zone_start = bar - range;
  int best = -1;
  for (int b : world.buses_on_approach(intersection)) {
    const auto& bus = world.buses()[b];
    if (!std::isfinite(bus.route_position) || bar - bus.route_position > range) continue;
    if (best < 0 || bus.route_position > world.buses()[best].route_position) best = b;
  }
  if (best < 0) return out;
  const auto& bus = world.buses()[best];
  const int k = std::clamp(static_cast<int>(std::floor((bus.route_position - zone_start) / cell)), 0, kBusCells - 1);
  out.pos[k] = 1.0;
  out.speed[k] = bus.speed / kFpsPerMph;
  return out;
}

rl::Vector observe_background(const World& world, int intersection, const EncodingOptions& opt) {
  rl::Vector obs(background_obs_width(opt));
  const auto veh = veh_state_vector(world, intersection);
  const auto own = sig_state_column(world.signal(intersection));
  const auto adj = sig_state_column(world.signal(other(intersection)));
  int k = 0;
  for (double x : veh) obs(k++) = x;
  for (double x : own) obs(k++) = x;
  for (double x : adj) obs(k++) = x;
  if (opt.indication_channel) {
    obs(k++) = indication_code(world.signal(intersection));
    obs(k++) = indication_code(world.signal(other(intersection)));
  }
  return obs;
}

rl::Vector observe_tsp(const World& world, int intersection, const EncodingOptions& opt) {
  const rl::Vector base = observe_background(world, intersection, opt);
  rl::Vector obs(tsp_obs_width(opt));
  obs.head(base.size()) = base;
  const auto bus = bus_vectors(world, intersection);
  Eigen::Index k = base.size();
  for (double x : bus.pos) obs(k++) = x;
  for (double x : bus.speed) obs(k++) = x;
  return obs;
}

void validate(const RewardParams& p) {
  MARLSIG_EXPECTS(p.ql_th1 > 0.0 && p.ql_th2 > 0.0);
  MARLSIG_EXPECTS(p.w_bd >= 0.0 && p.w_bv >= 0.0);
  MARLSIG_EXPECTS(p.penalty_n >= 0.0 && p.penalty_m >= 0.0);
}

bool side_queue_breach(const LocalEpoch& e, const RewardParams& p) { return e.max_side_queue > p.ql_th1; }

double reward_general(const LocalEpoch& e, const RewardParams& p) {
  double r = -e.mean_delay();
  if (side_queue_breach(e, p)) r -= p.penalty_n;
  if (e.premature_change) r -= p.penalty_m;
  if (p.offset_bonus && e.offset_hit) r += p.offset.bonus;
  return r;
}

double reward_tsp_independent(const LocalEpoch& e, const RewardParams& p) {
  double r = -e.bus_delay + e.bus_speed_mph;
  if (side_queue_breach(e, p)) r -= p.penalty_m;
  return r;
}

double reward_tsp_coordinated(const LocalEpoch& e, const RewardParams& p) {
  double r = -e.mean_delay() - p.w_bd * e.bus_delay + p.w_bv * e.bus_speed_mph;
  if (side_queue_breach(e, p)) r -= p.penalty_m;
  return r;
}

double global_reward(double r1, double r2) { return 0.5 * (r1 + r2); }

bool premature_change(const World& world, int intersection, Phase chosen, const RewardParams& p) {
  const auto& s = world.signal(intersection);
  if (s.in_clearance() || chosen == s.active_phase()) return false;
  const Phase active = s.active_phase();
  return s.elapsed_green() < s.timing().max_green(active) &&
         world.phase_queue(intersection, active) > p.ql_th2;
}

bool offset_hit(const World& world, double t0, double t1, const signal::OffsetSpec& spec) {
  const auto idx = signal::index_of(Phase::EWThrough);
  const auto& a = world.signal(sim::kIntersectionA).green_start_log()[idx];
  const auto& b = world.signal(sim::kIntersectionB).green_start_log()[idx];
  const double eps = 1e-9;
  std::vector<double> recent;
  for (double t : b)
    if (t > t0 + eps && t <= t1 + eps) recent.push_back(t);
  if (recent.empty()) return false;
  for (double theta : signal::measure_offset(a, recent))
    if (spec.within(theta)) return true;
  return false;
}

void EpochTracker::begin(World& world, const std::array<bool, sim::kIntersections>& premature) {
  t0_ = world.now();
  premature_ = premature;
  world.begin_epoch();
}

std::array<LocalEpoch, sim::kIntersections> EpochTracker::finish(World& world, const RewardParams& p) {
  const auto acc = world.close_epoch();
  const bool hit = offset_hit(world, t0_, world.now(), p.offset);
  std::array<LocalEpoch, sim::kIntersections> out;
  for (int i = 0; i < sim::kIntersections; ++i) {
    auto& e = out[i];
    e.delay_sum = acc[i].vehicle_delay_sum;
    e.vehicle_count = acc[i].vehicle_count;
    e.max_side_queue = world.max_side_queue(i);
    e.premature_change = premature_[i];
    e.offset_hit = hit;
    e.bus_delay = acc[i].bus_delay;
    double lead = -1.0;
    for (int b : world.buses_on_approach(i)) {
      const auto& bus = world.buses()[b];
      if (bus.route_position > lead) {
        lead = bus.route_position;
        e.bus_present = true;
        e.bus_speed_mph = bus.speed / kFpsPerMph;
      }
    }
  }
  return out;
}

double next_epoch(const World& world, double base_step) {
  const double lock = std::min(world.signal(sim::kIntersectionA).lock_time(),
                               world.signal(sim::kIntersectionB).lock_time());
  const double step = world.config().sim_step;
  const double dt = std::max(base_step, lock);
  return static_cast<double>(std::llround(dt / step)) * step;
}

void write_trace_header(std::ostream& os) {
  os << "t,dt,action_A,action_B,r_A,r_B,R,side_breach_A,side_breach_B,premature_A,premature_B,offset_hit,"
        "tsp_A,tsp_B\n";
}

void write_trace_row(std::ostream& os, const TraceRow& r) {
  os << fmt::format("{:.1f},{:.1f},{},{},{:.6g},{:.6g},{:.6g},{:d},{:d},{:d},{:d},{:d},{:d},{:d}\n", r.t, r.dt,
                    r.actions[0], r.actions[1], r.local_rewards[0], r.local_rewards[1], r.global, r.side_breach[0],
                    r.side_breach[1], r.premature[0], r.premature[1], r.offset_hit, r.tsp_active[0],
                    r.tsp_active[1]);
}

}  // namespace marlsig::env
