#pragma once

#include <string>
#include <vector>

#include "marlsig/env/encoding.hpp"
#include "marlsig/sim/world.hpp"

// Hand-built worlds shared by the unit and acceptance suites.
namespace marlsig::fixtures {

using signal::Phase;
using signal::SignalControllerState;
using sim::World;

inline sim::NetworkConfig quiet_network() {
  sim::NetworkConfig cfg;
  cfg.demand = {0, 0, 0, 0, 0};
  cfg.buses_enabled = false;
  return cfg;
}

inline void run_for(World& w, double seconds) {
  const auto n = static_cast<int>(std::lround(seconds / w.config().sim_step));
  for (int k = 0; k < n; ++k) w.advance();
}

inline SignalControllerState fresh_signal(const World& w, Phase p) {
  return SignalControllerState(w.config().timing, w.config().sim_step, p);
}

// Empty network; A green on EW through for 12 s, B green on NS left for 22 s.
inline rl::Vector signal_state_example() {
  World w(quiet_network());
  w.signal(sim::kIntersectionB) = fresh_signal(w, Phase::NSLeft);
  run_for(w, 10);
  w.signal(sim::kIntersectionA) = fresh_signal(w, Phase::EWThrough);
  run_for(w, 12);
  return env::observe_background(w, sim::kIntersectionA);
}

// Bus front in the fourth 25 ft cell of A's zone, travelling at 36 mph.
inline env::BusVectors bus_cell_example() {
  World w(quiet_network());
  const int lane = World::approach_lane(sim::kIntersectionA, sim::kEbTh2);
  const double zone_start = w.route_stop_bar(sim::kIntersectionA) - w.config().comm_range;
  w.insert_bus(lane, zone_start + 3 * env::kBusCellLength + 10.0, 36.0 * env::kFpsPerMph, 0.0);
  return env::bus_vectors(w, sim::kIntersectionA);
}

struct RewardCase {
  std::string name;
  double expected = 0.0;
  double got = 0.0;
};

// Stopped vehicles standing bumper to bumper from the stop bar back.
inline void stopped_queue(World& w, int lane, int n) {
  const double bar = w.lane(lane).spec.length;
  const double spacing = w.config().idm.vehicle_length + w.config().idm.min_gap;
  for (int k = 0; k < n; ++k) w.insert_vehicle(lane, bar - spacing * k, 0.0);
}

inline std::vector<RewardCase> reward_cases() {
  using sim::kIntersectionA;
  using sim::kIntersectionB;
  const env::RewardParams params;
  std::vector<RewardCase> out;

  // 20 vehicles held 15 s at a red on A's eastbound through lanes.
  auto delay_world = [&](bool side_queue) {
    World w(quiet_network());
    w.signal(kIntersectionA) = fresh_signal(w, Phase::NSThrough);
    stopped_queue(w, World::approach_lane(kIntersectionA, sim::kEbTh1), 10);
    stopped_queue(w, World::approach_lane(kIntersectionA, sim::kEbTh2), 10);
    if (side_queue) stopped_queue(w, World::approach_lane(kIntersectionA, sim::kNbLt), 16);
    env::EpochTracker tracker;
    tracker.begin(w, {false, false});
    run_for(w, 15);
    return tracker.finish(w, params)[kIntersectionA];
  };
  {
    const auto e = delay_world(false);
    out.push_back({"general: 20 vehicles, 300 s delay", -15.0, env::reward_general(e, params)});
  }
  {
    const auto e = delay_world(true);
    out.push_back({"general: side queue 16 > 15", -15.0 - 9999.0, env::reward_general(e, params)});
  }
  {
    // A and B both start on NS left; EW through onsets at 10 s (A) and 37 s (B).
    World w(quiet_network());
    w.signal(kIntersectionA) = fresh_signal(w, Phase::NSLeft);
    w.signal(kIntersectionB) = fresh_signal(w, Phase::NSLeft);
    run_for(w, 5);
    w.signal(kIntersectionA).apply_action(Phase::EWThrough, w.now());
    run_for(w, 27);
    w.signal(kIntersectionB).apply_action(Phase::EWThrough, w.now());
    env::EpochTracker tracker;
    tracker.begin(w, {false, false});
    run_for(w, 8);
    env::RewardParams p = params;
    p.offset.theta_base = signal::base_offset(w.config().intersection_spacing, w.config().desired_speed_fps());
    const auto e = tracker.finish(w, p);
    out.push_back({"general: offset hit, no delay", 100.0, env::reward_general(e[kIntersectionB], p)});
  }
  {
    // Bus standing at A's red stop bar for a 4 s epoch.
    World w(quiet_network());
    w.signal(kIntersectionA) = fresh_signal(w, Phase::NSThrough);
    const int lane = World::approach_lane(kIntersectionA, sim::kEbTh2);
    w.insert_bus(lane, w.lane(lane).spec.length, 0.0, 0.0);
    env::EpochTracker tracker;
    tracker.begin(w, {false, false});
    run_for(w, 4);
    const auto e = tracker.finish(w, params);
    out.push_back({"tsp independent: stopped bus, 4 s", -4.0, env::reward_tsp_independent(e[kIntersectionA], params)});
    out.push_back({"tsp coordinated: bus on A's link only, B", 0.0,
                   env::reward_tsp_coordinated(e[kIntersectionB], params)});
  }
  {
    // Bus cruising at 40 mph on a green approach.
    World w(quiet_network());
    const int lane = World::approach_lane(kIntersectionA, sim::kEbTh2);
    w.insert_bus(lane, 200.0, w.config().desired_speed_fps(), 0.0);
    env::EpochTracker tracker;
    tracker.begin(w, {false, false});
    run_for(w, 4);
    const auto e = tracker.finish(w, params);
    out.push_back({"tsp independent: free-flowing bus", 40.0, env::reward_tsp_independent(e[kIntersectionA], params)});
  }
  {
    env::LocalEpoch e;
    e.delay_sum = 50.0;
    e.vehicle_count = 5;
    e.bus_present = true;
    e.bus_delay = 2.0;
    e.bus_speed_mph = 20.0;
    out.push_back({"tsp coordinated: delay 10, b_d 2, b_v 20", 8.0, env::reward_tsp_coordinated(e, params)});
  }
  return out;
}

}  // namespace marlsig::fixtures
