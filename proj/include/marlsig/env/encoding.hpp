#pragma once

#include <array>
#include <ostream>
#include <vector>

#include "marlsig/rl/mlp.hpp"
#include "marlsig/signal/controller_state.hpp"
#include "marlsig/sim/world.hpp"

namespace marlsig::env {

inline constexpr int kVehStateWidth = sim::kLanesPerIntersection;
inline constexpr int kBackgroundObsWidth = kVehStateWidth + 2 * signal::kNumPhases;
inline constexpr double kBusCellLength = 25.0;
inline constexpr int kBusCells = 32;
inline constexpr int kTspObsWidth = kBackgroundObsWidth + 2 * kBusCells;
inline constexpr double kFpsPerMph = 5280.0 / 3600.0;

struct EncodingOptions {
  // Appends one indication channel per intersection (0 green, 1 yellow, 2 all-red).
  bool indication_channel = false;
};

int background_obs_width(const EncodingOptions& opt = {});
int tsp_obs_width(const EncodingOptions& opt = {});

// Vehicles within comm range of each approach lane's stop bar, fixed local lane order.
std::array<double, kVehStateWidth> veh_state_vector(const sim::World& world, int intersection);
// Elapsed seconds of the current indication in the active phase's cell, zeros elsewhere.
std::array<double, signal::kNumPhases> sig_state_column(const signal::SignalControllerState& state);

struct BusVectors {
  std::array<double, kBusCells> pos{};
  std::array<double, kBusCells> speed{};  // mph
};

// Bus cells over the last comm-range feet of the intersection's eastbound approach. Cells
// count from the upstream zone boundary; a bus is placed by its front (downstream cell).
// With several buses in the zone only the most downstream one is encoded.
BusVectors bus_vectors(const sim::World& world, int intersection);

rl::Vector observe_background(const sim::World& world, int intersection, const EncodingOptions& opt = {});
rl::Vector observe_tsp(const sim::World& world, int intersection, const EncodingOptions& opt = {});

struct RewardParams {
  double ql_th1 = 15.0;
  double ql_th2 = 5.0;
  double penalty_n = 9999.0;
  double penalty_m = 9999.0;
  signal::OffsetSpec offset;
  bool offset_bonus = true;
  double w_bd = 1.0;
  double w_bv = 1.0;
};

void validate(const RewardParams& p);

// What happened at one intersection during one decision epoch.
struct LocalEpoch {
  double delay_sum = 0.0;  // vehicle delay accrued this epoch, s
  int vehicle_count = 0;   // vehicles that accrued
  int max_side_queue = 0;  // at epoch end
  bool premature_change = false;  // left the phase before max green with its queue above ql_th2
  bool offset_hit = false;        // coordinated onset within the offset window this epoch
  bool bus_present = false;       // a bus is on this intersection's approach link
  double bus_delay = 0.0;         // s, accrued this epoch on the approach link
  double bus_speed_mph = 0.0;

  double mean_delay() const { return vehicle_count > 0 ? delay_sum / vehicle_count : 0.0; }
};

bool side_queue_breach(const LocalEpoch& e, const RewardParams& p);

double reward_general(const LocalEpoch& e, const RewardParams& p);
double reward_tsp_independent(const LocalEpoch& e, const RewardParams& p);
double reward_tsp_coordinated(const LocalEpoch& e, const RewardParams& p);
double global_reward(double r1, double r2);

// Premature-change flag for a decision about to be applied.
bool premature_change(const sim::World& world, int intersection, signal::Phase chosen, const RewardParams& p);

// Offset window check over B's coordinated-phase onsets in [t0, t1).
bool offset_hit(const sim::World& world, double t0, double t1, const signal::OffsetSpec& spec);

// Epoch bookkeeping: call begin() right after the joint decision, finish() at the epoch end.
class EpochTracker {
 public:
  void begin(sim::World& world, const std::array<bool, sim::kIntersections>& premature);
  std::array<LocalEpoch, sim::kIntersections> finish(sim::World& world, const RewardParams& p);

 private:
  double t0_ = 0.0;
  std::array<bool, sim::kIntersections> premature_{};
};

// Shared epoch length: the shorter lock time of the two controllers, at least 1 s,
// on the simulation step grid.
double next_epoch(const sim::World& world, double base_step = 1.0);

struct TraceRow {
  double t = 0.0;
  double dt = 0.0;
  std::array<int, sim::kIntersections> actions{};  // -1: held
  std::array<double, sim::kIntersections> local_rewards{};
  double global = 0.0;
  std::array<bool, sim::kIntersections> side_breach{};
  std::array<bool, sim::kIntersections> premature{};
  bool offset_hit = false;
  std::array<bool, sim::kIntersections> tsp_active{};
};

void write_trace_header(std::ostream& os);
void write_trace_row(std::ostream& os, const TraceRow& row);

}  // namespace marlsig::env
