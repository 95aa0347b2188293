#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "marlsig/sim/config.hpp"
#include "marlsig/sim/rng.hpp"
#include "marlsig/signal/controller_state.hpp"

namespace marlsig::sim {

enum class Approach : std::uint8_t { EB, WB, NB, SB };
enum class Turn : std::uint8_t { Through, Left };
enum class VehicleKind : std::uint8_t { Car, Bus };

inline constexpr int kIntersections = 2;
inline constexpr int kLanesPerIntersection = 10;
inline constexpr int kIntersectionA = 0;
inline constexpr int kIntersectionB = 1;

// Local approach-lane order, shared with the observation encoding.
enum LocalLane : int {
  kEbTh1 = 0, kEbTh2, kEbLt, kWbTh1, kWbTh2, kWbLt, kNbTh, kNbLt, kSbTh, kSbLt
};

std::string_view to_string(Approach a);
std::string_view intersection_name(int intersection);

struct Vehicle {
  std::uint64_t id = 0;
  VehicleKind kind = VehicleKind::Car;
  int lane = -1;
  double position = 0.0;  // front, ft from lane upstream end
  double speed = 0.0;     // ft/s
  double length = 15.0;
  double spawn_time = 0.0;
  double approach_entry_time = 0.0;  // start of the current approach+crossing section
  bool corridor = false;             // crossed A eastbound through and continues to B
  double corridor_entry_time = 0.0;
  double corridor_delay = 0.0;
  bool committed_go = false;  // committed to cross on the current yellow
  int bus = -1;               // index into World::buses() for buses
  // Per-epoch accrual on the current approach.
  std::int64_t epoch_ticks = 0;
  double epoch_distance = 0.0;
};

struct BusState {
  std::uint64_t vehicle_id = 0;
  double spawn_time = 0.0;
  double dwell_assigned = 0.0;
  double dwell_remaining = 0.0;
  bool dwelling = false;
  bool stop_served = false;
  bool exited = false;
  double route_position = 0.0;  // front, ft along the EB route from the A entry
  double speed = 0.0;
  std::array<std::optional<double>, kIntersections> checkin_times{};
  std::array<std::optional<double>, kIntersections> checkout_times{};
  std::array<double, kIntersections> zone_delay{};  // delay accrued inside each zone, dwell excluded
  std::optional<double> a_section_end;    // front reaches just upstream of the stop
  std::optional<double> b_section_start;  // front passes just downstream of the stop

  bool in_zone(int intersection) const {
    return checkin_times[intersection].has_value() && !checkout_times[intersection].has_value();
  }
};

enum class BusEventKind : std::uint8_t { Checkin, Checkout };

struct BusEvent {
  double t = 0.0;
  int bus = 0;
  std::uint64_t vehicle_id = 0;
  int intersection = 0;
  BusEventKind kind = BusEventKind::Checkin;
};

// One measurement; run_id and seed are added when written.
struct ProbeRow {
  std::uint64_t entity_id = 0;
  std::string kind;
  std::string section;
  double value = 0.0;
  double t = 0.0;
};

struct LaneSpec {
  int intersection = -1;  // signal governing the stop bar; -1 for departure lanes
  Approach approach = Approach::EB;
  Turn turn = Turn::Through;
  int local = -1;
  double length = 0.0;
  int downstream = -1;  // -1: vehicles exit at the end
  double route_offset = -1.0;  // route coordinate of this lane's start, if on the bus route
};

struct Lane {
  LaneSpec spec;
  std::vector<Vehicle> vehicles;  // front first
  std::deque<Vehicle> entry_buffer;
  std::int64_t last_actuation_tick = std::numeric_limits<std::int64_t>::min() / 2;
  int max_queue = 0;
};

struct IntersectionAccrual {
  double vehicle_delay_sum = 0.0;
  int vehicle_count = 0;
  double bus_delay = 0.0;
};

// Neumaier-compensated running sum, so that many 0.1 s increments add up exactly.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

using DetectorSnapshot = signal::DetectorReadings;

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

signal::Phase phase_of(Approach a, Turn t);
bool is_side_street(Approach a);

// Deterministic 0.1 s corridor microsimulation of intersections A and B.
class World {
 public:
  explicit World(NetworkConfig cfg);

  // One tick in fixed order: spawn, signal timers, dwell countdown, car following,
  // stop-bar crossings, probes. `dt` must equal the configured step.
  void advance(double dt);
  void advance() { advance(cfg_.sim_step); }

  double now() const { return static_cast<double>(tick_) * cfg_.sim_step; }
  std::int64_t tick() const { return tick_; }
  const NetworkConfig& config() const { return cfg_; }

  signal::SignalControllerState& signal(int intersection) { return signals_[intersection]; }
  const signal::SignalControllerState& signal(int intersection) const { return signals_[intersection]; }

  int lane_count() const { return static_cast<int>(lanes_.size()); }
  const Lane& lane(int id) const { return lanes_[id]; }
  static int approach_lane(int intersection, int local) { return intersection * kLanesPerIntersection + local; }
  std::string movement_key(int lane_id) const;

  // Vehicles slower than the queue threshold plus entry-buffer occupancy.
  int queue_length(int lane_id) const;
  // Largest lane queue among the lanes served by `phase`.
  int phase_queue(int intersection, signal::Phase phase) const;
  int max_side_queue(int intersection) const;

  DetectorSnapshot detectors(int intersection) const;

  std::uint64_t spawned_total() const { return spawned_; }
  std::uint64_t exited_total() const { return exited_; }
  std::uint64_t in_network() const;
  std::uint64_t buffered() const;
  std::uint64_t red_violations() const { return red_violations_; }

  const std::vector<BusState>& buses() const { return buses_; }
  const std::vector<BusEvent>& bus_events() const { return bus_events_; }
  // Buses on the approach link of `intersection` (A: entry link, B: A-to-B link).
  std::vector<int> buses_on_approach(int intersection) const;
  double route_stop_bar(int intersection) const;

  void begin_epoch();
  std::array<IntersectionAccrual, kIntersections> close_epoch();

  void set_warmup(double seconds) { warmup_ = seconds; }
  double warmup() const { return warmup_; }
  const std::vector<ProbeRow>& probes() const { return probes_; }
  // Records queue maxima and unfinished tallies. Call once at run end.
  void finalize();

  // Fixture hook: places a vehicle directly on a lane (kept sorted). Returns its id.
  std::uint64_t insert_vehicle(int lane_id, double position, double speed, VehicleKind kind = VehicleKind::Car);
  // Fixture hook: places a bus with the given dwell on a lane along the route.
  std::uint64_t insert_bus(int lane_id, double position, double speed, double dwell);

 private:
  struct SpawnSource {
    std::array<int, 2> lanes{};
    int lane_count = 1;
    double probability = 0.0;
    int next = 0;
  };

  void build_network();
  void spawn();
  void release_entries();
  void schedule_next_bus();
  void countdown_dwell(double dt);
  void car_following(double dt);
  void lane_step(int lane_id, double dt);
  void cross_stop_bars();
  void on_cross(Vehicle& v, const Lane& from);
  void update_buses(double dt);
  void record_probes();
  void check_consistency() const;
  void flush_accrual(Vehicle& v, int intersection);
  Vehicle make_vehicle(int lane_id, VehicleKind kind, double arrival);
  bool movement_allows_cross(const Vehicle& v, const Lane& lane) const;
  void add_row(std::uint64_t id, std::string kind, std::string section, double value, double t);

  NetworkConfig cfg_;
  std::int64_t tick_ = 0;
  double v0_ = 0.0;
  std::vector<Lane> lanes_;
  std::vector<int> update_order_;
  std::array<signal::SignalControllerState, kIntersections> signals_;
  std::vector<SpawnSource> sources_;
  RngStream arrivals_;
  RngStream headway_;
  RngStream dwell_;
  std::uint64_t next_id_ = 1;
  std::uint64_t spawned_ = 0;
  std::uint64_t exited_ = 0;
  std::uint64_t red_violations_ = 0;
  std::vector<BusState> buses_;
  std::vector<BusEvent> bus_events_;
  double next_bus_time_ = 0.0;
  int buses_scheduled_ = 0;
  struct Accrual {
    CompensatedSum vehicle_delay;
    int vehicle_count = 0;
    CompensatedSum bus_delay;
  };
  std::array<Accrual, kIntersections> accrual_{};
  std::array<std::vector<double>, kIntersections> checkins_{};
  double warmup_ = 0.0;
  std::vector<ProbeRow> probes_;
  bool finalized_ = false;
};

// Inverse-CDF dwell draw with linear interpolation; 0 s means the stop is skipped.
double sample_dwell(const DwellCdf& cdf, double u);
double sample_dwell(const DwellCdf& cdf, RngStream& rng);

// Intelligent Driver Model acceleration toward a leader `gap` ft ahead closing at `dv` ft/s.
double idm_acceleration(const IdmParams& p, double v, double v0, double gap, double dv);
double idm_free_acceleration(const IdmParams& p, double v, double v0);
// Bumper-to-bumper spacing a follower holds behind a leader moving at constant speed v.
double idm_equilibrium_gap(const IdmParams& p, double v, double v0);

// Free-flow difference delay over a section: traversal time minus length / speed.
double measure_delay(double traversal_time, double section_length, double free_speed);

}  // namespace marlsig::sim
