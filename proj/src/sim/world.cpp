#include "marlsig/sim/world.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "marlsig/contract.hpp"

namespace marlsig::sim {

using signal::Indication;
using signal::Phase;

namespace {

constexpr double kSideWindow = 300.0;
constexpr double kStopApproachMargin = 100.0;  // Inter A_EB ends this far before the stop
constexpr double kStopDepartMargin = 50.0;     // Inter B_EB starts this far past the stop

struct LocalLaneInfo {
  Approach approach;
  Turn turn;
  const char* tag;
};

constexpr std::array<LocalLaneInfo, kLanesPerIntersection> kLocal = {{
    {Approach::EB, Turn::Through, "TH"},
    {Approach::EB, Turn::Through, "TH"},
    {Approach::EB, Turn::Left, "LT"},
    {Approach::WB, Turn::Through, "TH"},
    {Approach::WB, Turn::Through, "TH"},
    {Approach::WB, Turn::Left, "LT"},
    {Approach::NB, Turn::Through, "TH"},
    {Approach::NB, Turn::Left, "LT"},
    {Approach::SB, Turn::Through, "TH"},
    {Approach::SB, Turn::Left, "LT"},
}};

}  // namespace

std::string_view to_string(Approach a) {
  switch (a) {
    case Approach::EB: return "EB";
    case Approach::WB: return "WB";
    case Approach::NB: return "NB";
    case Approach::SB: return "SB";
  }
  return "?";
}

std::string_view intersection_name(int intersection) { return intersection == kIntersectionA ? "A" : "B"; }

signal::Phase phase_of(Approach a, Turn t) {
  const bool main = a == Approach::EB || a == Approach::WB;
  if (main) return t == Turn::Through ? Phase::EWThrough : Phase::EWLeft;
  return t == Turn::Through ? Phase::NSThrough : Phase::NSLeft;
}

bool is_side_street(Approach a) { return a == Approach::NB || a == Approach::SB; }

double sample_dwell(const DwellCdf& cdf, double u) {
  const auto& bp = cdf.breakpoints;
  if (u <= bp.front().first) return bp.front().second;
  for (std::size_t i = 1; i < bp.size(); ++i) {
    if (u <= bp[i].first) {
      const double frac = (u - bp[i - 1].first) / (bp[i].first - bp[i - 1].first);
      return bp[i - 1].second + frac * (bp[i].second - bp[i - 1].second);
    }
  }
  return bp.back().second;
}

double sample_dwell(const DwellCdf& cdf, RngStream& rng) { return sample_dwell(cdf, rng.uniform()); }

double idm_free_acceleration(const IdmParams& p, double v, double v0) {
  const double r = v / v0;
  return p.max_accel * (1.0 - r * r * r * r);
}

double idm_acceleration(const IdmParams& p, double v, double v0, double gap, double dv) {
  const double s_star =
      p.min_gap + std::max(0.0, v * p.headway_time + v * dv / (2.0 * std::sqrt(p.max_accel * p.comfortable_decel)));
  const double s = std::max(gap, 1e-3);
  const double r = v / v0;
  return p.max_accel * (1.0 - r * r * r * r - (s_star / s) * (s_star / s));
}

double idm_equilibrium_gap(const IdmParams& p, double v, double v0) {
  const double r = v / v0;
  return (p.min_gap + v * p.headway_time) / std::sqrt(1.0 - r * r * r * r);
}

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
  sum_ = t;
}

double measure_delay(double traversal_time, double section_length, double free_speed) {
  return traversal_time - section_length / free_speed;
}

World::World(NetworkConfig cfg)
    : cfg_(std::move(cfg)),
      signals_{signal::SignalControllerState(cfg_.timing, cfg_.sim_step),
               signal::SignalControllerState(cfg_.timing, cfg_.sim_step)},
      arrivals_(cfg_.seed, "arrivals"),
      headway_(cfg_.seed, "headway"),
      dwell_(cfg_.seed, "dwell") {
  validate(cfg_);
  v0_ = cfg_.desired_speed_fps();
  build_network();
  schedule_next_bus();
}

void World::build_network() {
  lanes_.clear();
  for (int i = 0; i < kIntersections; ++i) {
    for (int local = 0; local < kLanesPerIntersection; ++local) {
      Lane lane;
      auto& s = lane.spec;
      s.intersection = i;
      s.approach = kLocal[local].approach;
      s.turn = kLocal[local].turn;
      s.local = local;
      const bool internal = (i == kIntersectionA && s.approach == Approach::WB) ||
                            (i == kIntersectionB && s.approach == Approach::EB);
      s.length = internal ? cfg_.intersection_spacing : cfg_.entry_link_length;
      if (i == kIntersectionA && s.approach == Approach::EB) s.route_offset = 0.0;
      if (i == kIntersectionB && s.approach == Approach::EB) s.route_offset = cfg_.entry_link_length;
      lanes_.push_back(std::move(lane));
    }
  }
  // Departure segments, one per approach lane except A's eastbound through lanes.
  const int approach_lanes = static_cast<int>(lanes_.size());
  for (int id = 0; id < approach_lanes; ++id) {
    auto& s = lanes_[id].spec;
    if (s.intersection == kIntersectionA && s.approach == Approach::EB && s.turn == Turn::Through) {
      s.downstream = approach_lane(kIntersectionB, s.local);
      continue;
    }
    Lane dep;
    dep.spec.intersection = -1;
    dep.spec.approach = s.approach;
    dep.spec.turn = s.turn;
    dep.spec.local = s.local;
    dep.spec.length = cfg_.departure_length;
    if (s.intersection == kIntersectionB && s.approach == Approach::EB && s.turn == Turn::Through)
      dep.spec.route_offset = cfg_.entry_link_length + cfg_.intersection_spacing;
    s.downstream = static_cast<int>(lanes_.size());
    lanes_.push_back(std::move(dep));
  }
  update_order_.clear();
  for (int id = approach_lanes; id < static_cast<int>(lanes_.size()); ++id) update_order_.push_back(id);
  for (int local = 0; local < kLanesPerIntersection; ++local)
    update_order_.push_back(approach_lane(kIntersectionB, local));
  for (int local = 0; local < kLanesPerIntersection; ++local)
    update_order_.push_back(approach_lane(kIntersectionA, local));

  const double step_hours = cfg_.sim_step / 3600.0;
  const auto& d = cfg_.demand;
  auto add = [&](int i, std::initializer_list<int> locals, double rate) {
    SpawnSource src;
    int n = 0;
    for (int l : locals) src.lanes[n++] = approach_lane(i, l);
    src.lane_count = n;
    src.probability = rate * step_hours;
    sources_.push_back(src);
  };
  sources_.clear();
  add(kIntersectionA, {kEbTh1, kEbTh2}, d.main_through);
  add(kIntersectionA, {kEbLt}, d.main_left);
  add(kIntersectionA, {kWbTh1, kWbTh2}, d.main_through);
  add(kIntersectionA, {kWbLt}, d.main_left);
  add(kIntersectionA, {kNbTh}, d.cross_through);
  add(kIntersectionA, {kNbLt}, d.cross_left);
  add(kIntersectionA, {kSbTh}, d.cross_through);
  add(kIntersectionA, {kSbLt}, d.cross_left);
  // B's eastbound through lanes are fed by A; its left-turn bay gets its own arrivals.
  add(kIntersectionB, {kEbLt}, d.main_left);
  add(kIntersectionB, {kWbTh1, kWbTh2}, d.main_through);
  add(kIntersectionB, {kWbLt}, d.main_left);
  add(kIntersectionB, {kNbTh}, d.cross_through);
  add(kIntersectionB, {kNbLt}, d.cross_left);
  add(kIntersectionB, {kSbTh}, d.cross_through);
  add(kIntersectionB, {kSbLt}, d.cross_left);
}

std::string World::movement_key(int lane_id) const {
  const auto& s = lanes_[lane_id].spec;
  std::string key;
  if (s.intersection >= 0) {
    key += intersection_name(s.intersection);
    key += '_';
  }
  key += to_string(s.approach);
  key += s.turn == Turn::Through ? "_TH" : "_LT";
  return key;
}

double World::route_stop_bar(int intersection) const {
  return cfg_.entry_link_length + (intersection == kIntersectionB ? cfg_.intersection_spacing : 0.0);
}

void World::schedule_next_bus() {
  if (!cfg_.buses_enabled) {
    next_bus_time_ = std::numeric_limits<double>::infinity();
    return;
  }
  const double jitter = headway_.uniform(-cfg_.bus_headway_jitter, cfg_.bus_headway_jitter);
  next_bus_time_ = std::max(0.0, cfg_.bus_first_arrival + buses_scheduled_ * cfg_.bus_headway_mean + jitter);
  ++buses_scheduled_;
}

Vehicle World::make_vehicle(int lane_id, VehicleKind kind, double arrival) {
  Vehicle v;
  v.id = next_id_++;
  v.kind = kind;
  v.lane = lane_id;
  v.length = kind == VehicleKind::Bus ? cfg_.idm.bus_length : cfg_.idm.vehicle_length;
  v.spawn_time = arrival;
  v.approach_entry_time = arrival;
  return v;
}

void World::spawn() {
  const double t = now();
  for (auto& src : sources_) {
    if (arrivals_.uniform() >= src.probability) continue;
    const int lane_id = src.lanes[src.next];
    src.next = (src.next + 1) % src.lane_count;
    lanes_[lane_id].entry_buffer.push_back(make_vehicle(lane_id, VehicleKind::Car, t));
    ++spawned_;
  }
  while (t >= next_bus_time_) {
    const int lane_id = approach_lane(kIntersectionA, kEbTh2);
    Vehicle v = make_vehicle(lane_id, VehicleKind::Bus, next_bus_time_);
    BusState bus;
    bus.vehicle_id = v.id;
    bus.spawn_time = next_bus_time_;
    bus.dwell_assigned = sample_dwell(cfg_.dwell_cdf, dwell_);
    bus.stop_served = bus.dwell_assigned <= 0.0;
    bus.route_position = -std::numeric_limits<double>::infinity();
    v.bus = static_cast<int>(buses_.size());
    buses_.push_back(bus);
    lanes_[lane_id].entry_buffer.push_back(v);
    ++spawned_;
    schedule_next_bus();
  }
  release_entries();
}

void World::release_entries() {
  const double dt = cfg_.sim_step;
  for (auto& lane : lanes_) {
    if (lane.entry_buffer.empty()) continue;
    for (auto& v : lane.entry_buffer) ++v.epoch_ticks;
    double speed = v0_;
    if (!lane.vehicles.empty()) {
      const Vehicle& last = lane.vehicles.back();
      const double gap = last.position - last.length;
      if (gap < cfg_.idm.min_gap) continue;
      if (gap < cfg_.idm.min_gap + v0_ * cfg_.idm.headway_time) speed = std::min(v0_, last.speed);
    }
    Vehicle v = lane.entry_buffer.front();
    lane.entry_buffer.pop_front();
    v.position = 0.0;
    v.speed = speed;
    lane.vehicles.push_back(v);
  }
}

void World::countdown_dwell(double dt) {
  for (auto& bus : buses_) {
    if (!bus.dwelling) continue;
    bus.dwell_remaining -= dt;
    if (bus.dwell_remaining <= 1e-9) {
      bus.dwell_remaining = 0.0;
      bus.dwelling = false;
      bus.stop_served = true;
    }
  }
}

void World::car_following(double dt) {
  for (int id : update_order_) lane_step(id, dt);
}

void World::lane_step(int lane_id, double dt) {
  Lane& lane = lanes_[lane_id];
  auto& vs = lane.vehicles;
  if (vs.empty()) return;
  const auto& p = cfg_.idm;
  const double len = lane.spec.length;
  const int inter = lane.spec.intersection;
  const signal::SignalControllerState* sig = inter >= 0 ? &signals_[inter] : nullptr;
  const Phase phase = phase_of(lane.spec.approach, lane.spec.turn);
  bool green = false, yellow = false;
  double yellow_left = 0.0;
  if (sig) {
    green = sig->is_green(phase);
    yellow = sig->indication() == Indication::Yellow && sig->active_phase() == phase;
    if (yellow) yellow_left = sig->timing().yellow - sig->elapsed_in_indication();
  }
  const bool stop_lane = lane_id == approach_lane(kIntersectionB, kEbTh2);
  const Lane* down = lane.spec.downstream >= 0 ? &lanes_[lane.spec.downstream] : nullptr;

  double lead_old_pos = 0.0, lead_old_speed = 0.0;
  for (std::size_t k = 0; k < vs.size(); ++k) {
    Vehicle& v = vs[k];
    const double x0 = v.position;
    const double s0 = v.speed;
    double acc = idm_free_acceleration(p, s0, v0_);
    double limit = std::numeric_limits<double>::infinity();
    double limit_speed = v0_;

    if (k > 0) {
      const Vehicle& lead = vs[k - 1];
      acc = std::min(acc, idm_acceleration(p, s0, v0_, lead_old_pos - lead.length - x0, s0 - lead_old_speed));
      limit = lead.position - lead.length;
      limit_speed = lead.speed;
    } else if (down && !down->vehicles.empty()) {
      const Vehicle& last = down->vehicles.back();
      acc = std::min(acc, idm_acceleration(p, s0, v0_, len - x0 + last.position - last.length, s0 - last.speed));
      limit = len + last.position - last.length;
      limit_speed = last.speed;
    }

    bool hold_at_bar = false;
    if (sig) {
      if (green) {
        v.committed_go = false;
      } else if (yellow) {
        if (!v.committed_go) {
          const double dist = len - x0;
          const bool can_stop = s0 * s0 / (2.0 * p.comfortable_decel) <= dist;
          const bool can_clear = dist < s0 * yellow_left;
          if (!can_stop && can_clear) v.committed_go = true;
        }
        hold_at_bar = !v.committed_go;
      } else {
        hold_at_bar = true;
      }
      if (hold_at_bar) acc = std::min(acc, idm_acceleration(p, s0, v0_, len - x0 + p.min_gap, s0));
    }

    bool hold_at_stop = false;
    if (stop_lane && v.bus >= 0) {
      const BusState& bus = buses_[v.bus];
      if (!bus.stop_served && bus.dwell_assigned > 0.0 && x0 <= cfg_.bus_stop) {
        hold_at_stop = true;
        acc = std::min(acc, idm_acceleration(p, s0, v0_, cfg_.bus_stop - x0 + p.min_gap, s0));
      }
    }

    double x1 = x0 + s0 * dt;
    double s1 = std::clamp(s0 + acc * dt, 0.0, v0_);
    if (hold_at_bar && x1 > len) {
      x1 = len;
      s1 = 0.0;
    }
    if (hold_at_stop && x1 > cfg_.bus_stop) {
      x1 = cfg_.bus_stop;
      s1 = 0.0;
    }
    if (x1 > limit) {
      x1 = limit;
      s1 = std::min(s1, limit_speed);
    }
    lead_old_pos = x0;
    lead_old_speed = s0;
    v.position = x1;
    v.speed = s1;
    if (sig) {
      ++v.epoch_ticks;
      v.epoch_distance += x1 - x0;
    }
  }
}

bool World::movement_allows_cross(const Vehicle&, const Lane& lane) const {
  const auto& sig = signals_[lane.spec.intersection];
  const Phase phase = phase_of(lane.spec.approach, lane.spec.turn);
  return sig.active_phase() == phase && sig.indication() != Indication::AllRed;
}

void World::add_row(std::uint64_t id, std::string kind, std::string section, double value, double t) {
  if (t < warmup_) return;
  probes_.push_back({id, std::move(kind), std::move(section), value, t});
}

void World::flush_accrual(Vehicle& v, int intersection) {
  if (v.epoch_ticks <= 0) return;
  const double time = static_cast<double>(v.epoch_ticks) * cfg_.sim_step;
  accrual_[intersection].vehicle_delay.add(std::max(0.0, time - v.epoch_distance / v0_));
  accrual_[intersection].vehicle_count += 1;
  v.epoch_ticks = 0;
  v.epoch_distance = 0.0;
}

void World::on_cross(Vehicle& v, const Lane& from) {
  const int i = from.spec.intersection;
  if (!movement_allows_cross(v, from)) ++red_violations_;
  flush_accrual(v, i);
  const double t = now();
  if (v.kind == VehicleKind::Car) {
    const double delay = measure_delay(t - v.approach_entry_time, from.spec.length, v0_);
    const int lane_id = approach_lane(i, from.spec.local);
    const std::string key = movement_key(lane_id);
    add_row(v.id, "veh_delay", key, delay, v.approach_entry_time);
    const bool through = from.spec.turn == Turn::Through;
    if (through && from.spec.approach == Approach::WB) add_row(v.id, "veh_delay", "WB_TH", delay, v.approach_entry_time);
    if (through && from.spec.approach == Approach::EB) {
      if (i == kIntersectionA) {
        v.corridor = true;
        v.corridor_entry_time = v.approach_entry_time;
        v.corridor_delay = delay;
      } else if (v.corridor) {
        add_row(v.id, "veh_delay", "EB_TH", v.corridor_delay + delay, v.corridor_entry_time);
      }
    }
    if (is_side_street(from.spec.approach)) {
      for (double c : checkins_[i]) {
        if (c <= t && t <= c + kSideWindow) {
          add_row(v.id, "side_delay", key, delay, v.approach_entry_time);
          break;
        }
      }
    }
  }
  v.approach_entry_time = t;
  v.committed_go = false;
}

void World::cross_stop_bars() {
  for (int id : update_order_) {
    Lane& lane = lanes_[id];
    auto& vs = lane.vehicles;
    const double len = lane.spec.length;
    while (!vs.empty() && vs.front().position > len) {
      Vehicle v = vs.front();
      vs.erase(vs.begin());
      if (lane.spec.intersection >= 0) on_cross(v, lane);
      v.position -= len;
      if (lane.spec.downstream < 0) {
        ++exited_;
        if (v.bus >= 0) buses_[v.bus].exited = true;
        continue;
      }
      v.lane = lane.spec.downstream;
      lanes_[lane.spec.downstream].vehicles.push_back(v);
    }
  }
}

void World::update_buses(double dt) {
  const double t = now();
  const std::array<int, 3> route_lanes = {approach_lane(kIntersectionA, kEbTh2), approach_lane(kIntersectionB, kEbTh2),
                                          lanes_[approach_lane(kIntersectionB, kEbTh2)].spec.downstream};
  for (int lane_id : route_lanes) {
    Lane& lane = lanes_[lane_id];
    for (auto& v : lane.vehicles) {
      if (v.bus < 0) continue;
      BusState& bus = buses_[v.bus];
      const double s = lane.spec.route_offset + v.position;
      const double advance = std::isfinite(bus.route_position) ? s - bus.route_position : 0.0;
      bus.route_position = s;
      bus.speed = v.speed;
      const double lost = bus.dwelling ? 0.0 : std::max(0.0, dt - advance / v0_);
      for (int i = 0; i < kIntersections; ++i)
        if (bus.in_zone(i)) bus.zone_delay[i] += lost;
      if (lane.spec.intersection >= 0) accrual_[lane.spec.intersection].bus_delay.add(lost);

      for (int i = 0; i < kIntersections; ++i) {
        const double bar = route_stop_bar(i);
        if (!bus.checkin_times[i] && bar - s <= cfg_.comm_range) {
          bus.checkin_times[i] = t;
          checkins_[i].push_back(t);
          bus_events_.push_back({t, v.bus, v.id, i, BusEventKind::Checkin});
        }
        if (bus.checkin_times[i] && !bus.checkout_times[i] && s - v.length > bar) {
          bus.checkout_times[i] = t;
          bus_events_.push_back({t, v.bus, v.id, i, BusEventKind::Checkout});
          const double t_in = bus.checkin_times[kIntersectionA].value_or(*bus.checkin_times[i]);
          add_row(v.id, "bus_delay", std::string(intersection_name(i)), bus.zone_delay[i], t_in);
          if (i == kIntersectionB && bus.checkin_times[kIntersectionA]) {
            const double a_in = *bus.checkin_times[kIntersectionA];
            if (bus.a_section_end) add_row(v.id, "bus_travel", "Inter A_EB", *bus.a_section_end - a_in, a_in);
            if (bus.b_section_start) add_row(v.id, "bus_travel", "Inter B_EB", t - *bus.b_section_start, a_in);
            add_row(v.id, "bus_travel", "Inter A&B_EB", t - a_in, a_in);
            add_row(v.id, "bus_dwell", "stop", bus.dwell_assigned, a_in);
          }
        }
      }
      const double stop_route = route_stop_bar(kIntersectionA) + cfg_.bus_stop;
      if (!bus.a_section_end && s >= stop_route - kStopApproachMargin) bus.a_section_end = t;
      if (!bus.b_section_start && s >= stop_route + kStopDepartMargin) bus.b_section_start = t;

      if (lane_id == approach_lane(kIntersectionB, kEbTh2) && !bus.stop_served && !bus.dwelling &&
          bus.dwell_assigned > 0.0 && cfg_.bus_stop - v.position <= 1.0 && v.speed < 0.5) {
        bus.dwelling = true;
        bus.dwell_remaining = bus.dwell_assigned;
      }
    }
  }
}

void World::record_probes() {
  const double t = now();
  for (int i = 0; i < kIntersections; ++i) {
    for (int local = 0; local < kLanesPerIntersection; ++local) {
      Lane& lane = lanes_[approach_lane(i, local)];
      for (const auto& v : lane.vehicles) {
        if (lane.spec.length - v.position <= cfg_.detector_zone) {
          lane.last_actuation_tick = tick_;
          break;
        }
      }
      if (t >= warmup_) lane.max_queue = std::max(lane.max_queue, queue_length(approach_lane(i, local)));
    }
  }
}

void World::check_consistency() const {
  if (spawned_ != in_network() + exited_ + buffered()) {
    std::ostringstream os;
    os << "conservation violated at t=" << now() << ": spawned=" << spawned_ << " in_network=" << in_network()
       << " exited=" << exited_ << " buffered=" << buffered();
    throw SimulationError(os.str());
  }
  for (int id = 0; id < lane_count(); ++id) {
    const auto& vs = lanes_[id].vehicles;
    for (std::size_t k = 0; k < vs.size(); ++k) {
      const Vehicle& v = vs[k];
      const bool bad_speed = v.speed < 0.0 || v.speed > v0_ + 1e-9 || !std::isfinite(v.position);
      const bool overlap = k > 0 && vs[k - 1].position - vs[k - 1].length - v.position < -1e-6;
      if (bad_speed || overlap) {
        std::ostringstream os;
        os << "inconsistent state at t=" << now() << " lane " << movement_key(id) << " (" << id << "):";
        for (const auto& w : vs) os << " [id=" << w.id << " x=" << w.position << " v=" << w.speed << "]";
        throw SimulationError(os.str());
      }
    }
  }
}

void World::advance(double dt) {
  MARLSIG_EXPECTS(std::abs(dt - cfg_.sim_step) < 1e-12);
  ++tick_;
  spawn();
  for (int i = 0; i < kIntersections; ++i) signals_[i].tick(now());
  countdown_dwell(dt);
  car_following(dt);
  cross_stop_bars();
  update_buses(dt);
  record_probes();
  check_consistency();
}

int World::queue_length(int lane_id) const {
  const Lane& lane = lanes_[lane_id];
  int n = static_cast<int>(lane.entry_buffer.size());
  for (const auto& v : lane.vehicles)
    if (v.speed < cfg_.queue_speed_threshold) ++n;
  return n;
}

int World::phase_queue(int intersection, Phase phase) const {
  int q = 0;
  for (int local = 0; local < kLanesPerIntersection; ++local)
    if (phase_of(kLocal[local].approach, kLocal[local].turn) == phase)
      q = std::max(q, queue_length(approach_lane(intersection, local)));
  return q;
}

int World::max_side_queue(int intersection) const {
  int q = 0;
  for (int local : {kNbTh, kNbLt, kSbTh, kSbLt}) q = std::max(q, queue_length(approach_lane(intersection, local)));
  return q;
}

DetectorSnapshot World::detectors(int intersection) const {
  DetectorSnapshot snap;
  snap.gap.fill(std::numeric_limits<double>::infinity());
  for (int local = 0; local < kLanesPerIntersection; ++local) {
    const Lane& lane = lanes_[approach_lane(intersection, local)];
    const int ph = signal::index_of(phase_of(lane.spec.approach, lane.spec.turn));
    const double gap = static_cast<double>(tick_ - lane.last_actuation_tick) * cfg_.sim_step;
    snap.gap[ph] = std::min(snap.gap[ph], gap);
    for (const auto& v : lane.vehicles) {
      if (lane.spec.length - v.position <= cfg_.detector_zone) {
        snap.call[ph] = true;
        break;
      }
    }
  }
  return snap;
}

std::uint64_t World::in_network() const {
  std::uint64_t n = 0;
  for (const auto& lane : lanes_) n += lane.vehicles.size();
  return n;
}

std::uint64_t World::buffered() const {
  std::uint64_t n = 0;
  for (const auto& lane : lanes_) n += lane.entry_buffer.size();
  return n;
}

std::vector<int> World::buses_on_approach(int intersection) const {
  std::vector<int> out;
  const Lane& lane = lanes_[approach_lane(intersection, kEbTh2)];
  for (const auto& v : lane.vehicles)
    if (v.bus >= 0) out.push_back(v.bus);
  return out;
}

void World::begin_epoch() {
  accrual_ = {};
  for (auto& lane : lanes_) {
    for (auto& v : lane.vehicles) {
      v.epoch_ticks = 0;
      v.epoch_distance = 0.0;
    }
    for (auto& v : lane.entry_buffer) {
      v.epoch_ticks = 0;
      v.epoch_distance = 0.0;
    }
  }
}

std::array<IntersectionAccrual, kIntersections> World::close_epoch() {
  for (int i = 0; i < kIntersections; ++i) {
    for (int local = 0; local < kLanesPerIntersection; ++local) {
      Lane& lane = lanes_[approach_lane(i, local)];
      for (auto& v : lane.vehicles) flush_accrual(v, i);
      for (auto& v : lane.entry_buffer) flush_accrual(v, i);
    }
  }
  std::array<IntersectionAccrual, kIntersections> out;
  for (int i = 0; i < kIntersections; ++i)
    out[i] = {accrual_[i].vehicle_delay.value(), accrual_[i].vehicle_count, accrual_[i].bus_delay.value()};
  accrual_ = {};
  return out;
}

void World::finalize() {
  if (finalized_) return;
  finalized_ = true;
  const double t = now();
  for (int i = 0; i < kIntersections; ++i)
    for (int local = 0; local < kLanesPerIntersection; ++local) {
      const int id = approach_lane(i, local);
      add_row(0, "queue_max", movement_key(id), lanes_[id].max_queue, std::max(warmup_, 0.0));
    }
  int unfinished = 0;
  for (int i = 0; i < kIntersections; ++i)
    for (int local = 0; local < kLanesPerIntersection; ++local) {
      const Lane& lane = lanes_[approach_lane(i, local)];
      for (const auto& v : lane.vehicles)
        if (v.kind == VehicleKind::Car && v.approach_entry_time >= warmup_) ++unfinished;
      for (const auto& v : lane.entry_buffer)
        if (v.kind == VehicleKind::Car && v.approach_entry_time >= warmup_) ++unfinished;
    }
  int unfinished_buses = 0;
  for (const auto& bus : buses_) {
    const auto a_in = bus.checkin_times[kIntersectionA];
    if (a_in && *a_in >= warmup_ && !bus.checkout_times[kIntersectionB]) ++unfinished_buses;
  }
  if (t >= warmup_) {
    probes_.push_back({0, "unfinished", "vehicles", static_cast<double>(unfinished), t});
    probes_.push_back({0, "unfinished", "buses", static_cast<double>(unfinished_buses), t});
  }
}

std::uint64_t World::insert_vehicle(int lane_id, double position, double speed, VehicleKind kind) {
  Vehicle v = make_vehicle(lane_id, kind, now());
  v.position = position;
  v.speed = speed;
  auto& vs = lanes_[lane_id].vehicles;
  auto it = std::find_if(vs.begin(), vs.end(), [&](const Vehicle& w) { return w.position < position; });
  const std::uint64_t id = v.id;
  vs.insert(it, v);
  ++spawned_;
  return id;
}

std::uint64_t World::insert_bus(int lane_id, double position, double speed, double dwell) {
  const std::uint64_t id = insert_vehicle(lane_id, position, speed, VehicleKind::Bus);
  auto& vs = lanes_[lane_id].vehicles;
  auto it = std::find_if(vs.begin(), vs.end(), [&](const Vehicle& w) { return w.id == id; });
  BusState bus;
  bus.vehicle_id = id;
  bus.spawn_time = now();
  bus.dwell_assigned = dwell;
  bus.stop_served = dwell <= 0.0;
  const double offset = lanes_[lane_id].spec.route_offset;
  bus.route_position = offset >= 0.0 ? offset + position : -std::numeric_limits<double>::infinity();
  bus.speed = speed;
  it->bus = static_cast<int>(buses_.size());
  buses_.push_back(bus);
  return id;
}

}  // namespace marlsig::sim
