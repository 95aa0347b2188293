#include "marlsig/sim/config.hpp"

#include <cmath>
#include <map>

namespace marlsig::sim {

namespace {

using nlohmann::json;

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& prefix = "") {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(prefix + key, std::string("wrong type (") + e.what() + ")");
  }
}

const std::map<std::string, std::vector<std::string>>& supported_lanes() {
  static const std::map<std::string, std::vector<std::string>> lanes = {
      {"EB", {"TH1", "TH2", "LT"}},
      {"WB", {"TH1", "TH2", "LT"}},
      {"NB", {"TH", "LT"}},
      {"SB", {"TH", "LT"}}};
  return lanes;
}

const std::vector<std::string>& supported_route() {
  static const std::vector<std::string> route = {"A_EB", "AB_EB", "B_EB_DEP"};
  return route;
}

void require(bool ok, const std::string& field, const std::string& msg) {
  if (!ok) throw ConfigError(field, msg);
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& prefix = "") {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError(prefix + it.key(), "unknown field");
  }
}

}  // namespace

void validate(const DwellCdf& cdf) {
  const auto& bp = cdf.breakpoints;
  require(!bp.empty(), "dwell_cdf", "needs at least one breakpoint");
  require(bp.front().first > 0.0, "dwell_cdf", "first cumulative probability must be > 0");
  require(std::abs(bp.back().first - 1.0) < 1e-12, "dwell_cdf", "last cumulative probability must be 1.0");
  for (std::size_t i = 0; i < bp.size(); ++i) {
    require(bp[i].second >= 0.0, "dwell_cdf", "dwell seconds must be >= 0");
    if (i == 0) continue;
    require(bp[i].first > bp[i - 1].first, "dwell_cdf", "probabilities must be strictly increasing");
    require(bp[i].second >= bp[i - 1].second, "dwell_cdf", "dwell seconds must be nondecreasing");
  }
}

int NetworkConfig::ticks_per_second() const { return static_cast<int>(std::lround(1.0 / sim_step)); }

std::int64_t NetworkConfig::to_ticks(double seconds) const {
  return static_cast<std::int64_t>(std::llround(seconds / sim_step));
}

void validate(const NetworkConfig& cfg) {
  require(cfg.intersection_spacing > 0.0, "intersection_spacing", "must be > 0");
  require(cfg.sim_step > 0.0, "sim_step", "must be > 0");
  const double per_second = 1.0 / cfg.sim_step;
  require(std::abs(per_second - std::round(per_second)) < 1e-9, "sim_step", "must divide 1.0 s evenly");
  require(cfg.desired_speed > 0.0, "desired_speed", "must be > 0");
  require(cfg.comm_range > 0.0, "comm_range", "must be > 0");
  require(cfg.comm_range <= cfg.intersection_spacing, "comm_range", "must not exceed intersection_spacing");
  require(cfg.entry_link_length > cfg.comm_range, "entry_link_length", "must exceed comm_range");
  require(cfg.departure_length > 0.0, "departure_length", "must be > 0");
  const auto& d = cfg.demand;
  require(d.main_through >= 0 && d.main_left >= 0 && d.cross_through >= 0 && d.cross_left >= 0,
          "demand", "all demands must be >= 0");
  require(d.right_turn == 0.0, "demand.right_turn", "right turns are not modeled; must be 0");
  require(cfg.bus_route == supported_route(), "bus_route", "only the EB corridor route A_EB, AB_EB, B_EB_DEP is supported");
  require(cfg.bus_stop > 0.0 && cfg.bus_stop + cfg.idm.bus_length < cfg.intersection_spacing - cfg.comm_range,
          "bus_stop", "must lie between A's stop bar and B's communication zone");
  require(cfg.bus_headway_mean > 0.0, "bus_headway_mean", "must be > 0");
  require(cfg.bus_headway_jitter >= 0.0 && cfg.bus_headway_jitter < cfg.bus_headway_mean, "bus_headway_jitter",
          "must be in [0, bus_headway_mean)");
  require(cfg.bus_first_arrival >= 0.0, "bus_first_arrival", "must be >= 0");
  validate(cfg.dwell_cdf);
  const auto& idm = cfg.idm;
  require(idm.max_accel > 0 && idm.comfortable_decel > 0 && idm.min_gap > 0 && idm.headway_time > 0 &&
              idm.vehicle_length > 0 && idm.bus_length > 0,
          "idm", "all car-following parameters must be > 0");
  require(cfg.queue_speed_threshold > 0.0, "queue_speed_threshold", "must be > 0");
  require(cfg.detector_zone > 0.0, "detector_zone", "must be > 0");
  const auto& t = cfg.timing;
  require(t.min_green_through <= t.max_green_through, "timing.min_green_through", "must be <= max_green_through");
  require(t.min_green_left <= t.max_green_left, "timing.min_green_left", "must be <= max_green_left");
  require(t.min_green_through > 0 && t.min_green_left > 0, "timing", "min greens must be > 0");
  require(t.yellow > 0.0, "timing.yellow", "must be > 0");
  require(t.all_red > 0.0, "timing.all_red", "must be > 0");
}

NetworkConfig network_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("scenario", "must be a JSON object");
  reject_unknown(j, {"intersection_spacing", "entry_link_length", "departure_length", "desired_speed", "sim_step",
                     "comm_range", "bus_route", "bus_stop", "bus_headway_mean", "bus_headway_jitter",
                     "bus_first_arrival", "buses_enabled", "seed", "queue_speed_threshold", "detector_zone",
                     "lanes_per_approach", "left_turn_bays", "demand", "dwell_cdf", "idm", "timing"});
  NetworkConfig cfg;
  read(j, "intersection_spacing", cfg.intersection_spacing);
  read(j, "entry_link_length", cfg.entry_link_length);
  read(j, "departure_length", cfg.departure_length);
  read(j, "desired_speed", cfg.desired_speed);
  read(j, "sim_step", cfg.sim_step);
  read(j, "comm_range", cfg.comm_range);
  read(j, "bus_route", cfg.bus_route);
  read(j, "bus_stop", cfg.bus_stop);
  read(j, "bus_headway_mean", cfg.bus_headway_mean);
  read(j, "bus_headway_jitter", cfg.bus_headway_jitter);
  read(j, "bus_first_arrival", cfg.bus_first_arrival);
  read(j, "buses_enabled", cfg.buses_enabled);
  read(j, "seed", cfg.seed);
  read(j, "queue_speed_threshold", cfg.queue_speed_threshold);
  read(j, "detector_zone", cfg.detector_zone);

  if (auto it = j.find("lanes_per_approach"); it != j.end()) {
    std::map<std::string, std::vector<std::string>> lanes;
    read(j, "lanes_per_approach", lanes);
    require(lanes == supported_lanes(), "lanes_per_approach",
            "only EB/WB {TH1,TH2,LT} and NB/SB {TH,LT} is supported");
  }
  if (auto it = j.find("left_turn_bays"); it != j.end()) {
    std::map<std::string, bool> bays;
    read(j, "left_turn_bays", bays);
    for (const char* a : {"EB", "WB", "NB", "SB"}) {
      auto b = bays.find(a);
      require(b != bays.end() && b->second, std::string("left_turn_bays.") + a,
              "every approach must have a left-turn bay");
    }
  }
  if (auto it = j.find("demand"); it != j.end()) {
    if (!it->is_object()) throw ConfigError("demand", "must be an object");
    reject_unknown(*it, {"main_through", "main_left", "cross_through", "cross_left", "right_turn"}, "demand.");
    read(*it, "main_through", cfg.demand.main_through, "demand.");
    read(*it, "main_left", cfg.demand.main_left, "demand.");
    read(*it, "cross_through", cfg.demand.cross_through, "demand.");
    read(*it, "cross_left", cfg.demand.cross_left, "demand.");
    read(*it, "right_turn", cfg.demand.right_turn, "demand.");
  }
  if (auto it = j.find("dwell_cdf"); it != j.end()) {
    std::vector<std::pair<double, double>> bp;
    read(j, "dwell_cdf", bp);
    cfg.dwell_cdf.breakpoints = std::move(bp);
  }
  if (auto it = j.find("idm"); it != j.end()) {
    if (!it->is_object()) throw ConfigError("idm", "must be an object");
    reject_unknown(*it, {"max_accel", "comfortable_decel", "min_gap", "headway_time", "vehicle_length", "bus_length"},
                   "idm.");
    read(*it, "max_accel", cfg.idm.max_accel, "idm.");
    read(*it, "comfortable_decel", cfg.idm.comfortable_decel, "idm.");
    read(*it, "min_gap", cfg.idm.min_gap, "idm.");
    read(*it, "headway_time", cfg.idm.headway_time, "idm.");
    read(*it, "vehicle_length", cfg.idm.vehicle_length, "idm.");
    read(*it, "bus_length", cfg.idm.bus_length, "idm.");
  }
  if (auto it = j.find("timing"); it != j.end()) {
    if (!it->is_object()) throw ConfigError("timing", "must be an object");
    reject_unknown(*it, {"min_green_through", "min_green_left", "max_green_through", "max_green_left", "yellow",
                         "all_red"},
                   "timing.");
    read(*it, "min_green_through", cfg.timing.min_green_through, "timing.");
    read(*it, "min_green_left", cfg.timing.min_green_left, "timing.");
    read(*it, "max_green_through", cfg.timing.max_green_through, "timing.");
    read(*it, "max_green_left", cfg.timing.max_green_left, "timing.");
    read(*it, "yellow", cfg.timing.yellow, "timing.");
    read(*it, "all_red", cfg.timing.all_red, "timing.");
  }
  validate(cfg);
  return cfg;
}

nlohmann::json to_json(const NetworkConfig& cfg) {
  json j;
  j["intersection_spacing"] = cfg.intersection_spacing;
  j["entry_link_length"] = cfg.entry_link_length;
  j["departure_length"] = cfg.departure_length;
  j["desired_speed"] = cfg.desired_speed;
  j["sim_step"] = cfg.sim_step;
  j["comm_range"] = cfg.comm_range;
  j["lanes_per_approach"] = supported_lanes();
  j["left_turn_bays"] = {{"EB", true}, {"WB", true}, {"NB", true}, {"SB", true}};
  j["demand"] = {{"main_through", cfg.demand.main_through},
                 {"main_left", cfg.demand.main_left},
                 {"cross_through", cfg.demand.cross_through},
                 {"cross_left", cfg.demand.cross_left},
                 {"right_turn", cfg.demand.right_turn}};
  j["bus_route"] = cfg.bus_route;
  j["bus_stop"] = cfg.bus_stop;
  j["bus_headway_mean"] = cfg.bus_headway_mean;
  j["bus_headway_jitter"] = cfg.bus_headway_jitter;
  j["bus_first_arrival"] = cfg.bus_first_arrival;
  j["buses_enabled"] = cfg.buses_enabled;
  j["dwell_cdf"] = cfg.dwell_cdf.breakpoints;
  j["seed"] = cfg.seed;
  j["idm"] = {{"max_accel", cfg.idm.max_accel},
              {"comfortable_decel", cfg.idm.comfortable_decel},
              {"min_gap", cfg.idm.min_gap},
              {"headway_time", cfg.idm.headway_time},
              {"vehicle_length", cfg.idm.vehicle_length},
              {"bus_length", cfg.idm.bus_length}};
  j["queue_speed_threshold"] = cfg.queue_speed_threshold;
  j["detector_zone"] = cfg.detector_zone;
  j["timing"] = {{"min_green_through", cfg.timing.min_green_through},
                 {"min_green_left", cfg.timing.min_green_left},
                 {"max_green_through", cfg.timing.max_green_through},
                 {"max_green_left", cfg.timing.max_green_left},
                 {"yellow", cfg.timing.yellow},
                 {"all_red", cfg.timing.all_red}};
  return j;
}

std::uint64_t config_hash(const NetworkConfig& cfg) {
  json j = to_json(cfg);
  j.erase("seed");  // models transfer across seeds
  const std::string text = j.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace marlsig::sim
