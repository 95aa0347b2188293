#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "marlsig/signal/phase.hpp"

namespace marlsig::sim {

inline constexpr double kFeetPerSecondPerMph = 5280.0 / 3600.0;

// Raised for any malformed or unsupported scenario. `field` names the offending JSON path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Piecewise-linear inverse CDF over (cumulative probability, dwell seconds) breakpoints.
struct DwellCdf {
  std::vector<std::pair<double, double>> breakpoints;

  static DwellCdf default_cdf() { return {{{0.15, 0.0}, {0.5, 15.0}, {0.85, 30.0}, {1.0, 60.0}}}; }
};

// Throws ConfigError when the breakpoints violate the CDF invariants.
void validate(const DwellCdf& cdf);

struct IdmParams {
  double max_accel = 5.0;          // ft/s^2
  double comfortable_decel = 6.5;  // ft/s^2
  double min_gap = 8.0;            // ft
  double headway_time = 1.2;       // s
  double vehicle_length = 15.0;    // ft
  double bus_length = 40.0;        // ft
};

// Hourly volumes applied at both intersections.
struct Demand {
  double main_through = 1440.0;
  double main_left = 171.0;
  double cross_through = 270.0;
  double cross_left = 257.0;
  double right_turn = 0.0;
};

struct NetworkConfig {
  double intersection_spacing = 1600.0;  // ft, stop bar to stop bar
  double entry_link_length = 1000.0;     // ft, external approaches
  double departure_length = 600.0;       // ft, then exit
  double desired_speed = 40.0;           // mph
  double sim_step = 0.1;                 // s
  double comm_range = 800.0;             // ft
  Demand demand;
  std::vector<std::string> bus_route = {"A_EB", "AB_EB", "B_EB_DEP"};
  double bus_stop = 400.0;  // ft downstream of A's stop bar
  double bus_headway_mean = 900.0;
  double bus_headway_jitter = 120.0;
  double bus_first_arrival = 150.0;
  bool buses_enabled = true;
  DwellCdf dwell_cdf = DwellCdf::default_cdf();
  std::uint64_t seed = 1;
  IdmParams idm;
  double queue_speed_threshold = 5.0;  // ft/s
  double detector_zone = 150.0;        // ft upstream of the stop bar
  signal::TimingParams timing;

  double desired_speed_fps() const { return desired_speed * kFeetPerSecondPerMph; }
  int ticks_per_second() const;
  std::int64_t to_ticks(double seconds) const;
};

// Checks every invariant; throws ConfigError naming the field.
void validate(const NetworkConfig& cfg);

NetworkConfig network_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const NetworkConfig& cfg);

// Stable 64-bit FNV-1a hash of the canonical JSON form.
std::uint64_t config_hash(const NetworkConfig& cfg);

}  // namespace marlsig::sim
