#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <set>
#include <string_view>
#include <vector>

#include "marlsig/sim/world.hpp"

namespace marlsig::tsp {

enum class TspMode { Off, Independent, Coordinated };

std::string_view to_string(TspMode m);
std::optional<TspMode> parse_mode(std::string_view s);

enum class Controller { Background, Tsp };

enum class TspEventKind { Checkin, Checkout, Activate, Deactivate };

std::string_view to_string(TspEventKind k);

struct TspEvent {
  double t = 0.0;
  std::uint64_t bus_id = 0;
  int intersection = 0;
  TspEventKind kind = TspEventKind::Checkin;
};

struct ActivationState {
  std::array<bool, sim::kIntersections> tsp{};       // per-intersection control flag
  std::array<int, sim::kIntersections> in_zone{};    // buses between check-in and check-out
  std::set<std::uint64_t> corridor_buses;            // checked in at A, not yet out of B
};

// Check-in / check-out events recorded by the world since `from` (an index into bus_events()).
std::vector<sim::BusEvent> detect_checkin(const sim::World& world, std::size_t from = 0);
std::vector<sim::BusEvent> detect_checkout(const sim::World& world, std::size_t from = 0);

Controller route_decision(TspMode mode, const ActivationState& activation, int intersection);

class TspOrchestrator {
 public:
  explicit TspOrchestrator(TspMode mode) : mode_(mode) {}

  TspMode mode() const { return mode_; }
  // Consumes bus events the world produced since the last call and updates the flags.
  void poll(const sim::World& world);
  Controller route(int intersection) const { return route_decision(mode_, state_, intersection); }
  bool any_active() const { return state_.tsp[0] || state_.tsp[1]; }
  const ActivationState& activation() const { return state_; }
  const std::vector<TspEvent>& log() const { return log_; }

 private:
  void apply(const sim::BusEvent& e);
  void set_flag(int intersection, bool on, double t, std::uint64_t bus_id);

  TspMode mode_;
  ActivationState state_;
  std::size_t cursor_ = 0;
  std::vector<TspEvent> log_;
};

void write_event_log(std::ostream& os, const std::vector<TspEvent>& log);

}  // namespace marlsig::tsp
