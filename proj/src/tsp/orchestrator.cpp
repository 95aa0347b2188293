#include "marlsig/tsp/orchestrator.hpp"

#include <fmt/format.h>

namespace marlsig::tsp {

using sim::BusEventKind;

std::string_view to_string(TspMode m) {
  switch (m) {
    case TspMode::Off: return "off";
    case TspMode::Independent: return "independent";
    case TspMode::Coordinated: return "coordinated";
  }
  return "off";
}

std::optional<TspMode> parse_mode(std::string_view s) {
  if (s == "off") return TspMode::Off;
  if (s == "independent") return TspMode::Independent;
  if (s == "coordinated") return TspMode::Coordinated;
  return std::nullopt;
}

std::string_view to_string(TspEventKind k) {
  switch (k) {
    case TspEventKind::Checkin: return "checkin";
    case TspEventKind::Checkout: return "checkout";
    case TspEventKind::Activate: return "activate";
    case TspEventKind::Deactivate: return "deactivate";
  }
  return "checkin";
}

namespace {

std::vector<sim::BusEvent> filter(const sim::World& world, std::size_t from, BusEventKind kind) {
  std::vector<sim::BusEvent> out;
  const auto& events = world.bus_events();
  for (std::size_t k = from; k < events.size(); ++k)
    if (events[k].kind == kind) out.push_back(events[k]);
  return out;
}

}  // namespace

std::vector<sim::BusEvent> detect_checkin(const sim::World& world, std::size_t from) {
  return filter(world, from, BusEventKind::Checkin);
}

std::vector<sim::BusEvent> detect_checkout(const sim::World& world, std::size_t from) {
  return filter(world, from, BusEventKind::Checkout);
}

Controller route_decision(TspMode mode, const ActivationState& activation, int intersection) {
  if (mode == TspMode::Off) return Controller::Background;
  return activation.tsp[intersection] ? Controller::Tsp : Controller::Background;
}

void TspOrchestrator::poll(const sim::World& world) {
  const auto& events = world.bus_events();
  for (; cursor_ < events.size(); ++cursor_) apply(events[cursor_]);
}

void TspOrchestrator::set_flag(int i, bool on, double t, std::uint64_t bus_id) {
  if (state_.tsp[i] == on) return;
  state_.tsp[i] = on;
  log_.push_back({t, bus_id, i, on ? TspEventKind::Activate : TspEventKind::Deactivate});
}

void TspOrchestrator::apply(const sim::BusEvent& e) {
  const bool in = e.kind == BusEventKind::Checkin;
  log_.push_back({e.t, e.vehicle_id, e.intersection, in ? TspEventKind::Checkin : TspEventKind::Checkout});
  state_.in_zone[e.intersection] += in ? 1 : -1;

  if (mode_ == TspMode::Independent) {
    set_flag(e.intersection, state_.in_zone[e.intersection] > 0, e.t, e.vehicle_id);
  } else if (mode_ == TspMode::Coordinated) {
    if (in && e.intersection == sim::kIntersectionA) state_.corridor_buses.insert(e.vehicle_id);
    if (!in && e.intersection == sim::kIntersectionB) state_.corridor_buses.erase(e.vehicle_id);
    const bool on = !state_.corridor_buses.empty();
    for (int i = 0; i < sim::kIntersections; ++i) set_flag(i, on, e.t, e.vehicle_id);
  }
}

void write_event_log(std::ostream& os, const std::vector<TspEvent>& log) {
  os << "t,bus_id,intersection,event\n";
  for (const auto& e : log)
    os << fmt::format("{:.1f},{},{},{}\n", e.t, e.bus_id, sim::intersection_name(e.intersection), to_string(e.kind));
}

}  // namespace marlsig::tsp
