#include "marlsig/harness/safety.hpp"

#include <fmt/format.h>

namespace marlsig::harness {

using signal::Indication;

void SafetyAudit::fail(const sim::World& world, int i, const std::string& what) {
  ++report_.violations;
  if (report_.messages.size() < 20)
    report_.messages.push_back(fmt::format("t={:.1f} {}: {}", world.now(), sim::intersection_name(i), what));
}

void SafetyAudit::check_green_length(const sim::World& world, int i, const Track& tr, bool finished) {
  const auto& cfg = world.config();
  const auto& timing = cfg.timing;
  const double green = static_cast<double>(tr.run_ticks) * cfg.sim_step;
  if (!finished && tr.run_ticks < cfg.to_ticks(timing.min_green(tr.phase)))
    fail(world, i, fmt::format("{} green lasted {:.1f} s, below min green", signal::to_string(tr.phase), green));
  if (green > timing.max_green(tr.phase) + tolerance_ + 1e-9)
    fail(world, i, fmt::format("{} green lasted {:.1f} s, above max green", signal::to_string(tr.phase), green));
}

void SafetyAudit::on_tick(const sim::World& world) {
  ++report_.ticks_checked;
  const auto& cfg = world.config();
  for (int i = 0; i < sim::kIntersections; ++i) {
    const auto& s = world.signal(i);
    int greens = 0;
    for (auto p : signal::kAllPhases) greens += s.is_green(p) ? 1 : 0;
    if (greens != (s.indication() == Indication::Green ? 1 : 0)) fail(world, i, "green count inconsistent");

    Track& tr = tracks_[i];
    if (!tr.started) {
      tr = {true, s.active_phase(), s.indication(), 0};
    }
    if (s.active_phase() == tr.phase && s.indication() == tr.indication) {
      ++tr.run_ticks;
      continue;
    }
    // Something changed during this tick; the new state has run for one tick.
    const Indication from = tr.indication;
    const Indication to = s.indication();
    if (from == Indication::Green && to == Indication::Yellow && s.active_phase() == tr.phase) {
      check_green_length(world, i, tr, false);
    } else if (from == Indication::Yellow && to == Indication::AllRed && s.active_phase() == tr.phase) {
      if (tr.run_ticks != cfg.to_ticks(cfg.timing.yellow))
        fail(world, i, fmt::format("yellow lasted {:.1f} s", static_cast<double>(tr.run_ticks) * cfg.sim_step));
    } else if (from == Indication::AllRed && to == Indication::Green && s.active_phase() != tr.phase) {
      if (tr.run_ticks != cfg.to_ticks(cfg.timing.all_red))
        fail(world, i, fmt::format("all-red lasted {:.1f} s", static_cast<double>(tr.run_ticks) * cfg.sim_step));
      ++report_.phase_changes;
    } else {
      fail(world, i, "illegal signal transition");
    }
    tr = {true, s.active_phase(), to, 1};
  }
}

void SafetyAudit::finish(const sim::World& world) {
  for (int i = 0; i < sim::kIntersections; ++i) {
    const Track& tr = tracks_[i];
    if (tr.started && tr.indication == Indication::Green) check_green_length(world, i, tr, true);
  }
}

}  // namespace marlsig::harness
