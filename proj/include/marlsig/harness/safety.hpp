#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "marlsig/sim/world.hpp"

namespace marlsig::harness {

struct SafetyReport {
  std::int64_t ticks_checked = 0;
  std::int64_t phase_changes = 0;
  std::int64_t violations = 0;
  std::vector<std::string> messages;  // first few violations

  bool ok() const { return violations == 0; }
};

// Tick-by-tick signal audit kept independent of the controller's own bookkeeping:
// exactly one active phase, changes only through full yellow and all-red, min green
// respected, max green exceeded by at most `tolerance` seconds.
class SafetyAudit {
 public:
  explicit SafetyAudit(double tolerance = 1.0) : tolerance_(tolerance) {}

  void on_tick(const sim::World& world);
  void finish(const sim::World& world);
  const SafetyReport& report() const { return report_; }

 private:
  struct Track {
    bool started = false;
    signal::Phase phase = signal::Phase::EWThrough;
    signal::Indication indication = signal::Indication::Green;
    std::int64_t run_ticks = 0;
  };

  void fail(const sim::World& world, int intersection, const std::string& what);
  void check_green_length(const sim::World& world, int intersection, const Track& tr, bool finished);

  double tolerance_;
  std::array<Track, sim::kIntersections> tracks_{};
  SafetyReport report_;
};

}  // namespace marlsig::harness
