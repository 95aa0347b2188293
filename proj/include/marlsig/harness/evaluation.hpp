#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "marlsig/harness/config.hpp"
#include "marlsig/harness/episode.hpp"
#include "marlsig/harness/safety.hpp"
#include "marlsig/rl/model_io.hpp"

namespace marlsig::harness {

struct Policies {
  std::optional<std::array<rl::Mlp, sim::kIntersections>> background;
  std::optional<std::array<rl::Mlp, sim::kIntersections>> tsp;
  std::vector<std::string> warnings;  // e.g. model trained on a different scenario
};

// Loads the models a run needs: background for MARL, plus the TSP pair of `mode`. Paths come
// from cfg.models, falling back to <model_dir>/<role>.json. Throws sim::ConfigError when a
// required model is missing or has the wrong shape.
Policies load_policies(const ExperimentConfig& cfg, Baseline baseline, tsp::TspMode mode, const std::string& model_dir);

std::string model_role(bool tsp, tsp::TspMode mode, int intersection);

struct RunRecord {
  std::string run_id;
  std::string label;
  std::uint64_t seed = 0;
  EpisodeResult result;
  SafetyReport safety;
};

struct EvalOptions {
  int threads = 1;
  bool audit_safety = true;
  // Per-epoch trace of the first replicate (MARL runs only).
  std::ostream* trace = nullptr;
};

// One greedy run per seed, in parallel; records come back in seed order.
std::vector<RunRecord> evaluate(const ExperimentConfig& cfg, Baseline baseline, tsp::TspMode mode,
                                const Policies& policies, const EvalOptions& opt = {});

std::string run_label(Baseline baseline, tsp::TspMode mode);

struct TspComparison {
  int buses_off = 0;
  int buses_on = 0;
  double travel_off = 0.0;  // mean Inter A&B_EB travel time, s
  double travel_on = 0.0;
  double travel_change_pct = 0.0;
  double side_delay_off = 0.0;  // mean side-street delay inside the 300 s windows, s
  double side_delay_on = 0.0;
  int side_rows_off = 0;
  int side_rows_on = 0;
  double p_value = 1.0;  // one-sided rank-sum, Off travel times exceed On
};

TspComparison compare_tsp(const std::vector<RunRecord>& off, const std::vector<RunRecord>& on);

std::vector<double> values_of(const std::vector<RunRecord>& runs, const std::string& kind, const std::string& section);

int resolve_threads(int requested);

}  // namespace marlsig::harness
