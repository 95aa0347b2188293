#pragma once

#include <array>
#include <functional>
#include <ostream>
#include <random>
#include <vector>

#include "marlsig/env/encoding.hpp"
#include "marlsig/harness/config.hpp"
#include "marlsig/rl/dqn.hpp"
#include "marlsig/signal/baselines.hpp"
#include "marlsig/sim/world.hpp"
#include "marlsig/tsp/orchestrator.hpp"

namespace marlsig::harness {

// Which agents learn during the episode; all others act greedily.
enum class Learner { None, Background, TspIndependent, TspCoordinated };

struct EpisodeSpec {
  sim::NetworkConfig scenario;  // seed included
  double length = 3600.0;
  double warmup = 0.0;
  Baseline baseline = Baseline::Marl;
  tsp::TspMode tsp_mode = tsp::TspMode::Off;
  double saturation_flow = 1800.0;
  env::RewardParams reward;
  env::EncodingOptions encoding;

  // Policies per intersection; required for the MARL baseline and active TSP modes.
  std::array<const rl::Mlp*, sim::kIntersections> background{};
  std::array<const rl::Mlp*, sim::kIntersections> tsp{};

  Learner learner = Learner::None;
  double epsilon = 0.0;
  std::mt19937_64* explore_rng = nullptr;
  double reward_scale = 1.0;
  rl::ReplayBuffer<rl::Transition>* joint_buffer = nullptr;  // Background, TspCoordinated
  std::array<rl::ReplayBuffer<rl::Transition>*, sim::kIntersections> agent_buffers{};  // TspIndependent

  std::ostream* trace = nullptr;
  // Sees the state that governs the coming step, after that step's decisions.
  std::function<void(const sim::World&)> on_tick;
};

struct EpisodeResult {
  std::vector<sim::ProbeRow> probes;
  std::vector<tsp::TspEvent> tsp_log;
  int epochs = 0;
  double mean_global_reward = 0.0;  // unscaled, averaged over epochs
  std::array<double, sim::kIntersections> mean_bus_delay{};
  std::array<int, sim::kIntersections> buses_measured{};
  int transitions_stored = 0;
  std::int64_t decisions = 0;         // actions requested from a policy
  std::int64_t invalid_decisions = 0;  // requested actions outside valid_actions (must stay 0)
  std::uint64_t red_violations = 0;
};

// Runs one episode. MARL runs decide at shared epoch boundaries; fixed-time and actuated
// baselines decide every simulation step.
EpisodeResult run_episode(const EpisodeSpec& spec);

// Valid actions, except that during clearance only the phase being cleared to is listed.
rl::ActionMask effective_mask(const signal::SignalControllerState& state);

}  // namespace marlsig::harness
