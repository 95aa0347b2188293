#pragma once

#include <array>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "marlsig/harness/config.hpp"
#include "marlsig/harness/episode.hpp"
#include "marlsig/rl/dqn.hpp"

namespace marlsig::harness {

struct TrainOptions {
  std::function<void(const std::string& line)> progress;
  std::function<void(const rl::VdnLoss&)> on_batch;
  // Per-epoch trace of the final episode.
  std::ostream* trace = nullptr;
  std::function<void(const sim::World&)> on_tick;
  // Called after every episode with the episode's result.
  std::function<void(int episode, const EpisodeResult&)> on_episode;
};

struct BackgroundCurveRow {
  int episode = 0;
  double epsilon = 0.0;
  double mean_global_reward = 0.0;
  double mean_loss = 0.0;
  int transitions = 0;
};

struct BackgroundTraining {
  std::vector<BackgroundCurveRow> curve;
  std::array<rl::AgentNetPair, sim::kIntersections> agents;
};

BackgroundTraining train_background(const ExperimentConfig& cfg, const TrainOptions& opt = {});

struct TspCurveRow {
  int episode = 0;
  double epsilon = 0.0;
  std::array<double, sim::kIntersections> mean_bus_delay{};
  std::array<int, sim::kIntersections> buses{};
  double mean_loss = 0.0;
  int transitions = 0;
};

struct TspTraining {
  std::vector<TspCurveRow> curve;
  std::array<rl::AgentNetPair, sim::kIntersections> agents;
};

// Trains the TSP agents on top of frozen background policies. Mode must be Independent or Coordinated.
TspTraining train_tsp(const ExperimentConfig& cfg, tsp::TspMode mode,
                      const std::array<rl::Mlp, sim::kIntersections>& background, const TrainOptions& opt = {});

rl::TrainConfig train_config(const RlConfig& rl);

}  // namespace marlsig::harness
