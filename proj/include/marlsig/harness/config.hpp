#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "marlsig/env/encoding.hpp"
#include "marlsig/rl/dqn.hpp"
#include "marlsig/sim/config.hpp"
#include "marlsig/tsp/orchestrator.hpp"

namespace marlsig::harness {

enum class Baseline { Fixed, Actuated, Marl };

std::string_view to_string(Baseline b);
std::optional<Baseline> parse_baseline(std::string_view s);

struct RlConfig {
  std::vector<int> hidden = {128, 256, 256};
  rl::AdamParams adam;
  double gamma = 0.99;
  double epsilon_decay = 0.01;
  double epsilon_floor = 0.01;
  std::size_t buffer_capacity = 20000;
  int updates_per_episode = 64;
  int batch_size = 64;
  int target_sync_episodes = 50;
  rl::LossKind loss = rl::LossKind::Mse;
  double huber_delta = 1.0;
  // Multiplies rewards before they enter the replay buffer.
  double reward_scale = 1.0;
};

struct ModelPaths {
  std::string background_a;
  std::string background_b;
  std::string tsp_independent_a;
  std::string tsp_independent_b;
  std::string tsp_coordinated_a;
  std::string tsp_coordinated_b;
};

struct ExperimentConfig {
  sim::NetworkConfig scenario;
  int episodes = 200;
  double episode_length = 1800.0;      // background training, s
  double tsp_episode_length = 3600.0;  // TSP training, s
  double eval_length = 3600.0;         // evaluation runs, s
  double warmup = 900.0;               // evaluation warmup, s
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  env::RewardParams reward;
  env::EncodingOptions encoding;
  RlConfig rl;
  Baseline baseline = Baseline::Marl;
  tsp::TspMode tsp_mode = tsp::TspMode::Off;
  double saturation_flow = 1800.0;  // veh/h/lane, baseline timing plans
  ModelPaths models;
  int threads = 0;  // 0: hardware concurrency

  int replicates() const { return static_cast<int>(seeds.size()); }
};

// Throws sim::ConfigError naming the offending field.
void validate(const ExperimentConfig& cfg);

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);

// Reads and validates a config file. Parse errors carry line/column in the message.
ExperimentConfig load_experiment_config(const std::string& path);

std::vector<int> network_widths(int input_width, const RlConfig& rl);
std::string hash_string(std::uint64_t h);

}  // namespace marlsig::harness
