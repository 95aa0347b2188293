#pragma once

#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "marlsig/rl/adam.hpp"
#include "marlsig/rl/mlp.hpp"
#include "marlsig/rl/replay.hpp"

namespace marlsig::rl {

// Joint transition over the agents trained together. A single-agent transition is the
// degenerate case with one entry per vector.
struct Transition {
  std::vector<Vector> obs;
  std::vector<int> actions;
  double reward = 0.0;
  std::vector<Vector> next_obs;
  std::vector<ActionMask> next_masks;
  bool terminal = false;
  double dt = 1.0;

  std::size_t agents() const { return obs.size(); }
};

bool valid(const Transition& t);

struct AgentNetPair {
  Mlp main;
  Mlp target;
  int episodes_since_sync = 0;
};

AgentNetPair make_agent(const std::vector<int>& widths, std::mt19937_64& rng);

// Exploration probability after `episode` completed episodes.
double epsilon(int episode, double decay = 0.01, double floor = 0.01);

// Highest valid entry, lowest index on ties. Invalid entries never win, whatever their value.
int masked_argmax(std::span<const double> q, const ActionMask& mask);
int masked_argmax(const Vector& q, const ActionMask& mask);

int epsilon_greedy(const Vector& q, const ActionMask& mask, double eps, std::mt19937_64& rng);

// Double-Q targets: action picked by each main net, valued by its target net, summed over agents.
std::vector<double> ddqn_targets(std::span<const Transition* const> batch, std::span<const AgentNetPair> agents,
                                 double gamma);

enum class LossKind { Mse, Huber };

struct VdnLoss {
  double loss = 0.0;
  std::vector<MlpGradients> grads;           // per agent
  std::vector<double> q_tot;                 // per sample
  std::vector<std::vector<double>> chosen_q;   // [agent][sample]
  std::vector<std::vector<double>> dloss_dq;   // [agent][sample]
};

VdnLoss vdn_loss(std::span<const Transition* const> batch, std::span<const AgentNetPair> agents,
                 std::span<const double> targets, LossKind kind = LossKind::Mse, double huber_delta = 1.0);

// Counts one completed episode; copies main into target every `frequency` episodes.
bool sync_target(AgentNetPair& pair, int frequency = 50);

struct TrainConfig {
  int updates = 64;
  int batch_size = 64;
  double gamma = 0.99;
  AdamParams adam;
  LossKind loss = LossKind::Mse;
  double huber_delta = 1.0;
  // Called with every mini-batch loss; lets callers audit the joint update.
  std::function<void(const VdnLoss&)> on_batch;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainStats {
  int updates = 0;
  double mean_loss = 0.0;
};

// K uniform mini-batches, one joint update each. Skipped when the buffer holds fewer than a
// batch. Throws TrainingDiverged on a non-finite loss or parameter.
TrainStats train_episode_end(const ReplayBuffer<Transition>& buffer, std::vector<AgentNetPair>& agents,
                             std::vector<AdamState>& optimizers, const TrainConfig& cfg, std::mt19937_64& rng);

}  // namespace marlsig::rl
