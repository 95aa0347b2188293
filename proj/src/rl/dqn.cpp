#include "marlsig/rl/dqn.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <string>

#include "marlsig/contract.hpp"

namespace marlsig::rl {

namespace {

Matrix stack(std::span<const Transition* const> batch, std::size_t agent, bool next) {
  const auto& first = next ? batch.front()->next_obs[agent] : batch.front()->obs[agent];
  Matrix m(first.size(), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t j = 0; j < batch.size(); ++j)
    m.col(static_cast<Eigen::Index>(j)) = next ? batch[j]->next_obs[agent] : batch[j]->obs[agent];
  return m;
}

}  // namespace

bool valid(const Transition& t) {
  const auto n = t.obs.size();
  if (n == 0 || t.actions.size() != n || t.next_obs.size() != n || t.next_masks.size() != n) return false;
  for (std::size_t i = 0; i < n; ++i) {
    if (t.actions[i] < 0 || t.actions[i] >= kNumActions) return false;
    if (!t.terminal && std::none_of(t.next_masks[i].begin(), t.next_masks[i].end(), [](bool b) { return b; }))
      return false;
  }
  return std::isfinite(t.reward) && t.dt > 0.0;
}

AgentNetPair make_agent(const std::vector<int>& widths, std::mt19937_64& rng) {
  MARLSIG_EXPECTS(widths.back() == kNumActions);
  AgentNetPair pair;
  pair.main = Mlp::he_initialized(widths, rng);
  pair.target = pair.main;
  return pair;
}

double epsilon(int episode, double decay, double floor) {
  return std::max(floor, std::exp(-decay * static_cast<double>(episode)));
}

int masked_argmax(std::span<const double> q, const ActionMask& mask) {
  MARLSIG_EXPECTS(q.size() == mask.size());
  int best = -1;
  for (int a = 0; a < kNumActions; ++a) {
    if (!mask[a]) continue;
    if (best < 0 || q[a] > q[best]) best = a;
  }
  MARLSIG_EXPECTS(best >= 0);
  return best;
}

int masked_argmax(const Vector& q, const ActionMask& mask) {
  MARLSIG_EXPECTS(q.size() == kNumActions);
  return masked_argmax(std::span<const double>(q.data(), kNumActions), mask);
}

int epsilon_greedy(const Vector& q, const ActionMask& mask, double eps, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (u(rng) < eps) {
    std::vector<int> choices;
    for (int a = 0; a < kNumActions; ++a)
      if (mask[a]) choices.push_back(a);
    MARLSIG_EXPECTS(!choices.empty());
    std::uniform_int_distribution<std::size_t> pick(0, choices.size() - 1);
    return choices[pick(rng)];
  }
  return masked_argmax(q, mask);
}

std::vector<double> ddqn_targets(std::span<const Transition* const> batch, std::span<const AgentNetPair> agents,
                                 double gamma) {
  std::vector<double> y(batch.size());
  for (std::size_t j = 0; j < batch.size(); ++j) y[j] = batch[j]->reward;
  if (batch.empty()) return y;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const Matrix next = stack(batch, i, true);
    const Matrix q_main = agents[i].main.forward_batch(next);
    const Matrix q_target = agents[i].target.forward_batch(next);
    for (std::size_t j = 0; j < batch.size(); ++j) {
      if (batch[j]->terminal) continue;
      const auto col = static_cast<Eigen::Index>(j);
      const Vector qm = q_main.col(col);
      const int a = masked_argmax(qm, batch[j]->next_masks[i]);
      y[j] += gamma * q_target(a, col);
    }
  }
  return y;
}

VdnLoss vdn_loss(std::span<const Transition* const> batch, std::span<const AgentNetPair> agents,
                 std::span<const double> targets, LossKind kind, double huber_delta) {
  MARLSIG_EXPECTS(targets.size() == batch.size());
  const std::size_t n = batch.size();
  const std::size_t m = agents.size();
  VdnLoss out;
  out.q_tot.assign(n, 0.0);
  out.chosen_q.assign(m, std::vector<double>(n));
  out.dloss_dq.assign(m, std::vector<double>(n));
  if (n == 0) {
    for (const auto& a : agents) out.grads.push_back(a.main.zero_gradients());
    return out;
  }

  std::vector<ForwardCache> caches(m);
  for (std::size_t i = 0; i < m; ++i) {
    MARLSIG_EXPECTS(batch.front()->agents() == m);
    const Matrix q = agents[i].main.forward_batch(stack(batch, i, false), &caches[i]);
    for (std::size_t j = 0; j < n; ++j) {
      out.chosen_q[i][j] = q(batch[j]->actions[i], static_cast<Eigen::Index>(j));
      out.q_tot[j] += out.chosen_q[i][j];
    }
  }

  std::vector<double> dq(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double d = out.q_tot[j] - targets[j];
    if (kind == LossKind::Mse) {
      out.loss += d * d;
      dq[j] = 2.0 * d / static_cast<double>(n);
    } else if (std::abs(d) <= huber_delta) {
      out.loss += 0.5 * d * d;
      dq[j] = d / static_cast<double>(n);
    } else {
      out.loss += huber_delta * (std::abs(d) - 0.5 * huber_delta);
      dq[j] = huber_delta * (d > 0 ? 1.0 : -1.0) / static_cast<double>(n);
    }
  }
  out.loss /= static_cast<double>(n);
#ifndef NDEBUG
  for (std::size_t j = 0; j < n; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) sum += out.chosen_q[i][j];
    assert(sum == out.q_tot[j]);
  }
#endif

  for (std::size_t i = 0; i < m; ++i) {
    Matrix grad_out = Matrix::Zero(kNumActions, static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
      grad_out(batch[j]->actions[i], static_cast<Eigen::Index>(j)) = dq[j];
      out.dloss_dq[i][j] = dq[j];
    }
    out.grads.push_back(agents[i].main.backward(caches[i], grad_out));
  }
  return out;
}

bool sync_target(AgentNetPair& pair, int frequency) {
  MARLSIG_EXPECTS(frequency > 0);
  if (++pair.episodes_since_sync < frequency) return false;
  pair.target = pair.main;
  pair.episodes_since_sync = 0;
  return true;
}

TrainStats train_episode_end(const ReplayBuffer<Transition>& buffer, std::vector<AgentNetPair>& agents,
                             std::vector<AdamState>& optimizers, const TrainConfig& cfg, std::mt19937_64& rng) {
  MARLSIG_EXPECTS(optimizers.size() == agents.size());
  TrainStats stats;
  if (buffer.size() < static_cast<std::size_t>(cfg.batch_size)) return stats;
  for (int k = 0; k < cfg.updates; ++k) {
    const auto batch = buffer.sample(static_cast<std::size_t>(cfg.batch_size), rng);
    const auto y = ddqn_targets(batch, agents, cfg.gamma);
    const VdnLoss loss = vdn_loss(batch, agents, y, cfg.loss, cfg.huber_delta);
    if (cfg.on_batch) cfg.on_batch(loss);
    if (!std::isfinite(loss.loss)) throw TrainingDiverged("non-finite loss at update " + std::to_string(k));
    for (std::size_t i = 0; i < agents.size(); ++i) {
      optimizers[i].step(agents[i].main, loss.grads[i]);
      if (!agents[i].main.all_finite())
        throw TrainingDiverged("non-finite parameters in agent " + std::to_string(i) + " at update " + std::to_string(k));
    }
    stats.mean_loss += loss.loss;
    ++stats.updates;
  }
  if (stats.updates > 0) stats.mean_loss /= stats.updates;
  return stats;
}

}  // namespace marlsig::rl
