#include "marlsig/harness/training.hpp"

#include <fmt/format.h>

#include "marlsig/contract.hpp"
#include "marlsig/sim/rng.hpp"

namespace marlsig::harness {

using sim::kIntersections;

rl::TrainConfig train_config(const RlConfig& r) {
  rl::TrainConfig t;
  t.updates = r.updates_per_episode;
  t.batch_size = r.batch_size;
  t.gamma = r.gamma;
  t.adam = r.adam;
  t.loss = r.loss;
  t.huber_delta = r.huber_delta;
  return t;
}

namespace {

EpisodeSpec training_spec(const ExperimentConfig& cfg, double length) {
  EpisodeSpec spec;
  spec.scenario = cfg.scenario;
  spec.length = length;
  spec.warmup = 0.0;
  spec.baseline = Baseline::Marl;
  spec.reward = cfg.reward;
  spec.encoding = cfg.encoding;
  spec.reward_scale = cfg.rl.reward_scale;
  spec.saturation_flow = cfg.saturation_flow;
  return spec;
}

}  // namespace

BackgroundTraining train_background(const ExperimentConfig& cfg, const TrainOptions& opt) {
  BackgroundTraining out;
  sim::RngStream init(cfg.scenario.seed, "init-background");
  sim::RngStream explore(cfg.scenario.seed, "explore-background");
  sim::RngStream replay(cfg.scenario.seed, "replay-background");
  const auto widths = network_widths(env::background_obs_width(cfg.encoding), cfg.rl);
  std::vector<rl::AgentNetPair> agents;
  std::vector<rl::AdamState> optimizers;
  for (int i = 0; i < kIntersections; ++i) {
    agents.push_back(rl::make_agent(widths, init.engine()));
    optimizers.emplace_back(agents.back().main, cfg.rl.adam);
  }
  rl::ReplayBuffer<rl::Transition> buffer(cfg.rl.buffer_capacity);
  rl::TrainConfig tc = train_config(cfg.rl);
  tc.on_batch = opt.on_batch;

  for (int e = 0; e < cfg.episodes; ++e) {
    EpisodeSpec spec = training_spec(cfg, cfg.episode_length);
    spec.learner = Learner::Background;
    spec.epsilon = rl::epsilon(e, cfg.rl.epsilon_decay, cfg.rl.epsilon_floor);
    spec.explore_rng = &explore.engine();
    spec.joint_buffer = &buffer;
    for (int i = 0; i < kIntersections; ++i) spec.background[i] = &agents[i].main;
    if (e + 1 == cfg.episodes) spec.trace = opt.trace;
    spec.on_tick = opt.on_tick;
    const EpisodeResult res = run_episode(spec);
    const rl::TrainStats stats = rl::train_episode_end(buffer, agents, optimizers, tc, replay.engine());
    for (auto& a : agents) rl::sync_target(a, cfg.rl.target_sync_episodes);

    BackgroundCurveRow row{e + 1, spec.epsilon, res.mean_global_reward, stats.mean_loss, res.transitions_stored};
    out.curve.push_back(row);
    if (opt.on_episode) opt.on_episode(e, res);
    if (opt.progress)
      opt.progress(fmt::format("episode {}/{} eps={:.3f} reward={:.2f} loss={:.4g}", e + 1, cfg.episodes, row.epsilon,
                               row.mean_global_reward, row.mean_loss));
  }
  for (int i = 0; i < kIntersections; ++i) out.agents[i] = std::move(agents[i]);
  return out;
}

TspTraining train_tsp(const ExperimentConfig& cfg, tsp::TspMode mode,
                      const std::array<rl::Mlp, sim::kIntersections>& background, const TrainOptions& opt) {
  MARLSIG_EXPECTS(mode != tsp::TspMode::Off);
  const bool coordinated = mode == tsp::TspMode::Coordinated;
  const std::string tag = coordinated ? "coordinated" : "independent";
  TspTraining out;
  sim::RngStream init(cfg.scenario.seed, "init-tsp-" + tag);
  sim::RngStream explore(cfg.scenario.seed, "explore-tsp-" + tag);
  sim::RngStream replay(cfg.scenario.seed, "replay-tsp-" + tag);
  const auto widths = network_widths(env::tsp_obs_width(cfg.encoding), cfg.rl);
  std::vector<rl::AgentNetPair> agents;
  std::vector<rl::AdamState> optimizers;
  for (int i = 0; i < kIntersections; ++i) {
    agents.push_back(rl::make_agent(widths, init.engine()));
    optimizers.emplace_back(agents.back().main, cfg.rl.adam);
  }
  rl::ReplayBuffer<rl::Transition> joint(cfg.rl.buffer_capacity);
  std::vector<rl::ReplayBuffer<rl::Transition>> solo(kIntersections,
                                                     rl::ReplayBuffer<rl::Transition>(cfg.rl.buffer_capacity));
  rl::TrainConfig tc = train_config(cfg.rl);
  tc.on_batch = opt.on_batch;

  for (int e = 0; e < cfg.episodes; ++e) {
    EpisodeSpec spec = training_spec(cfg, cfg.tsp_episode_length);
    spec.tsp_mode = mode;
    spec.learner = coordinated ? Learner::TspCoordinated : Learner::TspIndependent;
    spec.epsilon = rl::epsilon(e, cfg.rl.epsilon_decay, cfg.rl.epsilon_floor);
    spec.explore_rng = &explore.engine();
    spec.joint_buffer = &joint;
    for (int i = 0; i < kIntersections; ++i) {
      spec.background[i] = &background[i];
      spec.tsp[i] = &agents[i].main;
      spec.agent_buffers[i] = &solo[i];
    }
    if (e + 1 == cfg.episodes) spec.trace = opt.trace;
    spec.on_tick = opt.on_tick;
    const EpisodeResult res = run_episode(spec);

    double loss_sum = 0.0;
    int loss_terms = 0;
    if (coordinated) {
      const auto stats = rl::train_episode_end(joint, agents, optimizers, tc, replay.engine());
      if (stats.updates > 0) {
        loss_sum += stats.mean_loss;
        ++loss_terms;
      }
    } else {
      for (int i = 0; i < kIntersections; ++i) {
        std::vector<rl::AgentNetPair> one = {std::move(agents[i])};
        std::vector<rl::AdamState> opt_one = {std::move(optimizers[i])};
        const auto stats = rl::train_episode_end(solo[i], one, opt_one, tc, replay.engine());
        agents[i] = std::move(one[0]);
        optimizers[i] = std::move(opt_one[0]);
        if (stats.updates > 0) {
          loss_sum += stats.mean_loss;
          ++loss_terms;
        }
      }
    }
    for (auto& a : agents) rl::sync_target(a, cfg.rl.target_sync_episodes);

    TspCurveRow row;
    row.episode = e + 1;
    row.epsilon = spec.epsilon;
    row.mean_bus_delay = res.mean_bus_delay;
    row.buses = res.buses_measured;
    row.mean_loss = loss_terms > 0 ? loss_sum / loss_terms : 0.0;
    row.transitions = res.transitions_stored;
    out.curve.push_back(row);
    if (opt.on_episode) opt.on_episode(e, res);
    if (opt.progress)
      opt.progress(fmt::format("episode {}/{} eps={:.3f} bus_delay A={:.2f} B={:.2f} transitions={} loss={:.4g}", e + 1,
                               cfg.episodes, row.epsilon, row.mean_bus_delay[0], row.mean_bus_delay[1],
                               row.transitions, row.mean_loss));
  }
  for (int i = 0; i < kIntersections; ++i) out.agents[i] = std::move(agents[i]);
  return out;
}

}  // namespace marlsig::harness
