#include "marlsig/harness/episode.hpp"

#include <cmath>

#include "marlsig/contract.hpp"

namespace marlsig::harness {

using signal::Phase;
using sim::kIntersections;
using sim::World;

rl::ActionMask effective_mask(const signal::SignalControllerState& state) {
  if (state.in_clearance()) {
    rl::ActionMask m{};
    m[signal::index_of(state.serving_phase())] = true;
    return m;
  }
  return state.valid_actions();
}

namespace {

struct Pending {
  bool active = false;
  std::vector<rl::Vector> obs;
  std::vector<int> actions;
  double reward = 0.0;
};

void collect(World& world, EpisodeResult& res) {
  world.finalize();
  res.probes = world.probes();
  res.red_violations = world.red_violations();
  std::array<double, kIntersections> sum{};
  for (const auto& row : world.probes()) {
    if (row.kind != "bus_delay") continue;
    const int i = row.section == "A" ? sim::kIntersectionA : sim::kIntersectionB;
    sum[i] += row.value;
    ++res.buses_measured[i];
  }
  for (int i = 0; i < kIntersections; ++i)
    res.mean_bus_delay[i] = res.buses_measured[i] > 0 ? sum[i] / res.buses_measured[i] : 0.0;
}

void run_baseline(const EpisodeSpec& spec, World& world, std::int64_t end_tick, EpisodeResult& res) {
  const auto& cfg = world.config();
  const auto plan = signal::webster_plan(signal::critical_lane_flows(cfg.demand), spec.saturation_flow, cfg.timing);
  const double theta = signal::base_offset(cfg.intersection_spacing, cfg.desired_speed_fps());
  const bool fixed = spec.baseline == Baseline::Fixed;
  // Fixed time runs both intersections on offset 0; actuated staggers B by the travel time.
  const std::array<double, kIntersections> offsets = {0.0, fixed ? 0.0 : theta};
  std::array<signal::FixedTimePlan, kIntersections> fixed_plans;
  std::array<signal::ActuatedPlan, kIntersections> actuated_plans;
  for (int i = 0; i < kIntersections; ++i) {
    fixed_plans[i] = signal::fixed_plan_from(plan, cfg.timing, offsets[i]);
    actuated_plans[i] = signal::actuated_plan_from(plan, cfg.timing, offsets[i]);
  }
  while (world.tick() < end_tick) {
    const double t = world.now();
    for (int i = 0; i < kIntersections; ++i) {
      auto& s = world.signal(i);
      if (s.in_clearance()) continue;
      Phase want = fixed ? signal::fixed_time_decide(s, fixed_plans[i], t)
                         : signal::actuated_decide(s, world.detectors(i), actuated_plans[i], t);
      const auto mask = s.valid_actions();
      if (!mask[signal::index_of(want)]) {
        if (want != s.active_phase()) continue;  // not yet past min green
        // Max green reached: move on along the ring.
        want = signal::next_in_ring(want);
        while (!mask[signal::index_of(want)]) want = signal::next_in_ring(want);
      }
      ++res.decisions;
      if (want != s.active_phase()) s.apply_action(want, t);
    }
    if (spec.on_tick) spec.on_tick(world);
    world.advance();
  }
}

void run_marl(const EpisodeSpec& spec, World& world, std::int64_t end_tick, EpisodeResult& res) {
  for (int i = 0; i < kIntersections; ++i) MARLSIG_EXPECTS(spec.background[i] != nullptr);
  if (spec.tsp_mode != tsp::TspMode::Off)
    for (int i = 0; i < kIntersections; ++i) MARLSIG_EXPECTS(spec.tsp[i] != nullptr);
  const bool learning = spec.learner != Learner::None;
  if (learning) MARLSIG_EXPECTS(spec.explore_rng != nullptr);
  if (spec.learner == Learner::Background || spec.learner == Learner::TspCoordinated)
    MARLSIG_EXPECTS(spec.joint_buffer != nullptr);
  if (spec.learner == Learner::TspIndependent)
    for (int i = 0; i < kIntersections; ++i) MARLSIG_EXPECTS(spec.agent_buffers[i] != nullptr);

  env::RewardParams reward = spec.reward;
  if (reward.offset.theta_base <= 0.0)
    reward.offset.theta_base =
        signal::base_offset(world.config().intersection_spacing, world.config().desired_speed_fps());

  tsp::TspOrchestrator orch(spec.tsp_mode);
  env::EpochTracker tracker;
  Pending joint;
  std::array<Pending, kIntersections> solo;
  double reward_sum = 0.0;
  world.begin_epoch();
  if (spec.trace) env::write_trace_header(*spec.trace);

  auto tsp_obs = [&](int i) { return env::observe_tsp(world, i, spec.encoding); };
  auto bg_obs = [&](int i) { return env::observe_background(world, i, spec.encoding); };

  // Completes transitions opened at the previous boundary.
  auto close_pending = [&](bool episode_end) {
    std::array<rl::ActionMask, kIntersections> masks;
    for (int i = 0; i < kIntersections; ++i) masks[i] = effective_mask(world.signal(i));
    const auto& act = orch.activation();
    if (joint.active) {
      rl::Transition tr;
      tr.obs = std::move(joint.obs);
      tr.actions = joint.actions;
      tr.reward = joint.reward;
      const bool coordinated = spec.learner == Learner::TspCoordinated;
      for (int i = 0; i < kIntersections; ++i) {
        tr.next_obs.push_back(coordinated ? tsp_obs(i) : bg_obs(i));
        tr.next_masks.push_back(masks[i]);
      }
      tr.terminal = episode_end || (coordinated && !(act.tsp[0] && act.tsp[1]));
      spec.joint_buffer->push(std::move(tr));
      ++res.transitions_stored;
      joint.active = false;
    }
    for (int i = 0; i < kIntersections; ++i) {
      if (!solo[i].active) continue;
      rl::Transition tr;
      tr.obs = std::move(solo[i].obs);
      tr.actions = solo[i].actions;
      tr.reward = solo[i].reward;
      tr.next_obs.push_back(tsp_obs(i));
      tr.next_masks.push_back(masks[i]);
      tr.terminal = episode_end || !act.tsp[i];
      spec.agent_buffers[i]->push(std::move(tr));
      ++res.transitions_stored;
      solo[i].active = false;
    }
  };

  while (world.tick() < end_tick) {
    orch.poll(world);
    close_pending(false);

    std::array<bool, kIntersections> tsp_ctl{};
    std::array<rl::Vector, kIntersections> obs;
    std::array<int, kIntersections> actions{};
    std::array<int, kIntersections> trace_actions{};
    std::array<bool, kIntersections> premature{};
    for (int i = 0; i < kIntersections; ++i) {
      tsp_ctl[i] = orch.route(i) == tsp::Controller::Tsp;
      obs[i] = tsp_ctl[i] ? tsp_obs(i) : bg_obs(i);
    }
    for (int i = 0; i < kIntersections; ++i) {
      auto& s = world.signal(i);
      if (s.in_clearance()) {
        actions[i] = signal::index_of(s.serving_phase());
        trace_actions[i] = -1;
        continue;
      }
      const rl::Mlp& net = tsp_ctl[i] ? *spec.tsp[i] : *spec.background[i];
      const rl::Vector q = net.forward(obs[i]);
      const auto mask = s.valid_actions();
      const bool explores = (spec.learner == Learner::Background) ||
                            (tsp_ctl[i] && (spec.learner == Learner::TspIndependent ||
                                            spec.learner == Learner::TspCoordinated));
      const int a = explores ? rl::epsilon_greedy(q, mask, spec.epsilon, *spec.explore_rng) : rl::masked_argmax(q, mask);
      ++res.decisions;
      actions[i] = a;
      trace_actions[i] = a;
      if (!mask[a]) {
        ++res.invalid_decisions;
        actions[i] = signal::index_of(s.active_phase());
        continue;
      }
      premature[i] = env::premature_change(world, i, signal::phase_from_index(a), reward);
    }
    for (int i = 0; i < kIntersections; ++i) {
      auto& s = world.signal(i);
      if (!s.in_clearance()) s.apply_action(signal::phase_from_index(actions[i]), world.now());
    }

    if (spec.learner == Learner::Background || (spec.learner == Learner::TspCoordinated && tsp_ctl[0] && tsp_ctl[1])) {
      joint.active = true;
      joint.obs.assign(obs.begin(), obs.end());
      joint.actions.assign(actions.begin(), actions.end());
    }
    if (spec.learner == Learner::TspIndependent) {
      for (int i = 0; i < kIntersections; ++i) {
        if (!tsp_ctl[i]) continue;
        solo[i].active = true;
        solo[i].obs = {obs[i]};
        solo[i].actions = {actions[i]};
      }
    }

    const double t0 = world.now();
    tracker.begin(world, premature);
    const double dt = env::next_epoch(world);
    const std::int64_t n = std::min<std::int64_t>(world.config().to_ticks(dt), end_tick - world.tick());
    for (std::int64_t k = 0; k < n; ++k) {
      if (spec.on_tick) spec.on_tick(world);
      world.advance();
    }
    const auto local = tracker.finish(world, reward);

    std::array<double, kIntersections> r_general{};
    for (int i = 0; i < kIntersections; ++i) r_general[i] = env::reward_general(local[i], reward);
    const double global = env::global_reward(r_general[0], r_general[1]);
    reward_sum += global;
    ++res.epochs;

    std::array<double, kIntersections> r_local = r_general;
    double r_joint = global;
    if (spec.learner == Learner::TspIndependent) {
      for (int i = 0; i < kIntersections; ++i) r_local[i] = env::reward_tsp_independent(local[i], reward);
    } else if (spec.learner == Learner::TspCoordinated) {
      for (int i = 0; i < kIntersections; ++i) r_local[i] = env::reward_tsp_coordinated(local[i], reward);
      r_joint = env::global_reward(r_local[0], r_local[1]);
    }
    if (joint.active) joint.reward = spec.reward_scale * r_joint;
    for (int i = 0; i < kIntersections; ++i)
      if (solo[i].active) solo[i].reward = spec.reward_scale * r_local[i];

    if (spec.trace) {
      env::TraceRow row;
      row.t = t0;
      row.dt = static_cast<double>(n) * world.config().sim_step;
      row.actions = trace_actions;
      row.local_rewards = r_local;
      row.global = spec.learner == Learner::None || spec.learner == Learner::Background ? global : r_joint;
      for (int i = 0; i < kIntersections; ++i) {
        row.side_breach[i] = env::side_queue_breach(local[i], reward);
        row.premature[i] = premature[i];
        row.tsp_active[i] = tsp_ctl[i];
      }
      row.offset_hit = local[0].offset_hit;
      env::write_trace_row(*spec.trace, row);
    }
  }
  orch.poll(world);
  close_pending(true);
  res.mean_global_reward = res.epochs > 0 ? reward_sum / res.epochs : 0.0;
  res.tsp_log = orch.log();
}

}  // namespace

EpisodeResult run_episode(const EpisodeSpec& spec) {
  World world(spec.scenario);
  world.set_warmup(spec.warmup);
  EpisodeResult res;
  const std::int64_t end_tick = world.config().to_ticks(spec.length);
  if (spec.baseline == Baseline::Marl) {
    run_marl(spec, world, end_tick, res);
  } else {
    run_baseline(spec, world, end_tick, res);
  }
  collect(world, res);
  return res;
}

}  // namespace marlsig::harness
