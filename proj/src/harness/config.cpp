#include "marlsig/harness/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace marlsig::harness {

using nlohmann::json;
using sim::ConfigError;

std::string_view to_string(Baseline b) {
  switch (b) {
    case Baseline::Fixed: return "fixed";
    case Baseline::Actuated: return "actuated";
    case Baseline::Marl: return "marl";
  }
  return "marl";
}

std::optional<Baseline> parse_baseline(std::string_view s) {
  if (s == "fixed") return Baseline::Fixed;
  if (s == "actuated") return Baseline::Actuated;
  if (s == "marl") return Baseline::Marl;
  return std::nullopt;
}

namespace {

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& prefix = "") {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(prefix + key, std::string("wrong type (") + e.what() + ")");
  }
}

void require(bool ok, const std::string& field, const std::string& msg) {
  if (!ok) throw ConfigError(field, msg);
}

void require_object(const json& j, const std::string& field) {
  require(j.is_object(), field, "must be a JSON object");
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& prefix) {
  for (auto it = j.begin(); it != j.end(); ++it)
    require(known.count(it.key()) > 0, prefix + it.key(), "unknown field");
}

}  // namespace

void validate(const ExperimentConfig& c) {
  sim::validate(c.scenario);
  require(c.episodes >= 0, "episodes", "must be >= 0");
  require(c.episode_length > 0.0, "episode_length", "must be > 0");
  require(c.tsp_episode_length > 0.0, "tsp_episode_length", "must be > 0");
  require(c.eval_length > 0.0, "eval_length", "must be > 0");
  require(c.warmup >= 0.0 && c.warmup < c.eval_length, "warmup", "must satisfy 0 <= warmup < eval_length");
  require(!c.seeds.empty(), "seeds", "needs at least one seed");
  require(c.reward.ql_th1 > 0.0 && c.reward.ql_th2 > 0.0, "reward", "queue thresholds must be > 0");
  require(c.reward.w_bd >= 0.0 && c.reward.w_bv >= 0.0, "reward", "weights must be >= 0");
  require(c.reward.penalty_n >= 0.0 && c.reward.penalty_m >= 0.0, "reward", "penalties must be >= 0");
  require(c.reward.offset.delta_theta >= 0.0, "reward.delta_theta", "must be >= 0");
  require(!c.rl.hidden.empty(), "rl.hidden", "needs at least one hidden layer");
  for (int w : c.rl.hidden) require(w > 0, "rl.hidden", "widths must be > 0");
  require(c.rl.adam.learning_rate > 0.0, "rl.learning_rate", "must be > 0");
  require(c.rl.gamma >= 0.0 && c.rl.gamma < 1.0, "rl.gamma", "must be in [0, 1)");
  require(c.rl.epsilon_decay >= 0.0, "rl.epsilon_decay", "must be >= 0");
  require(c.rl.epsilon_floor >= 0.0 && c.rl.epsilon_floor <= 1.0, "rl.epsilon_floor", "must be in [0, 1]");
  require(c.rl.buffer_capacity > 0, "rl.buffer_capacity", "must be > 0");
  require(c.rl.updates_per_episode >= 0, "rl.updates_per_episode", "must be >= 0");
  require(c.rl.batch_size > 0, "rl.batch_size", "must be > 0");
  require(c.rl.target_sync_episodes > 0, "rl.target_sync_episodes", "must be > 0");
  require(c.rl.huber_delta > 0.0, "rl.huber_delta", "must be > 0");
  require(c.rl.reward_scale > 0.0, "rl.reward_scale", "must be > 0");
  require(c.saturation_flow > 0.0, "saturation_flow", "must be > 0");
  require(c.tsp_mode == tsp::TspMode::Off || c.baseline == Baseline::Marl, "tsp",
          "TSP agents run on top of the MARL background controller; use baseline marl");
  require(c.threads >= 0, "threads", "must be >= 0");
}

ExperimentConfig experiment_config_from_json(const json& j) {
  require_object(j, "<root>");
  reject_unknown(j,
                 {"scenario", "episodes", "episode_length", "tsp_episode_length", "eval_length", "warmup",
                  "replicates", "seeds", "reward", "rl", "baseline", "tsp", "saturation_flow", "models", "threads",
                  "indication_channel"},
                 "");
  ExperimentConfig c;
  if (j.contains("scenario")) {
    require_object(j.at("scenario"), "scenario");
    try {
      c.scenario = sim::network_config_from_json(j.at("scenario"));
    } catch (const ConfigError& e) {
      throw ConfigError("scenario." + e.field(), std::string(e.what()).substr(e.field().size() + 2));
    }
  }
  read(j, "episodes", c.episodes);
  read(j, "episode_length", c.episode_length);
  read(j, "tsp_episode_length", c.tsp_episode_length);
  read(j, "eval_length", c.eval_length);
  read(j, "warmup", c.warmup);
  read(j, "saturation_flow", c.saturation_flow);
  read(j, "threads", c.threads);
  read(j, "indication_channel", c.encoding.indication_channel);

  std::optional<int> replicates;
  if (j.contains("replicates")) {
    int r = 0;
    read(j, "replicates", r);
    require(r > 0, "replicates", "must be > 0");
    replicates = r;
  }
  if (j.contains("seeds")) {
    read(j, "seeds", c.seeds);
    require(!replicates || *replicates == static_cast<int>(c.seeds.size()), "replicates",
            "must equal the number of seeds");
  } else if (replicates) {
    c.seeds.clear();
    for (int k = 1; k <= *replicates; ++k) c.seeds.push_back(static_cast<std::uint64_t>(k));
  }

  if (j.contains("reward")) {
    const auto& r = j.at("reward");
    require_object(r, "reward");
    reject_unknown(r, {"ql_th1", "ql_th2", "penalty_n", "penalty_m", "theta_base", "delta_theta", "bonus",
                       "offset_bonus", "w_bd", "w_bv"},
                   "reward.");
    read(r, "ql_th1", c.reward.ql_th1, "reward.");
    read(r, "ql_th2", c.reward.ql_th2, "reward.");
    read(r, "penalty_n", c.reward.penalty_n, "reward.");
    read(r, "penalty_m", c.reward.penalty_m, "reward.");
    read(r, "theta_base", c.reward.offset.theta_base, "reward.");
    read(r, "delta_theta", c.reward.offset.delta_theta, "reward.");
    read(r, "bonus", c.reward.offset.bonus, "reward.");
    read(r, "offset_bonus", c.reward.offset_bonus, "reward.");
    read(r, "w_bd", c.reward.w_bd, "reward.");
    read(r, "w_bv", c.reward.w_bv, "reward.");
  }
  if (c.reward.offset.theta_base <= 0.0)
    c.reward.offset.theta_base = signal::base_offset(c.scenario.intersection_spacing, c.scenario.desired_speed_fps());

  if (j.contains("rl")) {
    const auto& r = j.at("rl");
    require_object(r, "rl");
    reject_unknown(r, {"hidden", "learning_rate", "beta1", "beta2", "adam_epsilon", "gamma", "epsilon_decay",
                       "epsilon_floor", "buffer_capacity", "updates_per_episode", "batch_size",
                       "target_sync_episodes", "loss", "huber_delta", "reward_scale"},
                   "rl.");
    read(r, "hidden", c.rl.hidden, "rl.");
    read(r, "learning_rate", c.rl.adam.learning_rate, "rl.");
    read(r, "beta1", c.rl.adam.beta1, "rl.");
    read(r, "beta2", c.rl.adam.beta2, "rl.");
    read(r, "adam_epsilon", c.rl.adam.epsilon, "rl.");
    read(r, "gamma", c.rl.gamma, "rl.");
    read(r, "epsilon_decay", c.rl.epsilon_decay, "rl.");
    read(r, "epsilon_floor", c.rl.epsilon_floor, "rl.");
    read(r, "buffer_capacity", c.rl.buffer_capacity, "rl.");
    read(r, "updates_per_episode", c.rl.updates_per_episode, "rl.");
    read(r, "batch_size", c.rl.batch_size, "rl.");
    read(r, "target_sync_episodes", c.rl.target_sync_episodes, "rl.");
    read(r, "huber_delta", c.rl.huber_delta, "rl.");
    read(r, "reward_scale", c.rl.reward_scale, "rl.");
    std::string loss = "mse";
    read(r, "loss", loss, "rl.");
    require(loss == "mse" || loss == "huber", "rl.loss", "must be \"mse\" or \"huber\"");
    c.rl.loss = loss == "mse" ? rl::LossKind::Mse : rl::LossKind::Huber;
  }

  std::string baseline = std::string(to_string(c.baseline));
  read(j, "baseline", baseline);
  const auto b = parse_baseline(baseline);
  require(b.has_value(), "baseline", "must be fixed, actuated or marl");
  c.baseline = *b;
  std::string mode = std::string(to_string(c.tsp_mode));
  read(j, "tsp", mode);
  const auto m = tsp::parse_mode(mode);
  require(m.has_value(), "tsp", "must be off, independent or coordinated");
  c.tsp_mode = *m;

  if (j.contains("models")) {
    const auto& mj = j.at("models");
    require_object(mj, "models");
    reject_unknown(mj, {"background_A", "background_B", "tsp_independent_A", "tsp_independent_B",
                        "tsp_coordinated_A", "tsp_coordinated_B"},
                   "models.");
    read(mj, "background_A", c.models.background_a, "models.");
    read(mj, "background_B", c.models.background_b, "models.");
    read(mj, "tsp_independent_A", c.models.tsp_independent_a, "models.");
    read(mj, "tsp_independent_B", c.models.tsp_independent_b, "models.");
    read(mj, "tsp_coordinated_A", c.models.tsp_coordinated_a, "models.");
    read(mj, "tsp_coordinated_B", c.models.tsp_coordinated_b, "models.");
  }
  validate(c);
  return c;
}

json to_json(const ExperimentConfig& c) {
  return {{"scenario", sim::to_json(c.scenario)},
          {"episodes", c.episodes},
          {"episode_length", c.episode_length},
          {"tsp_episode_length", c.tsp_episode_length},
          {"eval_length", c.eval_length},
          {"warmup", c.warmup},
          {"seeds", c.seeds},
          {"reward",
           {{"ql_th1", c.reward.ql_th1},
            {"ql_th2", c.reward.ql_th2},
            {"penalty_n", c.reward.penalty_n},
            {"penalty_m", c.reward.penalty_m},
            {"theta_base", c.reward.offset.theta_base},
            {"delta_theta", c.reward.offset.delta_theta},
            {"bonus", c.reward.offset.bonus},
            {"offset_bonus", c.reward.offset_bonus},
            {"w_bd", c.reward.w_bd},
            {"w_bv", c.reward.w_bv}}},
          {"rl",
           {{"hidden", c.rl.hidden},
            {"learning_rate", c.rl.adam.learning_rate},
            {"beta1", c.rl.adam.beta1},
            {"beta2", c.rl.adam.beta2},
            {"adam_epsilon", c.rl.adam.epsilon},
            {"gamma", c.rl.gamma},
            {"epsilon_decay", c.rl.epsilon_decay},
            {"epsilon_floor", c.rl.epsilon_floor},
            {"buffer_capacity", c.rl.buffer_capacity},
            {"updates_per_episode", c.rl.updates_per_episode},
            {"batch_size", c.rl.batch_size},
            {"target_sync_episodes", c.rl.target_sync_episodes},
            {"loss", c.rl.loss == rl::LossKind::Mse ? "mse" : "huber"},
            {"huber_delta", c.rl.huber_delta},
            {"reward_scale", c.rl.reward_scale}}},
          {"baseline", to_string(c.baseline)},
          {"tsp", tsp::to_string(c.tsp_mode)},
          {"saturation_flow", c.saturation_flow},
          {"indication_channel", c.encoding.indication_channel},
          {"threads", c.threads}};
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<json>", e.what());
  }
  return experiment_config_from_json(j);
}

std::vector<int> network_widths(int input_width, const RlConfig& rl) {
  std::vector<int> w = {input_width};
  w.insert(w.end(), rl.hidden.begin(), rl.hidden.end());
  w.push_back(rl::kNumActions);
  return w;
}

std::string hash_string(std::uint64_t h) { return fmt::format("{:016x}", h); }

}  // namespace marlsig::harness
