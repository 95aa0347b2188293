#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <map>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include <fmt/format.h>

#include "common/fixtures.hpp"
#include "marlsig/harness/config.hpp"
#include "marlsig/harness/evaluation.hpp"
#include "marlsig/harness/stats.hpp"
#include "marlsig/harness/training.hpp"
#include "marlsig/rl/adam.hpp"
#include "marlsig/rl/dqn.hpp"
#include "marlsig/rl/replay.hpp"

using namespace marlsig;
using namespace marlsig::fixtures;
using harness::Baseline;
using tsp::TspMode;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

void note(const std::string& s) { std::cerr << "  .. " << s << std::endl; }

Verdict gradient_suite() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> width(1, 8), depth(1, 3);
  std::normal_distribution<double> normal(0.0, 1.0);
  int nets = 0;
  std::size_t checked = 0;
  double worst = 0.0;
  while (nets < 120) {
    std::vector<int> widths{width(rng)};
    const int hidden = depth(rng);
    for (int k = 0; k < hidden; ++k) widths.push_back(width(rng));
    widths.push_back(width(rng));
    rl::Mlp net = rl::Mlp::he_initialized(widths, rng);
    for (auto& layer : net.layers()) layer.bias = layer.bias.unaryExpr([&](double) { return 0.1 * normal(rng); });
    rl::Matrix x(widths.front(), 3);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
    rl::Matrix g(widths.back(), 3);
    for (int i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);

    rl::ForwardCache cache;
    net.forward_batch(x, &cache);
    // Finite differences are meaningless next to a ReLU kink; draw again.
    bool near_kink = false;
    for (std::size_t l = 0; l + 1 < cache.pre.size(); ++l)
      if ((cache.pre[l].array().abs() < 1e-3).any()) near_kink = true;
    if (near_kink) continue;
    ++nets;

    const rl::MlpGradients grads = net.backward(cache, g);
    auto objective = [&](const rl::Mlp& m) { return (m.forward_batch(x).array() * g.array()).sum(); };
    const double h = 1e-6;
    for (std::size_t k = 0; k < net.parameter_count(); ++k) {
      const double saved = net.parameter(k);
      net.parameter(k) = saved + h;
      const double up = objective(net);
      net.parameter(k) = saved - h;
      const double down = objective(net);
      net.parameter(k) = saved;
      const double numeric = (up - down) / (2 * h);
      const double analytic = rl::gradient_entry(grads, k);
      const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-4});
      worst = std::max(worst, std::abs(numeric - analytic) / scale);
      ++checked;
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-4 && secs < 10.0,
          fmt::format("{} nets, {} parameters, max rel err {:.2e}, {:.2f} s", nets, checked, worst, secs)};
}

// Five-state chain. Right moves toward the terminal state 4 (+1 on entry); left moves back,
// and left at state 0 stays put with +0.08. Actions 2 and 3 are never valid.
struct Chain {
  static constexpr int kStates = 5;
  static constexpr int kTerminal = 4;
  static constexpr double kGamma = 0.9;
  static constexpr double kStayReward = 0.08;

  static std::pair<int, double> step(int s, int a) {
    if (a == 1) {
      const int next = s + 1;
      return {next, next == kTerminal ? 1.0 : 0.0};
    }
    return s == 0 ? std::pair{0, kStayReward} : std::pair{s - 1, 0.0};
  }
  static rl::Vector encode(int s) {
    rl::Vector v = rl::Vector::Zero(kStates);
    v(s) = 1.0;
    return v;
  }
  static constexpr rl::ActionMask mask{true, true, false, false};
};

// Q*[s][a] for non-terminal s, a in {left, right}.
std::array<std::array<double, 2>, 4> value_iteration() {
  std::array<double, Chain::kStates> v{};
  std::array<std::array<double, 2>, 4> q{};
  for (int it = 0; it < 10000; ++it) {
    double change = 0;
    for (int s = 0; s < Chain::kTerminal; ++s) {
      for (int a = 0; a < 2; ++a) {
        const auto [next, r] = Chain::step(s, a);
        q[s][a] = r + Chain::kGamma * (next == Chain::kTerminal ? 0.0 : v[next]);
      }
      const double nv = std::max(q[s][0], q[s][1]);
      change = std::max(change, std::abs(nv - v[s]));
      v[s] = nv;
    }
    if (change < 1e-15) break;
  }
  return q;
}

Verdict tabular_oracle() {
  const auto t0 = Clock::now();
  const auto q_star = value_iteration();

  std::mt19937_64 rng(7);
  std::vector<rl::AgentNetPair> agents{rl::make_agent({Chain::kStates, rl::kNumActions}, rng)};
  rl::AdamParams adam;
  adam.learning_rate = 0.003;
  std::vector<rl::AdamState> opt{rl::AdamState(agents[0].main, adam)};
  rl::ReplayBuffer<rl::Transition> buffer(5000);
  rl::TrainConfig tc;
  tc.updates = 16;
  tc.batch_size = 32;
  tc.gamma = Chain::kGamma;
  tc.adam = adam;

  std::uniform_int_distribution<int> start(0, Chain::kTerminal - 1);
  int episodes = 0;
  bool done = false;
  auto greedy_matches = [&] {
    for (int s = 0; s < Chain::kTerminal; ++s) {
      const int want = q_star[s][1] > q_star[s][0] ? 1 : 0;
      if (rl::masked_argmax(agents[0].main.forward(Chain::encode(s)), Chain::mask) != want) return false;
    }
    return true;
  };
  auto max_q_error = [&] {
    double err = 0;
    for (int s = 0; s < Chain::kTerminal; ++s) {
      const rl::Vector q = agents[0].main.forward(Chain::encode(s));
      for (int a = 0; a < 2; ++a) err = std::max(err, std::abs(q(a) - q_star[s][a]));
    }
    return err;
  };
  while (episodes < 2000 && !done) {
    int s = start(rng);
    const double eps = std::max(0.2, 1.0 - episodes / 300.0);
    for (int k = 0; k < 20; ++k) {
      const rl::Vector q = agents[0].main.forward(Chain::encode(s));
      const int a = rl::epsilon_greedy(q, Chain::mask, eps, rng);
      const auto [next, r] = Chain::step(s, a);
      rl::Transition tr;
      tr.obs = {Chain::encode(s)};
      tr.actions = {a};
      tr.reward = r;
      tr.next_obs = {Chain::encode(next)};
      tr.next_masks = {Chain::mask};
      tr.terminal = next == Chain::kTerminal;
      buffer.push(std::move(tr));
      if (next == Chain::kTerminal) break;
      s = next;
    }
    rl::train_episode_end(buffer, agents, opt, tc, rng);
    rl::sync_target(agents[0], 5);
    ++episodes;
    done = episodes >= 200 && greedy_matches() && max_q_error() < 5e-3;
  }
  const double err = max_q_error();
  const bool policy = greedy_matches();
  const double secs = seconds_since(t0);
  return {policy && err <= 1e-2 && episodes <= 2000 && secs < 30.0,
          fmt::format("greedy policy {} value iteration, max |Q - Q*| {:.2e} after {} episodes, {:.2f} s",
                      policy ? "matches" : "differs from", err, episodes, secs)};
}

struct VdnAudit {
  std::int64_t batches = 0;
  std::int64_t samples = 0;
  std::int64_t sum_mismatch = 0;
  std::int64_t grad_mismatch = 0;

  void operator()(const rl::VdnLoss& l) {
    ++batches;
    for (std::size_t j = 0; j < l.q_tot.size(); ++j) {
      ++samples;
      double sum = 0.0;
      for (const auto& agent : l.chosen_q) sum += agent[j];
      if (sum != l.q_tot[j]) ++sum_mismatch;
      for (const auto& agent : l.dloss_dq)
        if (agent[j] != l.dloss_dq.front()[j]) ++grad_mismatch;
    }
  }
};

// The loss's own bookkeeping checked against forwards done here.
bool vdn_recomputed() {
  std::mt19937_64 rng(11);
  std::vector<rl::AgentNetPair> agents{rl::make_agent({6, 8, 4}, rng), rl::make_agent({6, 8, 4}, rng)};
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<rl::Transition> data(16);
  for (auto& tr : data) {
    for (int i = 0; i < 2; ++i) {
      tr.obs.push_back(rl::Vector::NullaryExpr(6, [&](Eigen::Index) { return normal(rng); }));
      tr.next_obs.push_back(rl::Vector::NullaryExpr(6, [&](Eigen::Index) { return normal(rng); }));
      tr.actions.push_back(static_cast<int>(rng() % 4));
      tr.next_masks.push_back({true, true, true, true});
    }
    tr.reward = normal(rng);
  }
  std::vector<const rl::Transition*> batch;
  for (const auto& tr : data) batch.push_back(&tr);
  const auto y = rl::ddqn_targets(batch, agents, 0.9);
  const auto loss = rl::vdn_loss(batch, agents, y);
  for (std::size_t j = 0; j < batch.size(); ++j) {
    double sum = 0;
    for (int i = 0; i < 2; ++i) sum += agents[i].main.forward(batch[j]->obs[i])(batch[j]->actions[i]);
    if (std::abs(sum - loss.q_tot[j]) > 1e-12) return false;
    const double d = 2.0 * (loss.q_tot[j] - y[j]) / static_cast<double>(batch.size());
    for (int i = 0; i < 2; ++i)
      if (std::abs(loss.dloss_dq[i][j] - d) > 1e-12) return false;
  }
  return true;
}

Verdict masking_trials() {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> coin(0, 1), style(0, 3);
  std::int64_t wrong = 0;
  for (int trial = 0; trial < 1'000'000; ++trial) {
    rl::ActionMask mask{};
    bool any = false;
    while (!any)
      for (auto& m : mask) any |= (m = coin(rng) == 1);
    std::array<double, rl::kNumActions> q{};
    for (int a = 0; a < rl::kNumActions; ++a) {
      switch (style(rng)) {
        case 0: q[a] = normal(rng); break;
        case 1: q[a] = std::round(normal(rng));  // ties
        break;
        case 2: q[a] = mask[a] ? normal(rng) : 1e12;  // invalid entries dominate
        break;
        default: q[a] = mask[a] ? -1e12 : normal(rng);  // valid entries are far below
      }
    }
    const int got = rl::masked_argmax(std::span<const double>(q), mask);
    int want = -1;
    for (int a = 0; a < rl::kNumActions; ++a)
      if (mask[a] && (want < 0 || q[a] > q[want])) want = a;
    if (got != want || !mask[got]) ++wrong;
  }
  return {wrong == 0, fmt::format("{} wrong selections in 1e6 trials", wrong)};
}

bool conservation_holds(std::int64_t& steps) {
  sim::NetworkConfig cfg;
  cfg.seed = 17;
  World w(cfg);
  bool ok = true;
  while (w.now() < 3600.0) {
    w.advance();
    ++steps;
    ok = ok && w.spawned_total() == w.in_network() + w.exited_total() + w.buffered();
  }
  return ok && w.spawned_total() > 0 && w.exited_total() > 0;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MARLSIG_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict determinism_via_cli(const fs::path& dir) {
  const fs::path config = dir / "small.json";
  std::ofstream(config) << R"({"episodes": 2, "episode_length": 300, "eval_length": 900, "warmup": 300,
  "seeds": [3, 4], "rl": {"hidden": [16], "updates_per_episode": 4, "batch_size": 16}})";
  const std::string common = fmt::format("--config {} --seed 5 --quiet", config.string());
  if (run_cli(fmt::format("train-background {} --out {}", common, (dir / "train").string())) != 0)
    return {false, "train-background failed"};
  std::string detail;
  bool ok = true;
  for (const char* baseline : {"fixed", "marl"}) {
    std::array<std::string, 2> csv;
    for (int k = 0; k < 2; ++k) {
      const fs::path out = dir / fmt::format("{}_{}", baseline, k);
      if (run_cli(fmt::format("evaluate {} --baseline {} --tsp off --models {} --out {}", common, baseline,
                              (dir / "train" / "models").string(), out.string())) != 0)
        return {false, fmt::format("evaluate {} failed", baseline)};
      csv[k] = slurp(out / "metrics.csv");
    }
    const bool same = !csv[0].empty() && csv[0] == csv[1];
    ok = ok && same;
    detail += fmt::format("{} metrics.csv {} ({} bytes); ", baseline, same ? "identical" : "DIFFERS", csv[0].size());
  }
  return {ok, detail};
}

Verdict encoding_fixtures() {
  const rl::Vector obs = signal_state_example();
  rl::Vector expect = rl::Vector::Zero(env::background_obs_width());
  expect(10 + signal::index_of(Phase::EWThrough)) = 12.0;
  expect(14 + signal::index_of(Phase::NSLeft)) = 22.0;
  const bool signal_ok = obs == expect;
  const auto bus = bus_cell_example();
  bool bus_ok = true;
  for (int k = 0; k < env::kBusCells; ++k) {
    bus_ok = bus_ok && bus.pos[k] == (k == 3 ? 1.0 : 0.0);
    bus_ok = bus_ok && bus.speed[k] == (k == 3 ? 36.0 : 0.0);
  }
  return {signal_ok && bus_ok, fmt::format("elapsed 12/22 pattern {}, pos[3]=1 speed[3]=36 {}",
                                           signal_ok ? "exact" : "MISMATCH", bus_ok ? "exact" : "MISMATCH")};
}

Verdict reward_fixtures() {
  bool ok = true;
  std::string detail;
  for (const auto& c : reward_cases()) {
    ok = ok && c.got == c.expected;
    detail += fmt::format("{}{}", detail.empty() ? "" : ", ", c.got);
    if (c.got != c.expected) detail += fmt::format(" (want {})", c.expected);
  }
  return {ok, detail};
}

}  // namespace

// --fast runs only the criteria that need no training and prints the rest as SKIP.
int main(int argc, char** argv) {
  const bool fast = argc > 1 && std::string(argv[1]) == "--fast";
  const auto t_start = Clock::now();
  std::map<int, Verdict> v;
  const char* names[] = {"",
                         "gradient suite",
                         "tabular oracle",
                         "VDN structure",
                         "masking soundness",
                         "signal safety",
                         "conservation and determinism",
                         "encoding conformance",
                         "reward conformance",
                         "learning trend",
                         "TSP trend",
                         "baseline sanity"};
  auto report = [&](int k) { std::cerr << fmt::format("criterion {} done: {}", k, v[k].pass ? "pass" : "FAIL") << std::endl; };

  v[1] = gradient_suite();
  report(1);
  v[2] = tabular_oracle();
  report(2);
  v[7] = encoding_fixtures();
  report(7);
  v[8] = reward_fixtures();
  report(8);
  const Verdict masking = masking_trials();
  note(masking.detail);
  if (fast) {
    for (int k : {1, 2, 7, 8}) std::cout << fmt::format("{} criterion {:>2} {}: {}", v[k].pass ? "PASS" : "FAIL", k, names[k], v[k].detail) << '\n';
    std::cout << fmt::format("{} criterion  4 {}: {}", masking.pass ? "PASS" : "FAIL", names[4], masking.detail) << '\n';
    std::cout << "SKIP criteria 3, 5, 6, 9, 10, 11 (--fast)" << std::endl;
    return v[1].pass && v[2].pass && v[7].pass && v[8].pass && masking.pass ? 0 : 1;
  }

  const fs::path dir = fs::temp_directory_path() / fmt::format("marlsig_acceptance_{}", ::getpid());
  fs::create_directories(dir);
  std::int64_t steps = 0;
  const bool conserved = conservation_holds(steps);
  const Verdict cli = determinism_via_cli(dir);
  v[6] = {conserved && cli.pass,
          fmt::format("conservation {} over {} steps; {}", conserved ? "held" : "BROKEN", steps, cli.detail)};
  report(6);

  harness::ExperimentConfig cfg = harness::experiment_config_from_json(nlohmann::json::object());
  harness::validate(cfg);
  const int threads = harness::resolve_threads(0);

  // Baselines over 10 replicates.
  harness::EvalOptions eval_opt;
  eval_opt.threads = threads;
  std::map<std::string, std::vector<harness::RunRecord>> runs;
  const harness::Policies none;
  runs["fixed"] = harness::evaluate(cfg, Baseline::Fixed, TspMode::Off, none, eval_opt);
  runs["actuated"] = harness::evaluate(cfg, Baseline::Actuated, TspMode::Off, none, eval_opt);
  {
    const double fixed = harness::mean(harness::values_of(runs["fixed"], "veh_delay", "EB_TH"));
    const double actuated = harness::mean(harness::values_of(runs["actuated"], "veh_delay", "EB_TH"));
    v[11] = {actuated < fixed, fmt::format("EB_TH mean delay actuated {:.2f} s vs fixed {:.2f} s over {} replicates",
                                           actuated, fixed, runs["fixed"].size())};
    report(11);
  }

  // Background training.
  VdnAudit vdn;
  std::int64_t decisions = 0, invalid = 0;
  harness::TrainOptions topt;
  topt.on_batch = [&](const rl::VdnLoss& l) { vdn(l); };
  topt.on_episode = [&](int, const harness::EpisodeResult& r) {
    decisions += r.decisions;
    invalid += r.invalid_decisions;
  };
  topt.progress = [](const std::string& line) {
    if (line.find("0/") != std::string::npos) note(line);
  };
  const auto t_bg = Clock::now();
  const auto bg = harness::train_background(cfg, topt);
  const double bg_secs = seconds_since(t_bg);
  {
    std::vector<double> first, last;
    for (std::size_t k = 0; k < bg.curve.size(); ++k) {
      if (k < 20) first.push_back(bg.curve[k].mean_global_reward);
      if (k + 20 >= bg.curve.size()) last.push_back(bg.curve[k].mean_global_reward);
    }
    const auto test = harness::wilcoxon_rank_sum_greater(last, first);
    v[9] = {bg.curve.size() == 200 && test.p_value < 0.05 && bg_secs < 7200.0,
            fmt::format("{} episodes of {:.0f} s; mean reward first 20 {:.1f}, last 20 {:.1f}; one-sided p = {:.2e}; "
                        "{:.0f} s",
                        bg.curve.size(), cfg.episode_length, harness::mean(first), harness::mean(last), test.p_value,
                        bg_secs)};
    report(9);
  }

  std::array<rl::Mlp, sim::kIntersections> background{bg.agents[0].main, bg.agents[1].main};

  // TSP training on top of the frozen background policies.
  std::map<TspMode, std::array<rl::Mlp, sim::kIntersections>> tsp_nets;
  for (auto [mode, episodes] : {std::pair{TspMode::Coordinated, 200}, std::pair{TspMode::Independent, 100}}) {
    harness::ExperimentConfig c = cfg;
    c.episodes = episodes;
    const auto t = harness::train_tsp(c, mode, background, topt);
    tsp_nets[mode] = {t.agents[0].main, t.agents[1].main};
    note(fmt::format("trained tsp {} for {} episodes", tsp::to_string(mode), t.curve.size()));
  }

  harness::Policies marl;
  marl.background = background;
  runs["marl"] = harness::evaluate(cfg, Baseline::Marl, TspMode::Off, marl, eval_opt);
  std::string tsp_detail;
  bool tsp_lower = true;
  for (TspMode mode : {TspMode::Independent, TspMode::Coordinated}) {
    harness::Policies p = marl;
    p.tsp = tsp_nets[mode];
    auto& on = runs[std::string(tsp::to_string(mode))] = harness::evaluate(cfg, Baseline::Marl, mode, p, eval_opt);
    const auto c = harness::compare_tsp(runs["marl"], on);
    tsp_lower = tsp_lower && c.buses_on > 0 && c.travel_on < c.travel_off;
    tsp_detail += fmt::format(
        "{}: Inter A&B_EB {:.1f} s ({} buses) -> {:.1f} s ({} buses) ({:+.1f}%, p = {:.3f}, 10% target {}), "
        "side-street window delay {:.1f} s -> {:.1f} s ({:+.1f} s); ",
        tsp::to_string(mode), c.travel_off, c.buses_off, c.travel_on, c.buses_on, c.travel_change_pct, c.p_value,
        c.buses_on == 0 ? "n/a, no bus completed" : c.travel_change_pct <= -10.0 ? "met" : "not met",
        c.side_delay_off, c.side_delay_on,
        c.side_delay_on - c.side_delay_off);
    for (const auto& r : on) {
      decisions += r.result.decisions;
      invalid += r.result.invalid_decisions;
    }
  }
  for (const auto& r : runs["marl"]) {
    decisions += r.result.decisions;
    invalid += r.result.invalid_decisions;
  }
  v[10] = {tsp_lower, tsp_detail};
  report(10);

  const bool vdn_direct = vdn_recomputed();
  v[3] = {vdn.batches > 0 && vdn.sum_mismatch == 0 && vdn.grad_mismatch == 0 && vdn_direct,
          fmt::format("{} training batches, {} samples: {} sum mismatches, {} gradient mismatches; direct recompute {}",
                      vdn.batches, vdn.samples, vdn.sum_mismatch, vdn.grad_mismatch, vdn_direct ? "agrees" : "DIFFERS")};
  v[4] = {masking.pass && decisions > 0 && invalid == 0,
          fmt::format("{}; {} episode decisions, {} outside valid_actions", masking.detail, decisions, invalid)};

  {
    bool ok = true;
    std::string detail;
    for (const char* key : {"fixed", "actuated", "marl", "independent", "coordinated"}) {
      std::int64_t violations = 0, changes = 0;
      for (const auto& r : runs[key]) {
        violations += r.safety.violations;
        changes += r.safety.phase_changes;
        if (!r.safety.ok()) note(fmt::format("{} seed {}: {}", key, r.seed, r.safety.messages.front()));
      }
      ok = ok && runs[key].size() >= 10 && violations == 0 && changes > 0;
      detail += fmt::format("{} {} episodes, {} phase changes, {} violations; ", key, runs[key].size(), changes,
                            violations);
    }
    v[5] = {ok, detail};
  }

  std::error_code ec;
  fs::remove_all(dir, ec);

  int failed = 0;
  for (int k = 1; k <= 11; ++k) {
    std::string detail = v[k].detail;
    while (!detail.empty() && (detail.back() == ' ' || detail.back() == ';')) detail.pop_back();
    std::cout << fmt::format("{} criterion {:>2} {}: {}", v[k].pass ? "PASS" : "FAIL", k, names[k], detail) << '\n';
    failed += v[k].pass ? 0 : 1;
  }
  std::cout << fmt::format("{} of 11 criteria passed in {:.0f} s", 11 - failed, seconds_since(t_start)) << std::endl;
  return failed == 0 ? 0 : 1;
}
