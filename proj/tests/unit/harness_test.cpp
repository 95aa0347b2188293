#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "common/fixtures.hpp"
#include "marlsig/harness/config.hpp"
#include "marlsig/harness/episode.hpp"
#include "marlsig/harness/evaluation.hpp"
#include "marlsig/harness/outputs.hpp"
#include "marlsig/harness/plots.hpp"
#include "marlsig/harness/safety.hpp"
#include "marlsig/harness/stats.hpp"
#include "marlsig/harness/training.hpp"

using namespace marlsig;
using namespace marlsig::fixtures;
using namespace marlsig::harness;
using nlohmann::json;

TEST(Stats, QuantileInterpolates) {
  const std::vector<double> x{7, 1, 3, 5};
  EXPECT_DOUBLE_EQ(quantile(x, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile(x, 1.0), 7.0);
  EXPECT_DOUBLE_EQ(quantile(x, 0.5), 4.0);
  EXPECT_DOUBLE_EQ(quantile(x, 0.25), 2.5);
  const Summary s = summarize(x);
  EXPECT_EQ(s.count, 4);
  EXPECT_DOUBLE_EQ(s.mean, 4.0);
  EXPECT_DOUBLE_EQ(s.q3, 5.5);
}

namespace {

// Pairwise U with ties as halves, tie-corrected normal approximation, continuity 0.5.
double rank_sum_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  double u = 0;
  for (double a : x)
    for (double b : y) u += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
  std::vector<double> all = x;
  all.insert(all.end(), y.begin(), y.end());
  std::sort(all.begin(), all.end());
  double ties = 0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j] == all[i]) ++j;
    const double t = static_cast<double>(j - i);
    ties += t * t * t - t;
    i = j;
  }
  const double n1 = static_cast<double>(x.size()), n2 = static_cast<double>(y.size()), n = n1 + n2;
  const double var = n1 * n2 / 12.0 * ((n + 1) - ties / (n * (n - 1)));
  const double z = (u - n1 * n2 / 2.0 - 0.5) / std::sqrt(var);
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

}  // namespace

TEST(Stats, RankSumMatchesOracle) {
  const auto r = wilcoxon_rank_sum_greater({4, 5, 6}, {1, 2, 3});
  EXPECT_DOUBLE_EQ(r.u, 9.0);
  EXPECT_NEAR(r.p_value, 0.0404, 1e-4);

  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> d(0, 6);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(3 + trial % 17), y(4 + trial % 13);
    for (auto& v : x) v = d(rng) + (trial % 3 == 0 ? 1 : 0);
    for (auto& v : y) v = d(rng);
    const auto got = wilcoxon_rank_sum_greater(x, y);
    EXPECT_NEAR(got.p_value, rank_sum_oracle(x, y), 1e-12) << trial;
  }
}

namespace {

void expect_config_error(const json& j, const std::string& field) {
  try {
    validate(experiment_config_from_json(j));
    ADD_FAILURE() << "accepted " << j.dump();
  } catch (const sim::ConfigError& e) {
    EXPECT_EQ(e.field(), field) << e.what();
  }
}

}  // namespace

TEST(Config, RejectsWithFieldPath) {
  expect_config_error({{"bogus", 1}}, "bogus");
  expect_config_error({{"rl", {{"hiden", json::array({8})}}}}, "rl.hiden");
  expect_config_error({{"scenario", {{"demand", {{"foo", 1}}}}}}, "scenario.demand.foo");
  expect_config_error({{"replicates", 3}, {"seeds", {1, 2}}}, "replicates");
  expect_config_error({{"baseline", "fixed"}, {"tsp", "coordinated"}}, "tsp");
  expect_config_error({{"eval_length", 600}, {"warmup", 600}}, "warmup");
  expect_config_error({{"episodes", "many"}}, "episodes");
}

TEST(Config, DefaultsRoundTripAndHashIgnoresSeed) {
  const ExperimentConfig c = experiment_config_from_json(json::object());
  EXPECT_NO_THROW(validate(c));
  EXPECT_EQ(c.replicates(), 10);
  EXPECT_NEAR(c.reward.offset.theta_base, 27.27, 0.01);
  const ExperimentConfig back = experiment_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  const ExperimentConfig r = experiment_config_from_json({{"replicates", 4}});
  EXPECT_EQ(r.seeds, (std::vector<std::uint64_t>{1, 2, 3, 4}));
}

TEST(Outputs, MetricsCsvRoundTrip) {
  const std::vector<MetricRow> rows{{"marl-tsp_off-1", 1, 17, "veh_delay", "A_EB_TH", 12.34567, 950.0},
                                    {"marl-tsp_off-2", 2, 3, "bus_travel", "Inter A&B_EB", 80.0, 1200.5}};
  std::stringstream ss;
  write_metrics_csv(ss, rows);
  const auto back = read_metrics_csv(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].run_id, "marl-tsp_off-1");
  EXPECT_EQ(back[0].entity_id, 17u);
  EXPECT_DOUBLE_EQ(back[0].value, 12.3457);
  EXPECT_EQ(back[1].section, "Inter A&B_EB");
  EXPECT_DOUBLE_EQ(back[1].t, 1200.5);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "run_id,seed,entity_id,kind,section,value_s,t");

  std::istringstream bad("run_id,seed,entity_id,kind,section,value_s,t\nx,1,2,veh_delay,A_EB_TH,abc,0\n");
  EXPECT_THROW(read_metrics_csv(bad), std::runtime_error);
}

TEST(Outputs, LabelsAndSummary) {
  EXPECT_EQ(label_of("marl-tsp_coordinated-7"), "marl-tsp_coordinated");
  EXPECT_EQ(run_label(Baseline::Actuated, tsp::TspMode::Off), "actuated-tsp_off");
  const std::vector<MetricRow> rows{{"fixed-tsp_off-1", 1, 1, "veh_delay", "A_EB_TH", 1.0, 0},
                                    {"fixed-tsp_off-1", 1, 2, "veh_delay", "A_EB_TH", 3.0, 0},
                                    {"fixed-tsp_off-2", 2, 3, "veh_delay", "A_EB_TH", 5.0, 0}};
  std::ostringstream os;
  write_summary_csv(os, rows);
  const std::string s = os.str();
  EXPECT_NE(s.find("fixed-tsp_off,all,veh_delay,A_EB_TH,3,3.0000,1.0000,2.0000,3.0000,4.0000,5.0000"), std::string::npos)
      << s;
  EXPECT_NE(s.find("fixed-tsp_off,fixed-tsp_off-1,veh_delay,A_EB_TH,2,2.0000"), std::string::npos) << s;
}

TEST(Plots, DeterministicAndMarksMean) {
  const std::vector<BoxGroup> groups{{"a", {1, 2, 3, 10}}, {"b", {4, 4, 5}}};
  const std::string svg = svg_box_plot("t", "y", groups);
  EXPECT_EQ(svg, svg_box_plot("t", "y", groups));
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  std::size_t means = 0;
  for (auto p = svg.find("class=\"mean\""); p != std::string::npos; p = svg.find("class=\"mean\"", p + 1)) ++means;
  EXPECT_EQ(means, 2u);

  const auto empty = emit_plots({});
  ASSERT_TRUE(empty.count("vehicle_delay_box.svg"));
  EXPECT_NE(empty.at("vehicle_delay_box.svg").find("</svg>"), std::string::npos);
  EXPECT_TRUE(empty.count("bus_travel_bars.svg"));
}

TEST(EffectiveMask, ClearanceListsTargetOnly) {
  signal::SignalControllerState s({}, 0.1, Phase::EWThrough);
  double t = 0;
  for (int k = 0; k < 100; ++k) s.tick(t += 0.1);
  s.apply_action(Phase::NSLeft, t);
  const auto m = effective_mask(s);
  for (auto p : signal::kAllPhases) EXPECT_EQ(m[signal::index_of(p)], p == Phase::NSLeft);
}

TEST(Safety, FlagsIllegalJumpAndOverlongGreen) {
  World w(quiet_network());
  SafetyAudit audit;
  for (int k = 0; k < 100; ++k) {
    audit.on_tick(w);
    w.advance();
  }
  EXPECT_TRUE(audit.report().ok());
  w.signal(sim::kIntersectionA) = fresh_signal(w, Phase::NSLeft);  // skips yellow and all-red
  audit.on_tick(w);
  EXPECT_EQ(audit.report().violations, 1);

  World idle(quiet_network());
  SafetyAudit hold;
  for (int k = 0; k < 700; ++k) {
    hold.on_tick(idle);
    idle.advance();
  }
  hold.finish(idle);
  EXPECT_EQ(hold.report().violations, 2);  // both intersections held EW through for 70 s
}

namespace {

EpisodeSpec short_spec(Baseline b) {
  EpisodeSpec spec;
  spec.scenario.seed = 3;
  spec.length = 300.0;
  spec.warmup = 60.0;
  spec.baseline = b;
  return spec;
}

void run_audited(EpisodeSpec spec, const char* name) {
  SafetyAudit audit;
  spec.on_tick = [&](const sim::World& w) { audit.on_tick(w); };
  const EpisodeResult r = run_episode(spec);
  EXPECT_TRUE(audit.report().ok()) << name << ": " << (audit.report().messages.empty() ? "" : audit.report().messages[0]);
  EXPECT_GT(audit.report().phase_changes, 0) << name;
  EXPECT_EQ(r.invalid_decisions, 0) << name;
  EXPECT_FALSE(r.probes.empty()) << name;
  for (const auto& p : r.probes) EXPECT_GE(p.t, spec.warmup) << name << " " << p.kind;
}

}  // namespace

TEST(Episode, BaselinesRunSafely) {
  run_audited(short_spec(Baseline::Fixed), "fixed");
  run_audited(short_spec(Baseline::Actuated), "actuated");

  std::mt19937_64 rng(1);
  const rl::Mlp bg = rl::Mlp::he_initialized({env::background_obs_width(), 8, rl::kNumActions}, rng);
  const rl::Mlp ts = rl::Mlp::he_initialized({env::tsp_obs_width(), 8, rl::kNumActions}, rng);
  EpisodeSpec marl = short_spec(Baseline::Marl);
  marl.background = {&bg, &bg};
  run_audited(marl, "marl");
  for (auto mode : {tsp::TspMode::Independent, tsp::TspMode::Coordinated}) {
    EpisodeSpec s = marl;
    s.tsp_mode = mode;
    s.tsp = {&ts, &ts};
    run_audited(s, tsp::to_string(mode).data());
  }
}

TEST(Episode, SameSeedSameProbes) {
  const auto a = run_episode(short_spec(Baseline::Actuated));
  const auto b = run_episode(short_spec(Baseline::Actuated));
  ASSERT_EQ(a.probes.size(), b.probes.size());
  for (std::size_t k = 0; k < a.probes.size(); ++k) {
    EXPECT_EQ(a.probes[k].value, b.probes[k].value);
    EXPECT_EQ(a.probes[k].section, b.probes[k].section);
  }
}

TEST(Training, CurveHasOneRowPerEpisode) {
  ExperimentConfig cfg = experiment_config_from_json(json::object());
  cfg.rl.hidden = {8};
  cfg.rl.updates_per_episode = 4;
  cfg.rl.batch_size = 8;
  cfg.episode_length = 120.0;
  cfg.episodes = 0;
  EXPECT_TRUE(train_background(cfg).curve.empty());
  cfg.episodes = 3;
  int calls = 0;
  TrainOptions opt;
  opt.on_episode = [&](int, const EpisodeResult&) { ++calls; };
  const auto t = train_background(cfg, opt);
  ASSERT_EQ(t.curve.size(), 3u);
  EXPECT_EQ(calls, 3);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(t.curve[k].episode, k + 1);
  EXPECT_GT(t.curve[0].epsilon, t.curve[2].epsilon);
  EXPECT_TRUE(t.agents[0].main.all_finite());
}
