#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "marlsig/harness/config.hpp"
#include "marlsig/harness/evaluation.hpp"
#include "marlsig/harness/outputs.hpp"
#include "marlsig/harness/plots.hpp"
#include "marlsig/harness/training.hpp"
#include "marlsig/rl/model_io.hpp"
#include "marlsig/sim/world.hpp"

namespace fs = std::filesystem;
using namespace marlsig;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string models;
  std::optional<int> episodes;
  std::optional<int> threads;
  bool debug_trace = false;
  bool quiet = false;
};

harness::ExperimentConfig load(const Common& c) {
  harness::ExperimentConfig cfg = c.config.empty() ? harness::experiment_config_from_json(nlohmann::json::object())
                                                  : harness::load_experiment_config(c.config);
  if (c.episodes) {
    if (*c.episodes < 0) throw sim::ConfigError("episodes", "must be >= 0");
    cfg.episodes = *c.episodes;
  }
  if (c.seed) {
    // Training uses the scenario seed; evaluation shifts the whole seed list to start at N.
    cfg.scenario.seed = *c.seed;
    for (std::size_t k = 0; k < cfg.seeds.size(); ++k) cfg.seeds[k] = *c.seed + k;
  }
  if (c.threads) cfg.threads = *c.threads;
  harness::validate(cfg);
  return cfg;
}

std::string models_dir(const Common& c) { return c.models.empty() ? (fs::path(c.out) / "models").string() : c.models; }

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_file(path, j.dump(2) + "\n"); }

std::unique_ptr<std::ofstream> open_trace(const Common& c, const std::string& name) {
  if (!c.debug_trace) return nullptr;
  fs::create_directories(c.out);
  auto os = std::make_unique<std::ofstream>(fs::path(c.out) / name, std::ios::binary);
  if (!*os) throw std::runtime_error("cannot write trace " + name);
  return os;
}

harness::TrainOptions train_options(const Common& c, std::ostream* trace) {
  harness::TrainOptions opt;
  if (!c.quiet) opt.progress = [](const std::string& line) { std::cerr << line << '\n'; };
  opt.trace = trace;
  return opt;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string reward_curve_svg(const std::vector<harness::BackgroundCurveRow>& rows) {
  harness::Series s{"mean global reward", {}, {}};
  for (const auto& r : rows) {
    s.x.push_back(r.episode);
    s.y.push_back(r.mean_global_reward);
  }
  return harness::svg_line_plot("Background training", "episode", "mean global reward", {s});
}

std::string bus_curve_svg(const std::vector<harness::TspCurveRow>& rows, const std::string& title) {
  std::vector<harness::Series> series;
  for (int i = 0; i < sim::kIntersections; ++i) {
    harness::Series s{fmt::format("Inter {}", sim::intersection_name(i)), {}, {}};
    for (const auto& r : rows) {
      s.x.push_back(r.episode);
      s.y.push_back(r.mean_bus_delay[i]);
    }
    series.push_back(std::move(s));
  }
  return harness::svg_line_plot(title, "episode", "mean bus delay (s)", series);
}

void save_pair(const std::string& dir, const std::array<rl::AgentNetPair, sim::kIntersections>& agents, bool tsp,
               tsp::TspMode mode, const harness::ExperimentConfig& cfg) {
  fs::create_directories(dir);
  for (int i = 0; i < sim::kIntersections; ++i) {
    const std::string role = harness::model_role(tsp, mode, i);
    rl::ModelMetadata meta{role, cfg.episodes, harness::hash_string(sim::config_hash(cfg.scenario))};
    rl::save_model((fs::path(dir) / (role + ".json")).string(), agents[i].main, meta);
  }
}

int cmd_validate(const Common& c) {
  const auto cfg = load(c);
  std::cout << fmt::format("ok: config hash {}, seeds {}, theta_base {:.2f} s\n",
                           harness::hash_string(sim::config_hash(cfg.scenario)), fmt::join(cfg.seeds, " "),
                           cfg.reward.offset.theta_base);
  return 0;
}

int cmd_train_background(const Common& c, const std::string& command) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = load(c);
  auto trace = open_trace(c, "trace_background.csv");
  const auto run = harness::train_background(cfg, train_options(c, trace.get()));
  save_pair(models_dir(c), run.agents, false, tsp::TspMode::Off, cfg);
  std::ostringstream csv;
  harness::write_background_curve(csv, run.curve);
  write_file(fs::path(c.out) / "learning_curve_background.csv", csv.str());
  write_file(fs::path(c.out) / "learning_curve_background.svg", reward_curve_svg(run.curve));
  harness::RunMetadata meta{command, {cfg.scenario.seed}, harness::hash_string(sim::config_hash(cfg.scenario)),
                            seconds_since(t0), {}, {{"episodes", cfg.episodes}, {"config", harness::to_json(cfg)}}};
  write_json(fs::path(c.out) / "run_metadata_train_background.json", harness::to_json(meta));
  return 0;
}

int cmd_train_tsp(const Common& c, const std::string& mode_name, const std::string& command) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto mode = tsp::parse_mode(mode_name);
  if (!mode || *mode == tsp::TspMode::Off) throw sim::ConfigError("mode", "expected independent or coordinated");
  const auto cfg = load(c);
  auto policies = harness::load_policies(cfg, harness::Baseline::Marl, tsp::TspMode::Off, models_dir(c));
  for (const auto& w : policies.warnings) std::cerr << "warning: " << w << '\n';
  auto trace = open_trace(c, fmt::format("trace_tsp_{}.csv", mode_name));
  const auto run = harness::train_tsp(cfg, *mode, *policies.background, train_options(c, trace.get()));
  save_pair(models_dir(c), run.agents, true, *mode, cfg);
  std::ostringstream csv;
  harness::write_tsp_curve(csv, run.curve);
  write_file(fs::path(c.out) / fmt::format("learning_curve_tsp_{}.csv", mode_name), csv.str());
  write_file(fs::path(c.out) / fmt::format("learning_curve_tsp_{}.svg", mode_name),
             bus_curve_svg(run.curve, fmt::format("TSP {} training", mode_name)));
  harness::RunMetadata meta{command,
                            {cfg.scenario.seed},
                            harness::hash_string(sim::config_hash(cfg.scenario)),
                            seconds_since(t0),
                            policies.warnings,
                            {{"episodes", cfg.episodes}, {"mode", mode_name}, {"config", harness::to_json(cfg)}}};
  write_json(fs::path(c.out) / fmt::format("run_metadata_train_tsp_{}.json", mode_name), harness::to_json(meta));
  return 0;
}

void write_plots(const fs::path& dir, const std::vector<harness::MetricRow>& rows) {
  for (const auto& [name, svg] : harness::emit_plots(rows)) write_file(dir / name, svg);
}

nlohmann::json safety_json(const std::vector<harness::RunRecord>& runs) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : runs)
    j.push_back({{"run_id", r.run_id},
                 {"ticks", r.safety.ticks_checked},
                 {"phase_changes", r.safety.phase_changes},
                 {"violations", r.safety.violations},
                 {"invalid_decisions", r.result.invalid_decisions}});
  return j;
}

int cmd_evaluate(const Common& c, const std::string& baseline_name, const std::string& mode_name,
                 const std::string& command) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto baseline = harness::parse_baseline(baseline_name);
  if (!baseline) throw sim::ConfigError("baseline", "expected fixed, actuated or marl");
  const auto mode = tsp::parse_mode(mode_name);
  if (!mode) throw sim::ConfigError("tsp", "expected off, independent or coordinated");
  auto cfg = load(c);
  cfg.baseline = *baseline;
  cfg.tsp_mode = *mode;
  harness::validate(cfg);

  const auto policies = harness::load_policies(cfg, *baseline, *mode, models_dir(c));
  for (const auto& w : policies.warnings) std::cerr << "warning: " << w << '\n';
  harness::EvalOptions opt;
  opt.threads = harness::resolve_threads(cfg.threads);
  auto trace = open_trace(c, "trace_evaluate.csv");
  opt.trace = trace.get();

  std::vector<harness::RunRecord> all;
  std::vector<harness::RunRecord> off;
  if (*mode != tsp::TspMode::Off) {
    off = harness::evaluate(cfg, *baseline, tsp::TspMode::Off, policies, {opt.threads, true, nullptr});
    all = off;
  }
  const auto runs = harness::evaluate(cfg, *baseline, *mode, policies, opt);
  all.insert(all.end(), runs.begin(), runs.end());

  const fs::path out(c.out);
  const auto rows = harness::metric_rows(all);
  std::ostringstream metrics, summary;
  harness::write_metrics_csv(metrics, rows);
  harness::write_summary_csv(summary, rows);
  write_file(out / "metrics.csv", metrics.str());
  write_file(out / "summary.csv", summary.str());
  write_plots(out, rows);

  nlohmann::json extra = {{"baseline", baseline_name},
                          {"tsp", mode_name},
                          {"threads", opt.threads},
                          {"eval_length_s", cfg.eval_length},
                          {"warmup_s", cfg.warmup},
                          {"safety", safety_json(all)},
                          {"config", harness::to_json(cfg)}};
  if (*mode != tsp::TspMode::Off) {
    const auto cmp = harness::compare_tsp(off, runs);
    write_json(out / "comparison.json", harness::comparison_json(cmp));
    std::ostringstream events;
    events << "run_id,t,bus_id,intersection,event\n";
    for (const auto& r : runs) {
      std::ostringstream one;
      tsp::write_event_log(one, r.result.tsp_log);
      std::istringstream lines(one.str());
      std::string line;
      std::getline(lines, line);  // per-run header
      while (std::getline(lines, line)) events << r.run_id << ',' << line << '\n';
    }
    write_file(out / "tsp_events.csv", events.str());
    std::cout << fmt::format("Inter A&B_EB travel: off {:.1f} s, on {:.1f} s ({:+.1f}%), p = {:.4g}\n", cmp.travel_off,
                             cmp.travel_on, cmp.travel_change_pct, cmp.p_value);
  }
  std::uint64_t violations = 0;
  for (const auto& r : all) violations += r.safety.violations;
  harness::RunMetadata meta{command, cfg.seeds, harness::hash_string(sim::config_hash(cfg.scenario)),
                            seconds_since(t0), policies.warnings, extra};
  write_json(out / "run_metadata.json", harness::to_json(meta));
  std::cout << fmt::format("{} runs, {} metric rows, {} safety violations -> {}\n", all.size(), rows.size(), violations,
                           out.string());
  return 0;
}

int cmd_plot(const Common& c, const std::string& input) {
  const fs::path out(c.out);
  const fs::path metrics = input.empty() ? out / "metrics.csv" : fs::path(input);
  int written = 0;
  if (fs::exists(metrics)) {
    std::ifstream is(metrics);
    write_plots(out, harness::read_metrics_csv(is));
    ++written;
  } else if (!input.empty()) {
    throw sim::ConfigError("input", "metrics file not found: " + metrics.string());
  }
  const fs::path bg = out / "learning_curve_background.csv";
  if (fs::exists(bg)) {
    std::ifstream is(bg);
    write_file(out / "learning_curve_background.svg", reward_curve_svg(harness::read_background_curve(is)));
    ++written;
  }
  for (const char* m : {"independent", "coordinated"}) {
    const fs::path p = out / fmt::format("learning_curve_tsp_{}.csv", m);
    if (!fs::exists(p)) continue;
    std::ifstream is(p);
    write_file(out / fmt::format("learning_curve_tsp_{}.svg", m),
               bus_curve_svg(harness::read_tsp_curve(is), fmt::format("TSP {} training", m)));
    ++written;
  }
  if (written == 0) throw sim::ConfigError("out", "nothing to plot in " + out.string());
  return 0;
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "experiment JSON");
  app->add_option("--seed", c.seed, "override the config seed");
  app->add_option("--out", c.out, "output directory")->capture_default_str();
  app->add_option("--models", c.models, "model directory (default <out>/models)");
  app->add_option("--episodes", c.episodes, "override the episode count");
  app->add_option("--threads", c.threads, "evaluation workers (0 = all cores)");
  app->add_flag("--debug-trace", c.debug_trace, "write a per-epoch trace CSV");
  app->add_flag("--quiet", c.quiet, "no progress output");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Corridor signal control simulator and MARL harness"};
  app.require_subcommand(1);
  Common c;
  std::string mode = "coordinated", baseline = "marl", tsp_mode = "off", plot_input;

  auto* validate_cmd = app.add_subcommand("validate-config", "check an experiment config");
  auto* bg = app.add_subcommand("train-background", "train the background VDN agents");
  auto* ts = app.add_subcommand("train-tsp", "train TSP agents on top of background models");
  ts->add_option("--mode", mode, "independent|coordinated")->capture_default_str();
  auto* ev = app.add_subcommand("evaluate", "greedy replicate evaluation");
  ev->add_option("--baseline", baseline, "fixed|actuated|marl")->capture_default_str();
  ev->add_option("--tsp", tsp_mode, "off|independent|coordinated")->capture_default_str();
  auto* pl = app.add_subcommand("plot", "render SVGs from CSV outputs");
  pl->add_option("--input", plot_input, "metrics CSV (default <out>/metrics.csv)");
  for (auto* sub : {validate_cmd, bg, ts, ev, pl}) add_common(sub, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  std::string command;
  for (int k = 1; k < argc; ++k) command += (k > 1 ? " " : "") + std::string(argv[k]);

  try {
    if (*validate_cmd) return cmd_validate(c);
    if (*bg) return cmd_train_background(c, command);
    if (*ts) return cmd_train_tsp(c, mode, command);
    if (*ev) return cmd_evaluate(c, baseline, tsp_mode, command);
    if (*pl) return cmd_plot(c, plot_input);
  } catch (const sim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const rl::ModelFormatError& e) {
    std::cerr << "model error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
