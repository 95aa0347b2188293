#include "marlsig/harness/evaluation.hpp"

#include <atomic>
#include <filesystem>
#include <thread>

#include <fmt/format.h>

#include "marlsig/harness/stats.hpp"

namespace marlsig::harness {

namespace fs = std::filesystem;

std::string model_role(bool tsp, tsp::TspMode mode, int intersection) {
  const std::string name(sim::intersection_name(intersection));
  if (!tsp) return "background_" + name;
  return fmt::format("tsp_{}_{}", tsp::to_string(mode), name);
}

namespace {

std::string configured_path(const ModelPaths& m, bool tsp, tsp::TspMode mode, int i) {
  if (!tsp) return i == 0 ? m.background_a : m.background_b;
  if (mode == tsp::TspMode::Independent) return i == 0 ? m.tsp_independent_a : m.tsp_independent_b;
  return i == 0 ? m.tsp_coordinated_a : m.tsp_coordinated_b;
}

std::array<rl::Mlp, sim::kIntersections> load_pair(const ExperimentConfig& cfg, bool tsp, tsp::TspMode mode,
                                                   const std::string& dir, std::vector<std::string>& warnings) {
  std::array<rl::Mlp, sim::kIntersections> out;
  const int width = tsp ? env::tsp_obs_width(cfg.encoding) : env::background_obs_width(cfg.encoding);
  const std::string expected_hash = hash_string(sim::config_hash(cfg.scenario));
  for (int i = 0; i < sim::kIntersections; ++i) {
    const std::string role = model_role(tsp, mode, i);
    std::string path = configured_path(cfg.models, tsp, mode, i);
    if (path.empty()) path = (fs::path(dir) / (role + ".json")).string();
    if (!fs::exists(path)) throw sim::ConfigError("models." + role, "model file not found: " + path);
    rl::ModelFile file;
    try {
      file = rl::load_model(path);
    } catch (const rl::ModelFormatError& e) {
      throw sim::ConfigError("models." + role, e.what());
    }
    if (file.mlp.input_width() != width || file.mlp.output_width() != rl::kNumActions)
      throw sim::ConfigError("models." + role, fmt::format("expected input width {} and 4 outputs, got {} and {}", width,
                                                           file.mlp.input_width(), file.mlp.output_width()));
    if (file.metadata.config_hash != expected_hash)
      warnings.push_back(fmt::format("{}: config hash {} differs from scenario hash {}", role,
                                     file.metadata.config_hash, expected_hash));
    out[i] = std::move(file.mlp);
  }
  return out;
}

}  // namespace

Policies load_policies(const ExperimentConfig& cfg, Baseline baseline, tsp::TspMode mode, const std::string& dir) {
  Policies p;
  if (baseline != Baseline::Marl) return p;
  p.background = load_pair(cfg, false, mode, dir, p.warnings);
  if (mode != tsp::TspMode::Off) p.tsp = load_pair(cfg, true, mode, dir, p.warnings);
  return p;
}

std::string run_label(Baseline baseline, tsp::TspMode mode) {
  return fmt::format("{}-tsp_{}", to_string(baseline), tsp::to_string(mode));
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::vector<RunRecord> evaluate(const ExperimentConfig& cfg, Baseline baseline, tsp::TspMode mode,
                                const Policies& policies, const EvalOptions& opt) {
  if (baseline == Baseline::Marl && !policies.background)
    throw sim::ConfigError("models", "the marl baseline needs background models");
  if (mode != tsp::TspMode::Off && !policies.tsp) throw sim::ConfigError("models", "TSP evaluation needs TSP models");

  const std::string label = run_label(baseline, mode);
  const std::size_t n = cfg.seeds.size();
  std::vector<RunRecord> runs(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      RunRecord& rec = runs[k];
      rec.seed = cfg.seeds[k];
      rec.label = label;
      rec.run_id = fmt::format("{}-r{:02d}", label, k + 1);
      EpisodeSpec spec;
      spec.scenario = cfg.scenario;
      spec.scenario.seed = rec.seed;
      spec.length = cfg.eval_length;
      spec.warmup = cfg.warmup;
      spec.baseline = baseline;
      spec.tsp_mode = mode;
      spec.saturation_flow = cfg.saturation_flow;
      spec.reward = cfg.reward;
      spec.encoding = cfg.encoding;
      for (int i = 0; i < sim::kIntersections; ++i) {
        if (policies.background) spec.background[i] = &(*policies.background)[i];
        if (policies.tsp) spec.tsp[i] = &(*policies.tsp)[i];
      }
      if (k == 0) spec.trace = opt.trace;
      SafetyAudit audit(1.0);
      if (opt.audit_safety) spec.on_tick = [&audit](const sim::World& w) { audit.on_tick(w); };
      rec.result = run_episode(spec);
      rec.safety = audit.report();
    }
  };
  const int threads = std::max(1, std::min<int>(opt.threads, static_cast<int>(n)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return runs;
}

std::vector<double> values_of(const std::vector<RunRecord>& runs, const std::string& kind, const std::string& section) {
  std::vector<double> out;
  for (const auto& r : runs)
    for (const auto& row : r.result.probes)
      if (row.kind == kind && row.section == section) out.push_back(row.value);
  return out;
}

TspComparison compare_tsp(const std::vector<RunRecord>& off, const std::vector<RunRecord>& on) {
  TspComparison c;
  const auto t_off = values_of(off, "bus_travel", "Inter A&B_EB");
  const auto t_on = values_of(on, "bus_travel", "Inter A&B_EB");
  c.buses_off = static_cast<int>(t_off.size());
  c.buses_on = static_cast<int>(t_on.size());
  c.travel_off = mean(t_off);
  c.travel_on = mean(t_on);
  c.travel_change_pct = c.travel_off > 0.0 ? 100.0 * (c.travel_on - c.travel_off) / c.travel_off : 0.0;
  auto side = [](const std::vector<RunRecord>& runs, int& count) {
    std::vector<double> v;
    for (const auto& r : runs)
      for (const auto& row : r.result.probes)
        if (row.kind == "side_delay") v.push_back(row.value);
    count = static_cast<int>(v.size());
    return mean(v);
  };
  c.side_delay_off = side(off, c.side_rows_off);
  c.side_delay_on = side(on, c.side_rows_on);
  c.p_value = wilcoxon_rank_sum_greater(t_off, t_on).p_value;
  return c;
}

}  // namespace marlsig::harness
