#include "marlsig/harness/outputs.hpp"

#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <fmt/format.h>

#include "marlsig/harness/stats.hpp"

namespace marlsig::harness {

namespace {

constexpr const char* kMetricsHeader = "run_id,seed,entity_id,kind,section,value_s,t";

double to_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(fmt::format("line {}: not a number: '{}'", line, s));
  }
}

std::uint64_t to_u64(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(fmt::format("line {}: not an integer: '{}'", line, s));
  }
}

template <typename F>
void for_each_row(std::istream& is, std::size_t columns, F&& f) {
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (n == 1 || line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != columns)
      throw std::runtime_error(fmt::format("line {}: expected {} columns, got {}", n, columns, cells.size()));
    f(cells, n);
  }
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string label_of(const std::string& run_id) {
  const auto pos = run_id.rfind('-');
  return pos == std::string::npos ? run_id : run_id.substr(0, pos);
}

std::vector<MetricRow> metric_rows(const std::vector<RunRecord>& runs) {
  std::vector<MetricRow> rows;
  for (const auto& r : runs)
    for (const auto& p : r.result.probes) rows.push_back({r.run_id, r.seed, p.entity_id, p.kind, p.section, p.value, p.t});
  return rows;
}

void write_metrics_csv(std::ostream& os, const std::vector<MetricRow>& rows) {
  os << kMetricsHeader << '\n';
  for (const auto& r : rows)
    os << fmt::format("{},{},{},{},{},{:.4f},{:.1f}\n", r.run_id, r.seed, r.entity_id, r.kind, r.section, r.value, r.t);
}

std::vector<MetricRow> read_metrics_csv(std::istream& is) {
  std::vector<MetricRow> rows;
  for_each_row(is, 7, [&](const std::vector<std::string>& c, std::size_t n) {
    rows.push_back({c[0], to_u64(c[1], n), to_u64(c[2], n), c[3], c[4], to_double(c[5], n), to_double(c[6], n)});
  });
  return rows;
}

void write_summary_csv(std::ostream& os, const std::vector<MetricRow>& rows) {
  using Key = std::tuple<std::string, std::string, std::string, std::string>;  // label, scope, kind, section
  std::map<Key, std::vector<double>> groups;
  for (const auto& r : rows) {
    const std::string label = label_of(r.run_id);
    groups[{label, "all", r.kind, r.section}].push_back(r.value);
    groups[{label, r.run_id, r.kind, r.section}].push_back(r.value);
  }
  os << "label,scope,kind,section,count,mean,min,q1,median,q3,max\n";
  for (const auto& [key, values] : groups) {
    const Summary s = summarize(values);
    os << fmt::format("{},{},{},{},{},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f}\n", std::get<0>(key), std::get<1>(key),
                      std::get<2>(key), std::get<3>(key), s.count, s.mean, s.min, s.q1, s.median, s.q3, s.max);
  }
}

void write_background_curve(std::ostream& os, const std::vector<BackgroundCurveRow>& rows) {
  os << "episode,epsilon,mean_global_reward,mean_loss,transitions\n";
  for (const auto& r : rows)
    os << fmt::format("{},{:.6f},{:.6f},{:.6g},{}\n", r.episode, r.epsilon, r.mean_global_reward, r.mean_loss,
                      r.transitions);
}

std::vector<BackgroundCurveRow> read_background_curve(std::istream& is) {
  std::vector<BackgroundCurveRow> rows;
  for_each_row(is, 5, [&](const std::vector<std::string>& c, std::size_t n) {
    rows.push_back({static_cast<int>(to_u64(c[0], n)), to_double(c[1], n), to_double(c[2], n), to_double(c[3], n),
                    static_cast<int>(to_u64(c[4], n))});
  });
  return rows;
}

void write_tsp_curve(std::ostream& os, const std::vector<TspCurveRow>& rows) {
  os << "episode,epsilon,bus_delay_A,bus_delay_B,buses_A,buses_B,mean_loss,transitions\n";
  for (const auto& r : rows)
    os << fmt::format("{},{:.6f},{:.4f},{:.4f},{},{},{:.6g},{}\n", r.episode, r.epsilon, r.mean_bus_delay[0],
                      r.mean_bus_delay[1], r.buses[0], r.buses[1], r.mean_loss, r.transitions);
}

std::vector<TspCurveRow> read_tsp_curve(std::istream& is) {
  std::vector<TspCurveRow> rows;
  for_each_row(is, 8, [&](const std::vector<std::string>& c, std::size_t n) {
    TspCurveRow r;
    r.episode = static_cast<int>(to_u64(c[0], n));
    r.epsilon = to_double(c[1], n);
    r.mean_bus_delay = {to_double(c[2], n), to_double(c[3], n)};
    r.buses = {static_cast<int>(to_u64(c[4], n)), static_cast<int>(to_u64(c[5], n))};
    r.mean_loss = to_double(c[6], n);
    r.transitions = static_cast<int>(to_u64(c[7], n));
    rows.push_back(r);
  });
  return rows;
}

nlohmann::json comparison_json(const TspComparison& c) {
  return {{"inter_ab_eb_travel_off_s", c.travel_off},
          {"inter_ab_eb_travel_on_s", c.travel_on},
          {"inter_ab_eb_change_pct", c.travel_change_pct},
          {"buses_off", c.buses_off},
          {"buses_on", c.buses_on},
          {"side_delay_off_s", c.side_delay_off},
          {"side_delay_on_s", c.side_delay_on},
          {"side_delay_delta_s", c.side_delay_on - c.side_delay_off},
          {"side_rows_off", c.side_rows_off},
          {"side_rows_on", c.side_rows_on},
          {"p_value_off_greater", c.p_value}};
}

nlohmann::json to_json(const RunMetadata& m) {
  nlohmann::json j = {{"command", m.command},
                      {"seeds", m.seeds},
                      {"config_hash", m.config_hash},
                      {"wall_seconds", m.wall_seconds},
                      {"warnings", m.warnings},
                      {"versions",
                       {{"marlsig", "0.1.0"},
                        {"compiler", __VERSION__},
                        {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION,
                                              EIGEN_MINOR_VERSION)}}}};
  for (auto it = m.extra.begin(); it != m.extra.end(); ++it) j[it.key()] = it.value();
  return j;
}

}  // namespace marlsig::harness
