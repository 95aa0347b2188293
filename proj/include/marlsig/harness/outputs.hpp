#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "marlsig/harness/evaluation.hpp"
#include "marlsig/harness/training.hpp"

namespace marlsig::harness {

// One line of metrics.csv.
struct MetricRow {
  std::string run_id;
  std::uint64_t seed = 0;
  std::uint64_t entity_id = 0;
  std::string kind;
  std::string section;
  double value = 0.0;
  double t = 0.0;
};

std::vector<MetricRow> metric_rows(const std::vector<RunRecord>& runs);
// Run label: the run id without its trailing replicate tag.
std::string label_of(const std::string& run_id);

void write_metrics_csv(std::ostream& os, const std::vector<MetricRow>& rows);
// Throws std::runtime_error on a malformed line.
std::vector<MetricRow> read_metrics_csv(std::istream& is);

// Per label and per run: count, mean, min, quartiles, max for every (kind, section).
void write_summary_csv(std::ostream& os, const std::vector<MetricRow>& rows);

void write_background_curve(std::ostream& os, const std::vector<BackgroundCurveRow>& rows);
std::vector<BackgroundCurveRow> read_background_curve(std::istream& is);
void write_tsp_curve(std::ostream& os, const std::vector<TspCurveRow>& rows);
std::vector<TspCurveRow> read_tsp_curve(std::istream& is);

nlohmann::json comparison_json(const TspComparison& c);

struct RunMetadata {
  std::string command;
  std::vector<std::uint64_t> seeds;
  std::string config_hash;
  double wall_seconds = 0.0;
  std::vector<std::string> warnings;
  nlohmann::json extra = nlohmann::json::object();
};

nlohmann::json to_json(const RunMetadata& m);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace marlsig::harness
