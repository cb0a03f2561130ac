#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "covctl/sim.hpp"

namespace covctl {

inline constexpr std::string_view kVersion = "0.1.0";

struct ScenarioFile {
  std::string name;
  ScenarioConfig config;
  /// Seconds at the end of the run averaged by steady_state_mean; 0 disables.
  double steady_state_window = 0.0;
};

/// Throws InvalidConfig (unknown keys, wrong types, invalid values).
ScenarioFile parse_scenario(const nlohmann::json& doc);
/// Throws InvalidConfig, also for unreadable files and malformed JSON.
ScenarioFile load_scenario(const std::filesystem::path& path);

/// Effective configuration with every default filled in.
nlohmann::json scenario_to_json(const ScenarioFile& scenario);

std::uint64_t fnv1a(std::string_view bytes);
/// Hash of the full effective configuration.
std::string config_hash(const ScenarioFile& scenario);
/// Hash of everything except the control law choice (law, feedforward,
/// Neumann order), so runs of one scenario under different laws compare.
std::string scenario_hash(const ScenarioFile& scenario);

nlohmann::json record_to_json(const TrajectoryRecord& record);

/// Writes trajectory.jsonl, metrics.csv and manifest.json into `dir`.
void write_run(const std::filesystem::path& dir, const ScenarioFile& scenario,
               const TrajectoryLog& log);

struct MetricsSeries {
  std::vector<double> t;
  std::vector<double> e_a;
  std::vector<double> H;
};

MetricsSeries read_metrics_csv(const std::filesystem::path& path);

struct Comparison {
  double mean_run = 0.0;
  double mean_other = 0.0;
  /// 100 * (1 - mean_run / mean_other).
  double improvement_percent = 0.0;
  std::string summary;
};

/// Writes comparison.csv and summary.txt into `out_dir`. Throws InvalidConfig
/// when the runs come from different scenarios or time grids.
Comparison compare_runs(const std::filesystem::path& run_dir,
                        const std::filesystem::path& other_dir,
                        const std::filesystem::path& out_dir);

}  // namespace covctl
