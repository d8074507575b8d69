#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aoicache/analytics.hpp"
#include "aoicache/desim.hpp"
#include "aoicache/scenario.hpp"

namespace aoicache::expcli {

// Cell tokens. Unstable marks an analytic delay with lambda E[X] >= 1 or a
// simulation that diverged; kNotApplicable marks cells the command does not
// compute.
inline constexpr std::string_view kUnstable = "unstable";
inline constexpr std::string_view kNotApplicable = "na";
inline constexpr std::string_view kAllItems = "all";

struct AnalyticColumns {
  double p = 0.0;
  double refresh_frequency = 0.0;
  double mean_aoi = 0.0;
  analytics::MaybeDelay mean_delay;
  std::optional<analytics::DelayBounds> bounds;  // system rows only
};

struct SimColumns {
  desim::Estimate refresh_fraction;
  desim::Estimate mean_aoi;
  desim::Estimate mean_delay;
};

// One CSV line: either a system row (item_id "all") or one item.
struct ResultRow {
  std::string sweep_param;
  std::string sweep_value;
  std::string item_id;
  AnalyticColumns analytic;
  std::optional<SimColumns> simulated;  // absent for analyze or on divergence
  std::string status;
};

struct OptimizeRow {
  std::string sweep_param;
  std::string sweep_value;
  std::string item_id;
  double arrival_rate = 0.0;
  std::optional<double> window;  // absent on system rows
  double nbar = 0.0;
  AnalyticColumns analytic;
  double dual_price = 0.0;
  double budget_slack = 0.0;
  std::optional<SimColumns> simulated;
  std::string status;
};

// Sweep points in emission order: every series in turn, every value within it.
struct SweepPoint {
  std::string param_label;  // "none", "<param>" or "<param>@<key>=<value>"
  std::string value_label;
  Scenario scenario;
};
std::vector<SweepPoint> sweep_points(const Scenario& scenario);

std::string rates_report(const Scenario& scenario);
std::string rates_csv(const Scenario& scenario);

std::vector<ResultRow> analyze(const Scenario& scenario);
std::vector<ResultRow> simulate(const Scenario& scenario);
std::vector<OptimizeRow> optimize(const Scenario& scenario);

// Fixed schemas; see README for the column meanings.
std::string analyze_csv(const std::vector<ResultRow>& rows);
std::string simulate_csv(const std::vector<ResultRow>& rows);
std::string optimize_csv(const std::vector<OptimizeRow>& rows);

// Human-readable summaries (system rows only).
std::string format_table(const std::vector<ResultRow>& rows);
std::string format_table(const std::vector<OptimizeRow>& rows);

struct RunOutput {
  std::filesystem::path csv_path;
  std::string summary;
};

// Runs `command` (rates, analyze, simulate, optimize) and writes
// <out_dir>/<scenario.name>_<seed>.csv.
RunOutput run_command(const Scenario& scenario, std::string_view command,
                      const std::filesystem::path& out_dir);

}  // namespace aoicache::expcli
