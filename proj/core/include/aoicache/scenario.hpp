#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aoicache/desim.hpp"
#include "aoicache/model.hpp"

namespace aoicache::expcli {

// Scenario files are flat INI-style text:
//
//   # comment
//   [section]
//   key = value
//
// Sections: preset, radio | rates (exactly one), catalog, simulation, sweep,
// optimize. Lists are comma separated. See presets/ for complete examples.

struct DirectRates {
  double mu_d = 0.0;
  double mu_r = 0.0;

  bool operator==(const DirectRates&) const = default;
};

struct CatalogSpec {
  double total_arrival_rate = 0.0;
  // Zipf form: item_count items with zipf_concentration. Explicit form:
  // popularities (item ids 1..n).
  std::optional<std::size_t> item_count;
  double zipf_concentration = 0.0;
  std::vector<double> popularities;
  // Either one window for every item or one per item. With neither, every
  // window sits at the AoI floor.
  std::optional<double> window;
  std::vector<double> windows;

  bool operator==(const CatalogSpec&) const = default;
};

struct SimulationSpec {
  bool enabled = true;
  std::uint64_t seed = 1;
  std::size_t request_budget = 100'000;
  double warmup_fraction = 0.1;
  std::size_t replications = 8;
  desim::Policy policy = desim::Policy::freshness_window;
  std::size_t queue_cap = 10'000'000;

  bool operator==(const SimulationSpec&) const = default;
};

// Parameters a sweep may vary.
inline constexpr std::string_view kSweepParameters[] = {
    "window", "total_arrival_rate", "item_count", "zipf_concentration", "aoi_budget"};

// One override applied on top of the sweep, e.g. {"policy", "always_refresh"}.
using SeriesOverride = std::pair<std::string, std::string>;

struct SweepSpec {
  std::string parameter;
  std::vector<double> values;
  // Each series repeats the whole sweep with one extra override. Keys are the
  // sweep parameters plus "policy".
  std::vector<SeriesOverride> series;

  bool operator==(const SweepSpec&) const = default;
};

struct OptimizeSpec {
  double aoi_budget = 0.0;
  bool simulate = false;  // confirm the optimum by simulation

  bool operator==(const OptimizeSpec&) const = default;
};

struct Scenario {
  std::string name = "scenario";
  std::string command;  // preset command: rates | analyze | simulate | optimize
  std::optional<model::RadioConfig> radio;
  std::optional<DirectRates> rates;
  CatalogSpec catalog;
  SimulationSpec simulation;
  std::optional<SweepSpec> sweep;
  std::optional<OptimizeSpec> optimize;

  bool operator==(const Scenario&) const = default;
};

// Throws ParseError naming the offending line.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

// Canonical text form; parse_scenario(format_scenario(s)) == s.
std::string format_scenario(const Scenario& scenario);

// Copy of `scenario` with one parameter overridden. Throws ParseError for an
// unknown parameter or a value of the wrong kind.
Scenario with_override(const Scenario& scenario, std::string_view parameter,
                       std::string_view value);

model::ServiceRates service_rates(const Scenario& scenario);
model::Catalog build_catalog(const Scenario& scenario, const model::ServiceRates& rates);
desim::SimConfig sim_config(const Scenario& scenario);

}  // namespace aoicache::expcli
