#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <utility>

#include <CLI11.hpp>

#include "aoicache/error.hpp"
#include "aoicache/experiment.hpp"
#include "aoicache/scenario.hpp"

#ifndef AOICACHE_PRESET_DIR
#define AOICACHE_PRESET_DIR "presets"
#endif

namespace fs = std::filesystem;
using namespace aoicache;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replications;
  std::optional<std::string> policy;
};

expcli::Scenario apply(expcli::Scenario s, const Overrides& o) {
  if (o.seed) s.simulation.seed = *o.seed;
  if (o.replications) s.simulation.replications = *o.replications;
  if (o.policy) s = expcli::with_override(s, "policy", *o.policy);
  return s;
}

int run(const expcli::Scenario& scenario, const std::string& command, const fs::path& out) {
  const auto result = expcli::run_command(scenario, command, out);
  std::cout << result.summary;
  std::cout << "wrote " << result.csv_path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Freshness-aware edge cache refreshing: closed forms, simulation, window design"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = "out";
  std::string preset_dir = AOICACHE_PRESET_DIR;
  Overrides overrides;

  auto add_common = [&](CLI::App* sub, bool needs_scenario) {
    if (needs_scenario) {
      sub->add_option("--scenario", scenario_path, "Scenario file")->required()->check(CLI::ExistingFile);
    }
    sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
    sub->add_option("--seed", overrides.seed, "Override the simulation seed");
    sub->add_option("--replications", overrides.replications, "Override the replication count");
    sub->add_option("--policy", overrides.policy,
                    "freshness_window | always_refresh | never_refresh");
  };

  std::string command;
  const std::pair<const char*, const char*> commands[] = {
      {"rates", "Service rates and AoI floor of the radio setup"},
      {"analyze", "Closed-form refresh probability, AoI and delay"},
      {"simulate", "Discrete-event simulation next to the closed forms"},
      {"optimize", "Delay-optimal per-item windows under an AoI budget"},
  };
  for (const auto& [name, description] : commands) {
    auto* sub = app.add_subcommand(name, description);
    add_common(sub, true);
    sub->callback([&command, name] { command = name; });
  }
  auto* echo = app.add_subcommand("echo", "Print the scenario in canonical form");
  echo->add_option("--scenario", scenario_path, "Scenario file")->required()->check(CLI::ExistingFile);

  std::string preset_name;
  auto* preset = app.add_subcommand("preset", "Run a checked-in preset scenario");
  preset->add_option("name", preset_name, "Preset name (file stem in the preset directory)")
      ->required();
  preset->add_option("--presets", preset_dir, "Preset directory")->capture_default_str();
  add_common(preset, false);

  auto* list = app.add_subcommand("list-presets", "List available presets");
  list->add_option("--presets", preset_dir, "Preset directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*list) {
      for (const auto& entry : fs::directory_iterator(preset_dir)) {
        if (entry.path().extension() == ".scn") std::cout << entry.path().stem().string() << "\n";
      }
      return 0;
    }
    if (*echo) {
      std::cout << expcli::format_scenario(expcli::load_scenario(scenario_path));
      return 0;
    }
    if (*preset) {
      auto scenario = expcli::load_scenario(fs::path(preset_dir) / (preset_name + ".scn"));
      if (scenario.command.empty()) {
        std::cerr << "preset '" << preset_name << "' has no [preset] command\n";
        return 2;
      }
      scenario = apply(std::move(scenario), overrides);
      return run(scenario, scenario.command, out_dir);
    }
    return run(apply(expcli::load_scenario(scenario_path), overrides), command, out_dir);
  } catch (const NonPositiveRate& e) {
    std::cerr << "error: " << e.what() << " [parameter: " << e.parameter() << "]\n";
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
  }
  return 1;
}
