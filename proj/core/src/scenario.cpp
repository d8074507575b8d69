#include "aoicache/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "aoicache/error.hpp"

namespace aoicache::expcli {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

double parse_double(std::string_view text, std::size_t line) {
  text = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
    throw ParseError(fmt::format("expected a number, got '{}'", text), line);
  }
  return value;
}

std::uint64_t parse_unsigned(std::string_view text, std::size_t line) {
  text = trim(text);
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(fmt::format("expected a non-negative integer, got '{}'", text), line);
  }
  return value;
}

bool parse_bool(std::string_view text, std::size_t line) {
  text = trim(text);
  if (text == "true" || text == "yes" || text == "1") return true;
  if (text == "false" || text == "no" || text == "0") return false;
  throw ParseError(fmt::format("expected true or false, got '{}'", text), line);
}

std::vector<double> parse_list(std::string_view text, std::size_t line) {
  std::vector<double> values;
  for (auto part : split(text, ',')) values.push_back(parse_double(part, line));
  return values;
}

desim::Policy parse_policy_value(std::string_view text, std::size_t line) {
  const auto policy = desim::parse_policy(trim(text));
  if (!policy) {
    throw ParseError(fmt::format("unknown policy '{}' (freshness_window, always_refresh, "
                                 "never_refresh)",
                                 trim(text)),
                     line);
  }
  return *policy;
}

bool is_sweep_parameter(std::string_view name) {
  return std::find(std::begin(kSweepParameters), std::end(kSweepParameters), name) !=
         std::end(kSweepParameters);
}

void apply_radio(model::RadioConfig& radio, std::string_view key, std::string_view value,
                 std::size_t line) {
  const double v = parse_double(value, line);
  if (key == "coverage_radius_m") {
    radio.coverage_radius = v;
  } else if (key == "bandwidth_hz") {
    radio.bandwidth = v;
  } else if (key == "content_size_bits") {
    radio.content_size = v;
  } else if (key == "content_size_kb") {
    radio.content_size = v * model::kBitsPerKilobyte;
  } else if (key == "path_loss_exponent") {
    radio.path_loss_exponent = v;
  } else if (key == "noise_power_w") {
    radio.noise_power = v;
  } else if (key == "noise_power_dbm") {
    radio.noise_power = model::dbm_to_watts(v);
  } else if (key == "bs_tx_power_w") {
    radio.bs_tx_power = v;
  } else if (key == "source_tx_power_w") {
    radio.source_tx_power = v;
  } else {
    throw ParseError(fmt::format("unknown key '{}' in [radio]", key), line);
  }
}

void apply_catalog(CatalogSpec& c, std::string_view key, std::string_view value,
                   std::size_t line) {
  if (key == "total_arrival_rate") {
    c.total_arrival_rate = parse_double(value, line);
  } else if (key == "item_count") {
    c.item_count = parse_unsigned(value, line);
  } else if (key == "zipf_concentration") {
    c.zipf_concentration = parse_double(value, line);
  } else if (key == "popularities") {
    c.popularities = parse_list(value, line);
  } else if (key == "window") {
    c.window = parse_double(value, line);
  } else if (key == "windows") {
    c.windows = parse_list(value, line);
  } else {
    throw ParseError(fmt::format("unknown key '{}' in [catalog]", key), line);
  }
}

void apply_simulation(SimulationSpec& s, std::string_view key, std::string_view value,
                      std::size_t line) {
  if (key == "enabled") {
    s.enabled = parse_bool(value, line);
  } else if (key == "seed") {
    s.seed = parse_unsigned(value, line);
  } else if (key == "request_budget") {
    s.request_budget = parse_unsigned(value, line);
  } else if (key == "warmup_fraction") {
    s.warmup_fraction = parse_double(value, line);
  } else if (key == "replications") {
    s.replications = parse_unsigned(value, line);
  } else if (key == "policy") {
    s.policy = parse_policy_value(value, line);
  } else if (key == "queue_cap") {
    s.queue_cap = parse_unsigned(value, line);
  } else {
    throw ParseError(fmt::format("unknown key '{}' in [simulation]", key), line);
  }
}

std::vector<SeriesOverride> parse_series(std::string_view value, std::size_t line) {
  std::vector<SeriesOverride> series;
  for (auto entry : split(value, '|')) {
    const auto eq = entry.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(fmt::format("series entry '{}' is not key=value", entry), line);
    }
    const auto key = trim(entry.substr(0, eq));
    const auto val = trim(entry.substr(eq + 1));
    if (key != "policy" && !is_sweep_parameter(key)) {
      throw ParseError(fmt::format("series key '{}' is not sweepable", key), line);
    }
    if (key == "policy") {
      parse_policy_value(val, line);
    } else {
      parse_double(val, line);
    }
    series.emplace_back(std::string(key), std::string(val));
  }
  return series;
}

void apply_sweep(SweepSpec& s, std::string_view key, std::string_view value, std::size_t line) {
  if (key == "parameter") {
    const auto name = trim(value);
    if (!is_sweep_parameter(name)) {
      throw ParseError(fmt::format("sweep parameter '{}' not one of: {}", name,
                                   fmt::join(kSweepParameters, ", ")),
                       line);
    }
    s.parameter = std::string(name);
  } else if (key == "values") {
    s.values = parse_list(value, line);
  } else if (key == "series") {
    s.series = parse_series(value, line);
  } else {
    throw ParseError(fmt::format("unknown key '{}' in [sweep]", key), line);
  }
}

void apply_optimize(OptimizeSpec& o, std::string_view key, std::string_view value,
                    std::size_t line) {
  if (key == "aoi_budget") {
    o.aoi_budget = parse_double(value, line);
  } else if (key == "simulate") {
    o.simulate = parse_bool(value, line);
  } else {
    throw ParseError(fmt::format("unknown key '{}' in [optimize]", key), line);
  }
}

void check_consistency(const Scenario& s, std::size_t catalog_line, std::size_t sweep_line) {
  if (s.radio.has_value() == s.rates.has_value()) {
    throw ParseError("exactly one of [radio] or [rates] is required", 0);
  }
  const auto& c = s.catalog;
  if (!(c.total_arrival_rate > 0.0)) {
    throw ParseError("[catalog] total_arrival_rate must be given and positive", catalog_line);
  }
  if (c.item_count.has_value() == !c.popularities.empty()) {
    throw ParseError("[catalog] needs exactly one of item_count or popularities", catalog_line);
  }
  if (c.item_count && *c.item_count == 0) {
    throw ParseError("[catalog] item_count must be >= 1", catalog_line);
  }
  if (c.window && !c.windows.empty()) {
    throw ParseError("[catalog] give window or windows, not both", catalog_line);
  }
  const std::size_t n = c.item_count ? *c.item_count : c.popularities.size();
  if (!c.windows.empty() && c.windows.size() != n) {
    throw ParseError(fmt::format("[catalog] {} windows for {} items", c.windows.size(), n),
                     catalog_line);
  }
  if (s.sweep) {
    if (s.sweep->parameter.empty() || s.sweep->values.empty()) {
      throw ParseError("[sweep] needs parameter and values", sweep_line);
    }
    if (s.sweep->parameter == "aoi_budget" && !s.optimize) {
      throw ParseError("sweeping aoi_budget requires an [optimize] section", sweep_line);
    }
  }
  if (s.optimize && !(s.optimize->aoi_budget > 0.0)) {
    throw ParseError("[optimize] aoi_budget must be positive", 0);
  }
}

std::string num(double v) { return fmt::format("{}", v); }

std::string join_numbers(const std::vector<double>& values) {
  std::vector<std::string> parts;
  for (double v : values) parts.push_back(num(v));
  return fmt::format("{}", fmt::join(parts, ", "));
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  Scenario s;
  SweepSpec sweep;
  OptimizeSpec optimize;
  bool has_sweep = false;
  bool has_optimize = false;
  std::string section;
  std::size_t catalog_line = 0;
  std::size_t sweep_line = 0;

  std::size_t line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    auto line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = trim(line.substr(0, hash));
    }
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", line_no);
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section == "radio") {
        if (s.radio) throw ParseError("duplicate [radio]", line_no);
        s.radio = model::RadioConfig::reference_cell();
      } else if (section == "rates") {
        if (s.rates) throw ParseError("duplicate [rates]", line_no);
        s.rates = DirectRates{};
      } else if (section == "catalog") {
        catalog_line = line_no;
      } else if (section == "sweep") {
        has_sweep = true;
        sweep_line = line_no;
      } else if (section == "optimize") {
        has_optimize = true;
      } else if (section != "preset" && section != "simulation") {
        throw ParseError(fmt::format("unknown section [{}]", section), line_no);
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(fmt::format("expected key = value, got '{}'", line), line_no);
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (value.empty()) throw ParseError(fmt::format("key '{}' has no value", key), line_no);

    if (section.empty()) {
      throw ParseError(fmt::format("key '{}' outside any section", key), line_no);
    } else if (section == "preset") {
      if (key == "name") {
        s.name = std::string(value);
      } else if (key == "command") {
        if (value != "rates" && value != "analyze" && value != "simulate" && value != "optimize") {
          throw ParseError(fmt::format("unknown command '{}'", value), line_no);
        }
        s.command = std::string(value);
      } else {
        throw ParseError(fmt::format("unknown key '{}' in [preset]", key), line_no);
      }
    } else if (section == "radio") {
      apply_radio(*s.radio, key, value, line_no);
    } else if (section == "rates") {
      if (key == "mu_d") {
        s.rates->mu_d = parse_double(value, line_no);
      } else if (key == "mu_r") {
        s.rates->mu_r = parse_double(value, line_no);
      } else {
        throw ParseError(fmt::format("unknown key '{}' in [rates]", key), line_no);
      }
    } else if (section == "catalog") {
      apply_catalog(s.catalog, key, value, line_no);
    } else if (section == "simulation") {
      apply_simulation(s.simulation, key, value, line_no);
    } else if (section == "sweep") {
      apply_sweep(sweep, key, value, line_no);
    } else if (section == "optimize") {
      apply_optimize(optimize, key, value, line_no);
    }
  }

  if (has_sweep) s.sweep = sweep;
  if (has_optimize) s.optimize = optimize;
  check_consistency(s, catalog_line, sweep_line);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(fmt::format("cannot open scenario file '{}'", path.string()), 0);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

std::string format_scenario(const Scenario& s) {
  std::string out;
  auto line = [&out](std::string_view key, std::string_view value) {
    out += fmt::format("{} = {}\n", key, value);
  };

  out += "[preset]\n";
  line("name", s.name);
  if (!s.command.empty()) line("command", s.command);

  if (s.radio) {
    const auto& r = *s.radio;
    out += "\n[radio]\n";
    line("coverage_radius_m", num(r.coverage_radius));
    line("bandwidth_hz", num(r.bandwidth));
    line("content_size_bits", num(r.content_size));
    line("path_loss_exponent", num(r.path_loss_exponent));
    line("noise_power_w", num(r.noise_power));
    line("bs_tx_power_w", num(r.bs_tx_power));
    line("source_tx_power_w", num(r.source_tx_power));
  }
  if (s.rates) {
    out += "\n[rates]\n";
    line("mu_d", num(s.rates->mu_d));
    line("mu_r", num(s.rates->mu_r));
  }

  const auto& c = s.catalog;
  out += "\n[catalog]\n";
  line("total_arrival_rate", num(c.total_arrival_rate));
  if (c.item_count) line("item_count", fmt::format("{}", *c.item_count));
  line("zipf_concentration", num(c.zipf_concentration));
  if (!c.popularities.empty()) line("popularities", join_numbers(c.popularities));
  if (c.window) line("window", num(*c.window));
  if (!c.windows.empty()) line("windows", join_numbers(c.windows));

  const auto& sim = s.simulation;
  out += "\n[simulation]\n";
  line("enabled", sim.enabled ? "true" : "false");
  line("seed", fmt::format("{}", sim.seed));
  line("request_budget", fmt::format("{}", sim.request_budget));
  line("warmup_fraction", num(sim.warmup_fraction));
  line("replications", fmt::format("{}", sim.replications));
  line("policy", desim::to_string(sim.policy));
  line("queue_cap", fmt::format("{}", sim.queue_cap));

  if (s.sweep) {
    out += "\n[sweep]\n";
    line("parameter", s.sweep->parameter);
    line("values", join_numbers(s.sweep->values));
    if (!s.sweep->series.empty()) {
      std::vector<std::string> parts;
      for (const auto& [k, v] : s.sweep->series) parts.push_back(k + "=" + v);
      line("series", fmt::format("{}", fmt::join(parts, " | ")));
    }
  }
  if (s.optimize) {
    out += "\n[optimize]\n";
    line("aoi_budget", num(s.optimize->aoi_budget));
    line("simulate", s.optimize->simulate ? "true" : "false");
  }
  return out;
}

Scenario with_override(const Scenario& scenario, std::string_view parameter,
                       std::string_view value) {
  Scenario s = scenario;
  auto& c = s.catalog;
  if (parameter == "window") {
    c.window = parse_double(value, 0);
    c.windows.clear();
  } else if (parameter == "total_arrival_rate") {
    c.total_arrival_rate = parse_double(value, 0);
  } else if (parameter == "item_count") {
    const double v = parse_double(value, 0);
    if (!(v >= 1.0) || v != std::floor(v)) {
      throw ParseError(fmt::format("item_count must be a positive integer, got {}", value), 0);
    }
    if (!c.item_count) throw ParseError("item_count override needs a Zipf catalog", 0);
    if (!c.windows.empty()) throw ParseError("item_count override conflicts with windows", 0);
    c.item_count = static_cast<std::size_t>(v);
  } else if (parameter == "zipf_concentration") {
    c.zipf_concentration = parse_double(value, 0);
  } else if (parameter == "aoi_budget") {
    if (!s.optimize) s.optimize = OptimizeSpec{};
    s.optimize->aoi_budget = parse_double(value, 0);
  } else if (parameter == "policy") {
    s.simulation.policy = parse_policy_value(value, 0);
  } else {
    throw ParseError(fmt::format("'{}' cannot be overridden", parameter), 0);
  }
  return s;
}

model::ServiceRates service_rates(const Scenario& scenario) {
  if (scenario.radio) return model::derive_service_rates(*scenario.radio);
  if (scenario.rates) return model::ServiceRates(scenario.rates->mu_d, scenario.rates->mu_r);
  throw InvalidArgument("scenario has neither [radio] nor [rates]");
}

model::Catalog build_catalog(const Scenario& scenario, const model::ServiceRates& rates) {
  const auto& c = scenario.catalog;
  std::vector<double> popularity =
      c.item_count ? model::zipf_popularities(*c.item_count, c.zipf_concentration)
                   : c.popularities;
  std::vector<model::CatalogItem> items;
  for (std::size_t i = 0; i < popularity.size(); ++i) {
    double window = rates.aoi_floor();
    if (!c.windows.empty()) {
      window = c.windows[i];
    } else if (c.window) {
      window = *c.window;
    }
    items.push_back({static_cast<int>(i + 1), popularity[i], window});
  }
  model::Catalog catalog(std::move(items), c.total_arrival_rate);
  catalog.check_windows(rates);
  return catalog;
}

desim::SimConfig sim_config(const Scenario& scenario) {
  const auto rates = service_rates(scenario);
  const auto& sim = scenario.simulation;
  return desim::SimConfig{.seed = sim.seed,
                          .rates = rates,
                          .catalog = build_catalog(scenario, rates),
                          .request_budget = sim.request_budget,
                          .warmup_fraction = sim.warmup_fraction,
                          .policy = sim.policy,
                          .queue_cap = sim.queue_cap};
}

}  // namespace aoicache::expcli
