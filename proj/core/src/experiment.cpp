#include "aoicache/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "aoicache/error.hpp"
#include "aoicache/optimizer.hpp"

namespace aoicache::expcli {

namespace {

std::string cell(double v) {
  return std::isfinite(v) ? fmt::format("{}", v) : std::string(kNotApplicable);
}

std::string delay_cell(const analytics::MaybeDelay& d) {
  return d ? cell(*d) : std::string(kUnstable);
}

bool diverged(std::string_view status) { return status.find("queue_divergence") != std::string_view::npos; }

// Six cells: refresh, hw, aoi, hw, delay, hw.
std::string sim_cells(const std::optional<SimColumns>& sim, std::string_view status) {
  if (!sim) {
    const auto token = diverged(status) ? kUnstable : kNotApplicable;
    return fmt::format("{0},{0},{0},{0},{0},{0}", token);
  }
  return fmt::format("{},{},{},{},{},{}", cell(sim->refresh_fraction.mean),
                     cell(sim->refresh_fraction.half_width()), cell(sim->mean_aoi.mean),
                     cell(sim->mean_aoi.half_width()), cell(sim->mean_delay.mean),
                     cell(sim->mean_delay.half_width()));
}

AnalyticColumns columns_of(const analytics::Prediction& p) {
  return {p.refresh_probability, p.refresh_frequency, p.mean_aoi, p.mean_delay, std::nullopt};
}

SimColumns columns_of(const desim::Stats& s) {
  return {s.refresh_fraction, s.mean_aoi, s.mean_delay};
}

std::string id_string(int id) { return fmt::format("{}", id); }

// Runs the configured number of replications; nullopt on divergence.
std::optional<desim::SimReport> run_replications(const desim::SimConfig& config,
                                                 std::size_t replications) {
  try {
    if (replications >= 2) return desim::replicate(config, replications);
    return desim::run_simulation(config);
  } catch (const QueueDivergence&) {
    return std::nullopt;
  }
}

std::string join_status(std::string status, std::string_view extra) {
  if (status.empty() || status == "ok") return std::string(extra);
  return status + "+" + std::string(extra);
}

}  // namespace

std::vector<SweepPoint> sweep_points(const Scenario& scenario) {
  if (!scenario.sweep) return {{"none", std::string(kNotApplicable), scenario}};
  const auto& sweep = *scenario.sweep;
  std::vector<std::optional<SeriesOverride>> series;
  if (sweep.series.empty()) {
    series.emplace_back();
  } else {
    for (const auto& s : sweep.series) series.emplace_back(s);
  }

  std::vector<SweepPoint> points;
  for (const auto& s : series) {
    const Scenario base = s ? with_override(scenario, s->first, s->second) : scenario;
    const std::string label =
        s ? fmt::format("{}@{}={}", sweep.parameter, s->first, s->second) : sweep.parameter;
    for (double v : sweep.values) {
      const std::string value = fmt::format("{}", v);
      points.push_back({label, value, with_override(base, sweep.parameter, value)});
    }
  }
  return points;
}

std::string rates_report(const Scenario& scenario) {
  const auto rates = service_rates(scenario);
  return fmt::format(
      "mu_d      = {:.6g} /s  (mean delivery {:.6g} ms)\n"
      "mu_r      = {:.6g} /s  (mean fetch {:.6g} ms)\n"
      "aoi_floor = {:.6g} ms\n",
      rates.mu_d(), 1e3 / rates.mu_d(), rates.mu_r(), 1e3 / rates.mu_r(),
      1e3 * rates.aoi_floor());
}

std::string rates_csv(const Scenario& scenario) {
  const auto rates = service_rates(scenario);
  return fmt::format("mu_d_per_s,mu_r_per_s,aoi_floor_s\n{},{},{}\n", cell(rates.mu_d()),
                     cell(rates.mu_r()), cell(rates.aoi_floor()));
}

std::vector<ResultRow> analyze(const Scenario& scenario) {
  std::vector<ResultRow> rows;
  for (const auto& point : sweep_points(scenario)) {
    const auto rates = service_rates(point.scenario);
    const auto catalog = build_catalog(point.scenario, rates);
    const auto prediction = analytics::multi_source_predict(catalog, rates);
    const std::string status = prediction.stable() ? "ok" : std::string(kUnstable);

    ResultRow sys{point.param_label, point.value_label, std::string(kAllItems),
                  columns_of(prediction.system), std::nullopt, status};
    sys.analytic.bounds = analytics::delay_bounds(rates, catalog.total_arrival_rate());
    rows.push_back(std::move(sys));
    if (catalog.size() > 1) {
      for (std::size_t i = 0; i < catalog.size(); ++i) {
        rows.push_back({point.param_label, point.value_label, id_string(catalog[i].item_id),
                        columns_of(prediction.items[i]), std::nullopt, status});
      }
    }
  }
  return rows;
}

std::vector<ResultRow> simulate(const Scenario& scenario) {
  auto rows = analyze(scenario);
  if (!scenario.simulation.enabled) return rows;

  std::size_t next = 0;
  for (const auto& point : sweep_points(scenario)) {
    const auto config = sim_config(point.scenario);
    const auto report = run_replications(config, point.scenario.simulation.replications);

    ResultRow& sys = rows[next++];
    if (!report) {
      sys.status = join_status(sys.status, "queue_divergence");
    } else {
      sys.simulated = columns_of(report->aggregate);
    }
    if (config.catalog.size() > 1) {
      for (std::size_t i = 0; i < config.catalog.size(); ++i) {
        ResultRow& item = rows[next++];
        if (!report) {
          item.status = sys.status;
        } else {
          item.simulated = columns_of(report->items[i].stats);
        }
      }
    }
  }
  return rows;
}

std::vector<OptimizeRow> optimize(const Scenario& scenario) {
  if (!scenario.optimize) throw InvalidArgument("optimize needs an [optimize] section");
  std::vector<OptimizeRow> rows;
  for (const auto& point : sweep_points(scenario)) {
    const auto rates = service_rates(point.scenario);
    const auto catalog = build_catalog(point.scenario, rates);
    const optimizer::OptProblem problem(catalog.arrival_rates(), rates,
                                        point.scenario.optimize->aoi_budget,
                                        catalog.total_arrival_rate());
    const auto result = optimizer::solve(problem);
    std::string status(optimizer::to_string(result.status));

    OptimizeRow sys;
    sys.sweep_param = point.param_label;
    sys.sweep_value = point.value_label;
    sys.item_id = std::string(kAllItems);
    sys.arrival_rate = catalog.total_arrival_rate();
    sys.dual_price = result.dual_price;
    sys.budget_slack = result.budget_slack;
    sys.status = status;
    if (!result.predicted) {
      sys.analytic.p = std::nan("");
      sys.analytic.refresh_frequency = std::nan("");
      sys.analytic.mean_aoi = std::nan("");
      sys.nbar = std::nan("");
      rows.push_back(std::move(sys));
      continue;
    }
    const auto& predicted = *result.predicted;
    sys.nbar = predicted.system.nbar;
    sys.analytic = columns_of(predicted.system);

    std::optional<desim::SimReport> report;
    if (point.scenario.optimize->simulate && point.scenario.simulation.enabled) {
      auto config = sim_config(point.scenario);
      config.catalog = catalog.with_windows(result.windows);
      report = run_replications(config, point.scenario.simulation.replications);
      if (!report) {
        status = join_status(status, "queue_divergence");
        sys.status = status;
      } else {
        sys.simulated = columns_of(report->aggregate);
      }
    }
    rows.push_back(std::move(sys));

    for (std::size_t i = 0; i < catalog.size(); ++i) {
      OptimizeRow item;
      item.sweep_param = point.param_label;
      item.sweep_value = point.value_label;
      item.item_id = id_string(catalog[i].item_id);
      item.arrival_rate = catalog.arrival_rate(i);
      item.window = result.windows[i];
      item.nbar = result.nbars[i];
      item.analytic = columns_of(predicted.items[i]);
      item.dual_price = result.dual_price;
      item.budget_slack = result.budget_slack;
      if (report) item.simulated = columns_of(report->items[i].stats);
      item.status = status;
      rows.push_back(std::move(item));
    }
  }
  return rows;
}

std::string analyze_csv(const std::vector<ResultRow>& rows) {
  std::string out =
      "sweep_param,sweep_value,item_id,analytic_p,analytic_refresh_freq,analytic_aoi_s,"
      "analytic_delay_s,analytic_d_max_s,analytic_d_min_s,status\n";
  for (const auto& r : rows) {
    const auto& a = r.analytic;
    std::string bounds = fmt::format("{0},{0}", kNotApplicable);
    if (a.bounds) bounds = delay_cell(a.bounds->d_max) + "," + delay_cell(a.bounds->d_min);
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", r.sweep_param, r.sweep_value, r.item_id,
                       cell(a.p), cell(a.refresh_frequency), cell(a.mean_aoi),
                       delay_cell(a.mean_delay), bounds, r.status);
  }
  return out;
}

std::string simulate_csv(const std::vector<ResultRow>& rows) {
  std::string out =
      "sweep_param,sweep_value,item_id,analytic_p,analytic_refresh_freq,analytic_aoi_s,"
      "analytic_delay_s,sim_refresh_frac,sim_refresh_frac_hw,sim_aoi_s,sim_aoi_hw,sim_delay_s,"
      "sim_delay_hw,status\n";
  for (const auto& r : rows) {
    const auto& a = r.analytic;
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", r.sweep_param, r.sweep_value, r.item_id,
                       cell(a.p), cell(a.refresh_frequency), cell(a.mean_aoi),
                       delay_cell(a.mean_delay), sim_cells(r.simulated, r.status), r.status);
  }
  return out;
}

std::string optimize_csv(const std::vector<OptimizeRow>& rows) {
  std::string out =
      "sweep_param,sweep_value,item_id,arrival_rate,window_s,nbar,analytic_p,"
      "analytic_refresh_freq,analytic_aoi_s,analytic_delay_s,dual_price,budget_slack,"
      "sim_refresh_frac,sim_refresh_frac_hw,sim_aoi_s,sim_aoi_hw,sim_delay_s,sim_delay_hw,"
      "status\n";
  for (const auto& r : rows) {
    const auto& a = r.analytic;
    const bool solved = std::isfinite(a.p);
    out += fmt::format(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.sweep_param, r.sweep_value, r.item_id,
        cell(r.arrival_rate), r.window ? cell(*r.window) : std::string(kNotApplicable),
        cell(r.nbar), cell(a.p), cell(a.refresh_frequency), cell(a.mean_aoi),
        solved ? delay_cell(a.mean_delay) : std::string(kNotApplicable), cell(r.dual_price),
        cell(r.budget_slack), sim_cells(r.simulated, r.status), r.status);
  }
  return out;
}

namespace {

std::string ms(double seconds) { return fmt::format("{:.4f}", 1e3 * seconds); }
std::string ms(const analytics::MaybeDelay& d) { return d ? ms(*d) : std::string(kUnstable); }

std::string bounds_table(const std::vector<ResultRow>& rows) {
  std::string out = fmt::format("{:<40} {:>10} {:>8} {:>10} {:>11} {:>11} {:>11} {:>9}  {}\n",
                                "sweep", "value", "p", "AoI[ms]", "delay[ms]", "d_max[ms]",
                                "d_min[ms]", "min/max", "status");
  for (const auto& r : rows) {
    if (r.item_id != kAllItems) continue;
    std::string dmax = "-", dmin = "-", ratio = "-";
    if (r.analytic.bounds) {
      const auto& b = *r.analytic.bounds;
      dmax = ms(b.d_max);
      dmin = ms(b.d_min);
      if (b.d_max && b.d_min) ratio = fmt::format("{:.4f}", *b.d_min / *b.d_max);
    }
    out += fmt::format("{:<40} {:>10} {:>8.4f} {:>10} {:>11} {:>11} {:>11} {:>9}  {}\n",
                       r.sweep_param, r.sweep_value, r.analytic.p, ms(r.analytic.mean_aoi),
                       ms(r.analytic.mean_delay), dmax, dmin, ratio, r.status);
  }
  return out;
}

}  // namespace

std::string format_table(const std::vector<ResultRow>& rows) {
  const bool any_sim = std::any_of(rows.begin(), rows.end(),
                                   [](const ResultRow& r) { return r.simulated.has_value(); });
  const bool any_bounds = std::any_of(rows.begin(), rows.end(), [](const ResultRow& r) {
    return r.analytic.bounds.has_value();
  });
  if (!any_sim && any_bounds) return bounds_table(rows);
  std::string out = fmt::format("{:<40} {:>10} {:>8} {:>10} {:>11} {:>16} {:>16} {:>16}  {}\n",
                                "sweep", "value", "p", "AoI[ms]", "delay[ms]", "sim p",
                                "sim AoI[ms]", "sim delay[ms]", "status");
  for (const auto& r : rows) {
    if (r.item_id != kAllItems) continue;
    std::string sp = "-", sa = "-", sd = "-";
    if (r.simulated) {
      const auto& s = *r.simulated;
      sp = fmt::format("{:.4f}±{:.4f}", s.refresh_fraction.mean, s.refresh_fraction.half_width());
      sa = fmt::format("{}±{}", ms(s.mean_aoi.mean), ms(s.mean_aoi.half_width()));
      sd = fmt::format("{}±{}", ms(s.mean_delay.mean), ms(s.mean_delay.half_width()));
    }
    out += fmt::format("{:<40} {:>10} {:>8.4f} {:>10} {:>11} {:>16} {:>16} {:>16}  {}\n",
                       r.sweep_param, r.sweep_value, r.analytic.p, ms(r.analytic.mean_aoi),
                       ms(r.analytic.mean_delay), sp, sa, sd, r.status);
  }
  return out;
}

std::string format_table(const std::vector<OptimizeRow>& rows) {
  std::string out = fmt::format("{:<24} {:>10} {:>6} {:>10} {:>11} {:>9} {:>11} {:>11} {:>12}  {}\n",
                                "sweep", "value", "item", "lambda", "W[ms]", "p", "freq[/s]",
                                "AoI[ms]", "delay[ms]", "status");
  for (const auto& r : rows) {
    out += fmt::format("{:<24} {:>10} {:>6} {:>10.4g} {:>11} {:>9.4f} {:>11.4f} {:>11} {:>12}  {}\n",
                       r.sweep_param, r.sweep_value, r.item_id, r.arrival_rate,
                       r.window ? ms(*r.window) : "-", r.analytic.p, r.analytic.refresh_frequency,
                       ms(r.analytic.mean_aoi),
                       std::isfinite(r.analytic.p) ? ms(r.analytic.mean_delay) : "-", r.status);
  }
  return out;
}

RunOutput run_command(const Scenario& scenario, std::string_view command,
                      const std::filesystem::path& out_dir) {
  std::string csv;
  std::string summary;
  if (command == "rates") {
    summary = rates_report(scenario);
    csv = rates_csv(scenario);
  } else if (command == "analyze") {
    const auto rows = analyze(scenario);
    summary = format_table(rows);
    csv = analyze_csv(rows);
  } else if (command == "simulate") {
    const auto rows = simulate(scenario);
    summary = format_table(rows);
    csv = simulate_csv(rows);
  } else if (command == "optimize") {
    const auto rows = optimize(scenario);
    summary = format_table(rows);
    for (const auto& r : rows) {
      if (r.status == "infeasible_budget") {
        summary += fmt::format("AoI budget {} s is infeasible; the smallest feasible budget is the "
                               "AoI floor {} s\n",
                               scenario.optimize->aoi_budget, service_rates(scenario).aoi_floor());
        break;
      }
    }
    csv = optimize_csv(rows);
  } else {
    throw InvalidArgument(fmt::format("unknown command '{}'", command));
  }

  std::filesystem::create_directories(out_dir);
  const auto path = out_dir / fmt::format("{}_{}.csv", scenario.name, scenario.simulation.seed);
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(fmt::format("cannot write '{}'", path.string()));
  file << csv;
  return {path, summary};
}

}  // namespace aoicache::expcli
