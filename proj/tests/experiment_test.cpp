#include <gtest/gtest.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "aoicache/analytics.hpp"
#include "aoicache/error.hpp"
#include "aoicache/experiment.hpp"
#include "aoicache/scenario.hpp"

using namespace aoicache;
using namespace aoicache::expcli;

namespace {

std::vector<std::vector<std::string>> split_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

bool is_decimal(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

Scenario load(const std::string& name) {
  return load_scenario(std::filesystem::path(AOICACHE_PRESET_DIR) / (name + ".scn"));
}

Scenario small_sim(const std::string& extra = "") {
  return parse_scenario(
      "[rates]\nmu_d = 1000\nmu_r = 1000\n"
      "[catalog]\ntotal_arrival_rate = 300\nitem_count = 3\nwindow = 0.02\n"
      "[simulation]\nrequest_budget = 4000\nreplications = 2\nseed = 5\n" + extra);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Sweep, LabelsAndOrder) {
  const auto pts = sweep_points(load("single_load_sweep"));
  ASSERT_EQ(pts.size(), 4u * 6u);
  EXPECT_EQ(pts[0].param_label, "total_arrival_rate@window=0.005");
  EXPECT_EQ(pts[0].value_label, "50");
  EXPECT_EQ(pts[23].param_label, "total_arrival_rate@policy=always_refresh");
  EXPECT_EQ(pts[23].scenario.simulation.policy, desim::Policy::always_refresh);
  EXPECT_EQ(pts[7].scenario.catalog.total_arrival_rate, 100.0);
  EXPECT_EQ(pts[7].scenario.catalog.window, 0.01);

  const auto none = sweep_points(small_sim());
  ASSERT_EQ(none.size(), 1u);
  EXPECT_EQ(none[0].param_label, "none");
  EXPECT_EQ(none[0].value_label, kNotApplicable);
}

TEST(Analyze, SinglePointPassesThrough) {
  auto s = parse_scenario(
      "[rates]\nmu_d = 1000\nmu_r = 700\n[catalog]\ntotal_arrival_rate = 250\n"
      "item_count = 1\nwindow = 0.013\n");
  const auto rows = analyze(s);
  ASSERT_EQ(rows.size(), 1u);
  const analytics::LoadPoint pt(250.0, 0.013, model::ServiceRates(1000.0, 700.0));
  EXPECT_EQ(rows[0].analytic.mean_delay, analytics::mean_delay_single(pt));
  EXPECT_EQ(rows[0].analytic.mean_aoi, analytics::mean_aoi_single(pt));
  EXPECT_EQ(rows[0].item_id, kAllItems);
  EXPECT_EQ(rows[0].status, "ok");
}

TEST(Analyze, WindowSweepAoiMonotone) {
  const auto rows = analyze(load("bounds_equal_rates"));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_GT(rows[i].analytic.mean_aoi, rows[i - 1].analytic.mean_aoi);
  }
}

TEST(Analyze, CaseRatios) {
  const std::pair<const char*, double> cases[] = {{"bounds_equal_rates", 1.0 / 3.0}, {"bounds_heavy_load", 1.0 / 11.0},
                                                   {"bounds_slow_fetch", 1.0 / 5.0}};
  for (const auto& [name, ratio] : cases) {
    for (const auto& r : analyze(load(name))) {
      const auto& b = *r.analytic.bounds;
      EXPECT_NEAR(*b.d_min / *b.d_max, ratio, 1e-12) << name;
    }
  }
}

TEST(Analyze, MultiItemRowsAndUnstableToken) {
  auto s = small_sim();
  s.catalog.total_arrival_rate = 900.0;
  s.catalog.window = 0.002;
  const auto rows = analyze(s);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[1].item_id, "1");
  EXPECT_EQ(rows[0].status, kUnstable);
  const auto csv = split_csv(analyze_csv(rows));
  EXPECT_EQ(csv[1][6], kUnstable);
  EXPECT_EQ(csv[1][7], kUnstable);
}

TEST(Csv, SimulateSchema) {
  const auto rows = simulate(small_sim());
  const auto csv = split_csv(simulate_csv(rows));
  const std::vector<std::string> header{
      "sweep_param", "sweep_value", "item_id", "analytic_p", "analytic_refresh_freq",
      "analytic_aoi_s", "analytic_delay_s", "sim_refresh_frac", "sim_refresh_frac_hw",
      "sim_aoi_s", "sim_aoi_hw", "sim_delay_s", "sim_delay_hw", "status"};
  EXPECT_EQ(csv[0], header);
  ASSERT_EQ(csv.size(), 5u);
  for (std::size_t i = 1; i < csv.size(); ++i) {
    ASSERT_EQ(csv[i].size(), header.size());
    for (std::size_t c = 3; c + 1 < header.size(); ++c) EXPECT_TRUE(is_decimal(csv[i][c])) << csv[i][c];
  }
  EXPECT_TRUE(rows[0].simulated.has_value());
  EXPECT_TRUE(rows[2].simulated.has_value());
}

TEST(Csv, AnalyzeAndOptimizeSchemas) {
  const auto a = split_csv(analyze_csv(analyze(small_sim())));
  EXPECT_EQ(a[0][7], "analytic_d_max_s");
  EXPECT_EQ(a[0][8], "analytic_d_min_s");
  EXPECT_EQ(a[2][7], kNotApplicable);

  auto s = small_sim("[optimize]\naoi_budget = 0.05\n");
  const auto o = split_csv(optimize_csv(optimize(s)));
  EXPECT_EQ(o[0][4], "window_s");
  EXPECT_EQ(o[1][4], kNotApplicable);
  EXPECT_TRUE(is_decimal(o[2][4]));
  EXPECT_EQ(o[1].back(), "optimal");
  EXPECT_EQ(o[1][12], kNotApplicable);
}

TEST(Simulate, DivergenceFlagsRow) {
  auto s = small_sim();
  s.catalog.total_arrival_rate = 3000.0;
  s.simulation.queue_cap = 100;
  const auto rows = simulate(s);
  EXPECT_EQ(rows[0].status, "unstable+queue_divergence");
  EXPECT_FALSE(rows[0].simulated.has_value());
  EXPECT_EQ(rows[1].status, rows[0].status);
}

TEST(Simulate, DisabledSimulationIsAnalyzeOnly) {
  auto s = small_sim("");
  s.simulation.enabled = false;
  for (const auto& r : simulate(s)) EXPECT_FALSE(r.simulated.has_value());
}

TEST(Optimize, InfeasibleBudgetReported) {
  auto s = small_sim("[optimize]\naoi_budget = 0.001\n");
  const auto rows = optimize(s);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].status, "infeasible_budget");
  const auto dir = std::filesystem::temp_directory_path() / "aoicache_infeasible";
  const auto out = run_command(s, "optimize", dir);
  EXPECT_NE(out.summary.find("smallest feasible budget"), std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST(Optimize, OptimalWindowOrderings) {
  auto s = load("optimal_windows");
  s.optimize->simulate = false;
  const auto rows = optimize(s);
  ASSERT_EQ(rows.size(), 11u);
  EXPECT_EQ(rows[0].status, "optimal");
  for (std::size_t i = 2; i < rows.size(); ++i) {
    EXPECT_LE(*rows[i - 1].window, *rows[i].window);
    EXPECT_GE(rows[i - 1].analytic.refresh_frequency, rows[i].analytic.refresh_frequency);
    EXPECT_LE(rows[i - 1].analytic.p, rows[i].analytic.p);
  }
}

TEST(Optimize, DelayGrowsWithItemsAndFallsWithConcentration) {
  auto system_delays = [](const Scenario& s) {
    std::vector<double> d;
    for (const auto& r : optimize(s)) {
      if (r.item_id == kAllItems) d.push_back(*r.analytic.mean_delay);
    }
    return d;
  };
  const auto by_count = system_delays(load("optimal_vs_item_count"));
  for (std::size_t i = 1; i < by_count.size(); ++i) EXPECT_GE(by_count[i], by_count[i - 1]);
  const auto by_nu = system_delays(load("optimal_vs_zipf"));
  for (std::size_t i = 1; i < by_nu.size(); ++i) EXPECT_LE(by_nu[i], by_nu[i - 1]);
}

TEST(RunCommand, WritesNamedCsvDeterministically) {
  const auto dir = std::filesystem::temp_directory_path() / "aoicache_run_command";
  std::filesystem::remove_all(dir);
  auto s = small_sim();
  s.name = "tiny";
  const auto a = run_command(s, "simulate", dir);
  EXPECT_EQ(a.csv_path.filename(), "tiny_5.csv");
  const auto first = slurp(a.csv_path);
  run_command(s, "simulate", dir);
  EXPECT_EQ(slurp(a.csv_path), first);
  EXPECT_FALSE(a.summary.empty());

  const auto r = run_command(s, "rates", dir);
  EXPECT_EQ(slurp(r.csv_path).substr(0, 11), "mu_d_per_s,");
  EXPECT_THROW(run_command(s, "plot", dir), InvalidArgument);
  std::filesystem::remove_all(dir);
}
