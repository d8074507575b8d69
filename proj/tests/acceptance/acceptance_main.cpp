// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Detail lines start with two spaces.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "aoicache/analytics.hpp"
#include "aoicache/desim.hpp"
#include "aoicache/error.hpp"
#include "aoicache/experiment.hpp"
#include "aoicache/model.hpp"
#include "aoicache/optimizer.hpp"
#include "aoicache/scenario.hpp"
#include "../oracles.hpp"

using namespace aoicache;
using analytics::LoadPoint;
using model::Catalog;
using model::ServiceRates;

namespace {

constexpr std::size_t kReplications = 8;
constexpr std::size_t kPerReplication = 100'000;

struct Check {
  bool ok = true;
  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      fmt::print("  fail: {}\n", what);
    }
  }
};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

desim::SimReport pooled(const ServiceRates& rates, const Catalog& catalog,
                        desim::Policy policy = desim::Policy::freshness_window,
                        std::uint64_t seed = 20240601) {
  desim::SimConfig cfg{seed, rates, catalog, kPerReplication, 0.1, policy};
  return desim::replicate(cfg, kReplications);
}

bool criterion_1(Check& c) {
  const ServiceRates eq(1000.0, 1000.0);
  const ServiceRates half(1000.0, 500.0);
  auto ratio = [](const ServiceRates& r, double lambda) {
    const auto b = analytics::delay_bounds(r, lambda);
    return *b.d_min / *b.d_max;
  };
  auto capacity = [](const ServiceRates& r) { return r.mu_r() * r.mu_d() / (r.mu_r() + r.mu_d()); };
  const double r1 = ratio(eq, 0.5 * capacity(eq));
  const double r2 = ratio(eq, 0.9 * capacity(eq));
  const double r3 = ratio(half, 0.5 * capacity(half));
  fmt::print("  d_min/d_max: equal rates half load {:.15f}, equal rates 0.9 load {:.15f}, half-rate fetch half load {:.15f}\n", r1, r2, r3);
  c.expect(std::abs(r1 - 1.0 / 3.0) <= 1e-12, "equal rates, half load");
  c.expect(std::abs(r2 - 1.0 / 11.0) <= 1e-12, "equal rates, 0.9 load");
  c.expect(std::abs(r3 - 1.0 / 5.0) <= 1e-12, "half-rate fetch, half load");

  for (double w : {eq.aoi_floor(), 0.005, 0.05, 1.0}) {
    const double lo = analytics::mean_aoi_single(LoadPoint(1e-9, w, eq));
    const double hi = analytics::mean_aoi_single(LoadPoint(1e9, w, eq));
    const double hi_limit = 0.5 * (w + eq.aoi_floor());
    fmt::print("  W = {} s: |A(1e-9) - floor| = {:.2e}, |A(1e9) - (W + floor)/2| = {:.2e}\n", w,
               std::abs(lo - eq.aoi_floor()), std::abs(hi - hi_limit));
    c.expect(std::abs(lo - eq.aoi_floor()) <= 1e-9, "low-rate AoI limit");
    c.expect(std::abs(hi - hi_limit) <= 1e-9, "high-rate AoI limit");
  }
  c.expect(analytics::refresh_probability(0.0) == 1.0, "refresh_probability(0) == 1");
  return c.ok;
}

bool criterion_2(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  for (double n : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0}) {
    const double closed = analytics::refresh_probability(n);
    const double brute = oracle::poisson_refresh_probability(n, 1e-12);
    fmt::print("  nbar {:>4}: closed {:.15f} brute {:.15f} diff {:.1e}\n", n, closed, brute,
               std::abs(closed - brute));
    c.expect(std::abs(closed - brute) <= 1e-9, fmt::format("nbar {}", n));
  }
  const double t = seconds_since(t0);
  fmt::print("  runtime {:.3f} s\n", t);
  c.expect(t < 1.0, "runtime < 1 s");
  return c.ok;
}

bool criterion_3(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const double eps = 1e-9;
  std::size_t checks = 0;

  for (double n = 0.01; n <= 50.0; n += 0.01) {
    const double h = 0.005;
    const double a = analytics::refresh_probability(n - h), b = analytics::refresh_probability(n),
                 d = analytics::refresh_probability(n + h);
    c.expect(d < b, fmt::format("p decreasing at {}", n));
    c.expect(a - 2 * b + d >= -eps, fmt::format("p convex at {}", n));
    checks += 2;
  }

  for (const ServiceRates& r : {ServiceRates(1000.0, 1000.0), ServiceRates(1000.0, 500.0),
                                ServiceRates(oracle::kReferenceMuD, oracle::kReferenceMuR)}) {
    const double f = r.aoi_floor();
    const double stable_lambda = 0.95 / (1.0 / r.mu_d());
    for (double lambda : {1.0, 50.0, 200.0, 0.9 * stable_lambda}) {
      auto aoi = [&](double w) { return analytics::mean_aoi_single(LoadPoint(lambda, w, r)); };
      const double h = 1e-4;
      for (double w = f + h; w <= 1.0; w += 2.5e-3) {
        const double a = aoi(w - h), b = aoi(w), d = aoi(w + h);
        c.expect(d - b >= -eps && d - b <= 0.5 * h + eps, fmt::format("A slope in [0, 1/2] at W={}", w));
        c.expect(a - 2 * b + d >= -eps, fmt::format("A convex in W at {}", w));
        checks += 2;
      }
      const double far = oracle::derivative(aoi, 100.0, 1e-2);
      c.expect(std::abs(far - 0.5) <= 1e-6, "A slope -> 1/2");

      const auto bounds = analytics::delay_bounds(r, lambda);
      double prev = INFINITY;
      for (double w = f; w <= 100.0; w *= 1.02) {
        const auto d = analytics::mean_delay_single(LoadPoint(lambda, w, r));
        if (!d) continue;
        c.expect(*d <= prev + eps, fmt::format("D nonincreasing in W at {}", w));
        c.expect(bounds.d_min && *d >= *bounds.d_min - eps, "D >= d_min");
        if (bounds.d_max) c.expect(*d <= *bounds.d_max + eps, "D <= d_max");
        prev = *d;
        checks += 3;
      }
    }
    for (double w : {f * 1.5, 0.01, 0.1, 1.0}) {
      auto aoi = [&](double l) { return analytics::mean_aoi_single(LoadPoint(l, w, r)); };
      for (double l = 2.0; l <= 5000.0; l *= 1.05) {
        const double h = 1e-3 * l;
        const double a = aoi(l - h), b = aoi(l), d = aoi(l + h);
        c.expect(d >= b - eps, fmt::format("A increasing in lambda at {}", l));
        c.expect(a - 2 * b + d <= eps, fmt::format("A concave in lambda at {}", l));
        checks += 2;
      }
    }
  }
  const double t = seconds_since(t0);
  fmt::print("  {} sign checks, runtime {:.3f} s\n", checks, t);
  c.expect(t < 5.0, "runtime < 5 s");
  return c.ok;
}

bool criterion_4(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const ServiceRates rates(1000.0, 1000.0);
  const double lambda = 400.0;
  for (double w : {1.2 * rates.aoi_floor(), 0.005, 0.01, 0.02, 0.05}) {
    const auto pred = analytics::predict_single(LoadPoint(lambda, w, rates));
    const auto sim = pooled(rates, Catalog::zipf(1, 0.0, lambda, w)).aggregate;
    const double dp = sim.refresh_fraction.mean - pred.refresh_probability;
    const double da = rel(sim.mean_aoi.mean, pred.mean_aoi);
    const double dd = rel(sim.mean_delay.mean, *pred.mean_delay);
    fmt::print("  W = {:.4f}: p sim {:.4f} eq {:.4f} ({:+.4f}); AoI rel err {:.4f}; delay rel "
               "err {:.4f}\n",
               w, sim.refresh_fraction.mean, pred.refresh_probability, dp, da, dd);
    c.expect(std::abs(dp) <= 0.03, fmt::format("W={} refresh fraction", w));
    c.expect(da <= 0.05, fmt::format("W={} mean AoI", w));
    c.expect(dd <= 0.10, fmt::format("W={} mean delay", w));
  }
  const double t = seconds_since(t0);
  fmt::print("  runtime {:.1f} s\n", t);
  c.expect(t < 120.0, "runtime < 2 min");
  return c.ok;
}

// Per-item AoI, system delay and P for C uniform items at a common window.
void multi_source_point(Check* c, const ServiceRates& rates, double lambda, double w) {
  const auto cat = Catalog::zipf(10, 0.0, lambda, w);
  const auto pred = analytics::multi_source_predict(cat, rates);
  double worst_aoi = 0.0;
  desim::SimReport sim;
  try {
    desim::SimConfig cfg{20240602, rates, cat, kPerReplication, 0.1,
                         desim::Policy::freshness_window};
    sim = desim::replicate(cfg, kReplications);
  } catch (const QueueDivergence& e) {
    fmt::print("  Lambda = {} W = {}: simulation diverged ({})\n", lambda, w, e.what());
    if (c) c->expect(false, fmt::format("W={} simulation diverged", w));
    return;
  }
  for (std::size_t i = 0; i < cat.size(); ++i) {
    worst_aoi = std::max(worst_aoi, rel(sim.items[i].stats.mean_aoi.mean, pred.items[i].mean_aoi));
  }
  const double dp = sim.aggregate.refresh_fraction.mean - pred.system.refresh_probability;
  const std::string delay_text =
      pred.system.mean_delay
          ? fmt::format("{:.4f}", rel(sim.aggregate.mean_delay.mean, *pred.system.mean_delay))
          : fmt::format("n/a (analytic queue unstable, sim {:.4f} s)", sim.aggregate.mean_delay.mean);
  fmt::print("  Lambda = {} W = {:.4f}: worst item AoI rel err {:.4f}; P sim {:.4f} eq {:.4f}; "
             "delay rel err {}\n",
             lambda, w, worst_aoi, sim.aggregate.refresh_fraction.mean,
             pred.system.refresh_probability, delay_text);
  if (!c) return;
  c->expect(worst_aoi <= 0.05, fmt::format("W={} per-item AoI", w));
  c->expect(std::abs(dp) <= 0.03, fmt::format("W={} P", w));
  c->expect(pred.system.mean_delay.has_value(),
            fmt::format("W={} analytic delay finite (Lambda E[X] < 1)", w));
  if (pred.system.mean_delay) {
    c->expect(rel(sim.aggregate.mean_delay.mean, *pred.system.mean_delay) <= 0.10,
              fmt::format("W={} system delay", w));
  }
}

bool criterion_5(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const ServiceRates rates(1000.0, 1000.0);
  const std::vector<double> windows{0.005, 0.01, 0.02, 0.05, 0.1};
  for (double w : windows) multi_source_point(&c, rates, 2000.0, w);
  const double t = seconds_since(t0);
  fmt::print("  runtime {:.1f} s\n", t);
  c.expect(t < 120.0, "runtime < 2 min");
  fmt::print("  diagnostic only, Lambda = 400 (stable):\n");
  for (double w : windows) multi_source_point(nullptr, rates, 400.0, w);
  return c.ok;
}

bool criterion_6(Check& c) {
  const ServiceRates rates(1000.0, 1000.0);
  for (double w : {0.005, 0.01, 0.05}) {
    for (double lambda : {50.0, 100.0, 200.0, 300.0, 400.0, 450.0}) {
      const auto cat = Catalog::zipf(1, 0.0, lambda, w);
      const double eager = pooled(rates, cat, desim::Policy::always_refresh).aggregate.mean_delay.mean;
      const double windowed = pooled(rates, cat).aggregate.mean_delay.mean;
      fmt::print("  W = {} Lambda = {}: eager {:.5f} s, windowed {:.5f} s\n", w, lambda, eager,
                 windowed);
      c.expect(eager >= windowed, fmt::format("W={} Lambda={} dominance", w, lambda));
    }
  }

  const double heavy = 0.9 * 500.0;
  const auto b = analytics::delay_bounds(rates, heavy);
  const double analytic = 1.0 - *b.d_min / *b.d_max;
  fmt::print("  analytic reduction at Lambda = {}: {:.12f} (10/11 = {:.12f})\n", heavy, analytic,
             10.0 / 11.0);
  c.expect(std::abs(analytic - 10.0 / 11.0) <= 1e-12, "analytic reduction 10/11");

  const double f = rates.aoi_floor();
  const double at_floor = pooled(rates, Catalog::zipf(1, 0.0, heavy, f)).aggregate.mean_delay.mean;
  const double at_50 = pooled(rates, Catalog::zipf(1, 0.0, heavy, 50.0 * f)).aggregate.mean_delay.mean;
  const double eager =
      pooled(rates, Catalog::zipf(1, 0.0, heavy, f), desim::Policy::always_refresh)
          .aggregate.mean_delay.mean;
  const double reduction = 1.0 - at_50 / at_floor;
  fmt::print("  simulated delay: W = floor {:.5f} s, W = 50 floor {:.5f} s, reduction {:.4f} "
             "(vs eager {:.4f})\n",
             at_floor, at_50, reduction, 1.0 - at_50 / eager);
  c.expect(reduction >= 0.60, "simulated reduction >= 60%");
  return c.ok;
}

bool criterion_7(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto scenario =
      expcli::load_scenario(std::filesystem::path(AOICACHE_PRESET_DIR) / "optimal_windows.scn");
  const auto rates = expcli::service_rates(scenario);
  const auto catalog = expcli::build_catalog(scenario, rates);
  const double budget_aoi = scenario.optimize->aoi_budget;
  fmt::print("  rates mu_d {:.3f} mu_r {:.3f}, C = {}, Lambda = {}, A = {}\n", rates.mu_d(),
             rates.mu_r(), catalog.size(), catalog.total_arrival_rate(), budget_aoi);

  const optimizer::OptProblem problem(catalog.arrival_rates(), rates, budget_aoi,
                                      catalog.total_arrival_rate());
  const auto r = optimizer::solve(problem);
  c.expect(r.status == optimizer::OptStatus::optimal,
           fmt::format("status {}", optimizer::to_string(r.status)));
  if (!r.predicted) return false;

  const double s = optimizer::budget(problem);
  const double active = std::abs(optimizer::budget_consumption(r.nbars) - s) / s;
  double kkt = 0.0;
  for (std::size_t i = 0; i < problem.size(); ++i) {
    if (r.nbars[i] <= 1e-10) continue;
    const double price = optimizer::stationarity_price(problem.arrival_rates()[i], r.nbars[i]);
    kkt = std::max(kkt, std::abs(price - r.dual_price) / r.dual_price);
  }
  fmt::print("  budget residual {:.2e} relative, KKT residual {:.2e} relative\n", active, kkt);
  c.expect(active <= 1e-6, "budget active");
  c.expect(kkt <= 1e-6, "KKT residual");

  const auto& items = r.predicted->items;
  for (std::size_t i = 1; i < items.size(); ++i) {
    c.expect(r.windows[i - 1] <= r.windows[i], fmt::format("window order at {}", i));
    c.expect(items[i - 1].refresh_frequency >= items[i].refresh_frequency,
             fmt::format("frequency order at {}", i));
    c.expect(items[i - 1].refresh_probability <= items[i].refresh_probability,
             fmt::format("probability order at {}", i));
  }
  fmt::print("  windows [ms]:");
  for (double w : r.windows) fmt::print(" {:.2f}", 1e3 * w);
  fmt::print("\n");

  const auto o = optimizer::solve_oracle(problem);
  const double agree = rel(o.objective, r.objective);
  fmt::print("  objective solve {:.12f} oracle {:.12f} rel diff {:.2e}\n", r.objective,
             o.objective, agree);
  c.expect(agree <= 1e-4, "solve vs oracle");

  const auto sim = pooled(rates, catalog.with_windows(r.windows)).aggregate;
  fmt::print("  simulated system AoI {:.5f} s (+- {:.5f}), limit {:.5f} s\n", sim.mean_aoi.mean,
             sim.mean_aoi.half_width(), 1.05 * budget_aoi);
  c.expect(sim.mean_aoi.mean <= 1.05 * budget_aoi, "simulated AoI within 5% of budget");

  const double t = seconds_since(t0);
  fmt::print("  runtime {:.1f} s\n", t);
  c.expect(t < 60.0, "runtime < 1 min");
  return c.ok;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

bool criterion_8(Check& c) {
  const auto root = std::filesystem::temp_directory_path() / "aoicache_acceptance";
  std::filesystem::remove_all(root);
  std::vector<std::filesystem::path> presets;
  for (const auto& entry : std::filesystem::directory_iterator(AOICACHE_PRESET_DIR)) {
    if (entry.path().extension() == ".scn") presets.push_back(entry.path());
  }
  std::sort(presets.begin(), presets.end());
  for (const auto& path : presets) {
    const auto scenario = expcli::load_scenario(path);
    const auto a = expcli::run_command(scenario, scenario.command, root / "a");
    const auto b = expcli::run_command(scenario, scenario.command, root / "b");
    const bool same = slurp(a.csv_path) == slurp(b.csv_path) && !slurp(a.csv_path).empty();
    fmt::print("  {:<22} {} bytes {}\n", scenario.name, slurp(a.csv_path).size(),
               same ? "identical" : "DIFFER");
    c.expect(same, scenario.name);
  }
  c.expect(presets.size() >= 10, "all presets found");
  std::filesystem::remove_all(root);
  return c.ok;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<bool(Check&)> run;
  };
  const std::vector<Criterion> criteria{
      {1, "closed-form special cases", criterion_1},
      {2, "refresh probability vs Poisson brute force", criterion_2},
      {3, "convexity and monotonicity suite", criterion_3},
      {4, "simulation vs analytics, single source", criterion_4},
      {5, "simulation vs analytics, multi source", criterion_5},
      {6, "eager refreshing baseline comparison", criterion_6},
      {7, "optimizer correctness on the ten-item Zipf instance", criterion_7},
      {8, "preset CSV determinism", criterion_8},
  };

  int failures = 0;
  for (const auto& cr : criteria) {
    fmt::print("[{}] {}\n", cr.id, cr.name);
    std::fflush(stdout);
    Check check;
    bool ok = false;
    try {
      ok = cr.run(check) && check.ok;
    } catch (const std::exception& e) {
      fmt::print("  error: {}\n", e.what());
    }
    fmt::print("{} {}: {}\n", ok ? "PASS" : "FAIL", cr.id, cr.name);
    std::fflush(stdout);
    failures += ok ? 0 : 1;
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
