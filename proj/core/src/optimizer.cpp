#include "aoicache/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "aoicache/error.hpp"

namespace aoicache::optimizer {

namespace {

// Budgets within this distance (seconds) of the floor count as the floor.
constexpr double kBoundaryTolerance = 1e-12;

// 1/x - 1/(e^x - 1), which tends to 1/2 as x -> 0.
double cycle_term(double x) {
  if (x < 1e-2) {
    const double x2 = x * x;
    return 0.5 - x / 12.0 + x * x2 / 720.0 - x * x2 * x2 / 30240.0;
  }
  return 1.0 / x - 1.0 / std::expm1(x);
}

// d/dx (1 - e^-x) / x.
double refresh_probability_slope(double x) {
  if (x < 1e-2) {
    return -0.5 + x * (1.0 / 3.0 - x * (1.0 / 8.0 - x * (1.0 / 30.0 - x / 144.0)));
  }
  const double e = std::exp(-x);
  return (x * e - 1.0 + e) / (x * x);
}

double nbar_at_price(double lambda_c, double nu0) {
  if (nu0 >= stationarity_price(lambda_c, kMinNbar)) return 0.0;
  return invert_price(lambda_c, nu0);
}

std::vector<double> windows_from(const OptProblem& problem, std::span<const double> nbars) {
  const double floor = problem.rates().aoi_floor();
  std::vector<double> windows(nbars.size());
  for (std::size_t c = 0; c < nbars.size(); ++c) {
    windows[c] = floor + nbars[c] / problem.arrival_rates()[c];
  }
  return windows;
}

// Fills windows, objective, slack and the prediction from result.nbars.
void finish(const OptProblem& problem, OptResult& result) {
  result.windows = windows_from(problem, result.nbars);
  result.objective = objective(problem, result.nbars);
  result.budget_slack = budget(problem) - budget_consumption(result.nbars);
  result.predicted = analytics::multi_source_predict(
      catalog_for(problem.arrival_rates(), result.windows), problem.rates());
  if (result.status == OptStatus::optimal && !result.predicted->stable()) {
    result.status = OptStatus::unstable_at_optimum;
  }
}

// Handles the cases that need no search. Returns true when `result` is final.
bool solve_trivial(const OptProblem& problem, OptResult& result) {
  const double floor = problem.rates().aoi_floor();
  if (problem.aoi_budget() < floor - kBoundaryTolerance) {
    result.status = OptStatus::infeasible_budget;
    result.budget_slack = budget(problem) - static_cast<double>(problem.size());
    return true;
  }
  if (problem.aoi_budget() <= floor + kBoundaryTolerance) {
    result.status = OptStatus::boundary_all_refresh;
    result.nbars.assign(problem.size(), 0.0);
    result.dual_price = std::numeric_limits<double>::infinity();
    finish(problem, result);
    return true;
  }
  return false;
}

}  // namespace

OptProblem::OptProblem(std::vector<double> arrival_rates, ServiceRates rates, double aoi_budget,
                       std::optional<double> total_arrival_rate)
    : arrival_rates_(std::move(arrival_rates)), rates_(rates), aoi_budget_(aoi_budget) {
  if (arrival_rates_.empty()) throw InvalidArgument("OptProblem: no items");
  for (double lambda : arrival_rates_) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
      throw InvalidArgument(fmt::format("OptProblem: item rate {} must be positive", lambda));
    }
  }
  if (!(aoi_budget > 0.0) || !std::isfinite(aoi_budget)) {
    throw InvalidArgument("OptProblem: aoi_budget must be positive");
  }
  total_arrival_rate_ = std::accumulate(arrival_rates_.begin(), arrival_rates_.end(), 0.0);
  if (total_arrival_rate) {
    if (std::abs(*total_arrival_rate - total_arrival_rate_) > 1e-9 * total_arrival_rate_) {
      throw InvalidArgument(fmt::format("OptProblem: total rate {} != sum of item rates {}",
                                        *total_arrival_rate, total_arrival_rate_));
    }
  }
}

std::string_view to_string(OptStatus status) {
  switch (status) {
    case OptStatus::optimal:
      return "optimal";
    case OptStatus::boundary_all_refresh:
      return "boundary_all_refresh";
    case OptStatus::infeasible_budget:
      return "infeasible_budget";
    case OptStatus::unstable_at_optimum:
      return "unstable_at_optimum";
  }
  return "unknown";
}

double budget(const OptProblem& problem) {
  const double total = problem.total_arrival_rate();
  // Written as C + 2 Lambda (A - floor) so that A == floor gives C exactly.
  return static_cast<double>(problem.size()) +
         2.0 * total * (problem.aoi_budget() - problem.rates().aoi_floor());
}

double budget_consumption(std::span<const double> nbars) {
  double sum = 0.0;
  for (double n : nbars) sum += n + std::exp(-n);
  return sum;
}

double objective(const OptProblem& problem, std::span<const double> nbars) {
  double sum = 0.0;
  for (std::size_t c = 0; c < nbars.size(); ++c) {
    sum += problem.arrival_rates()[c] * analytics::refresh_probability(nbars[c]);
  }
  return sum;
}

double stationarity_price(double lambda_c, double nbar) {
  if (!(nbar > 0.0)) throw InvalidArgument("stationarity_price: nbar must be > 0");
  return lambda_c * cycle_term(nbar) / nbar;
}

double invert_price(double lambda_c, double nu0) {
  if (!(nu0 > 0.0) || !std::isfinite(nu0)) {
    throw InvalidArgument("invert_price: price must be positive and finite");
  }
  double lo = kMinNbar;
  double hi = kMaxNbar;
  if (stationarity_price(lambda_c, lo) < nu0 || stationarity_price(lambda_c, hi) > nu0) {
    throw BracketFailure(fmt::format(
        "invert_price: no nbar in [{}, {}] has price {} for lambda = {}", lo, hi, nu0, lambda_c));
  }
  for (int i = 0; i < 4000; ++i) {
    // Geometric steps first: the bracket spans 21 decades.
    const double mid = hi > 4.0 * lo ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (stationarity_price(lambda_c, mid) > nu0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

OptResult solve(const OptProblem& problem) {
  OptResult result;
  if (solve_trivial(problem, result)) return result;

  const auto lambdas = problem.arrival_rates();
  const double target = budget(problem);
  std::vector<double> nbars(lambdas.size());
  auto consumption_at = [&](double nu0) {
    for (std::size_t c = 0; c < lambdas.size(); ++c) nbars[c] = nbar_at_price(lambdas[c], nu0);
    return budget_consumption(nbars);
  };

  // Consumption falls from +inf to C as the price rises, and target > C.
  double hi = *std::max_element(lambdas.begin(), lambdas.end()) * 1e6;
  for (int i = 0; consumption_at(hi) >= target; ++i) {
    if (i > 2000) throw BracketFailure("solve: no upper price bracket");
    hi *= 2.0;
  }
  double lo = hi;
  for (int i = 0; consumption_at(lo) <= target; ++i) {
    if (i > 4000) throw BracketFailure("solve: no lower price bracket");
    lo *= 0.5;
  }
  for (int i = 0; i < 4000; ++i) {
    const double mid = hi > 4.0 * lo ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (consumption_at(mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  // The upper end keeps the budget satisfied.
  consumption_at(hi);
  result.status = OptStatus::optimal;
  result.dual_price = hi;
  result.nbars = nbars;
  finish(problem, result);
  return result;
}

namespace {

// Euclidean projection onto {x >= 0, sum_c (x_c + e^-x_c) <= target}. With
// multiplier mu each coordinate solves x + mu (1 - e^-x) = y_c.
class BudgetProjection {
 public:
  explicit BudgetProjection(double target) : target_(target) {}

  std::vector<double> operator()(std::span<const double> y) const {
    std::vector<double> x(y.size());
    for (std::size_t c = 0; c < y.size(); ++c) x[c] = std::max(y[c], 0.0);
    if (budget_consumption(x) <= target_) return x;

    double mu_lo = 0.0;
    double mu_hi = 1.0;
    for (int i = 0; consumption(y, mu_hi, x) > target_; ++i) {
      if (i > 2000) throw NonConvergence("projection: multiplier bracket not found");
      mu_lo = mu_hi;
      mu_hi *= 2.0;
    }
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (mu_lo + mu_hi);
      if (mid <= mu_lo || mid >= mu_hi) break;
      if (consumption(y, mid, x) > target_) {
        mu_lo = mid;
      } else {
        mu_hi = mid;
      }
    }
    consumption(y, mu_hi, x);
    return x;
  }

 private:
  static double coordinate(double y, double mu) {
    if (y <= 0.0) return 0.0;
    // g(x) = x + mu (1 - e^-x) - y is increasing and concave; Newton from
    // x = y lands left of the root and then climbs monotonically.
    double x = y;
    for (int i = 0; i < 100; ++i) {
      const double e = std::exp(-x);
      const double step = (x + mu * (1.0 - e) - y) / (1.0 + mu * e);
      x = std::max(x - step, 0.0);
      if (std::abs(step) <= 1e-16 * std::max(1.0, x)) break;
    }
    return x;
  }

  static double consumption(std::span<const double> y, double mu, std::vector<double>& x) {
    for (std::size_t c = 0; c < y.size(); ++c) x[c] = coordinate(y[c], mu);
    return budget_consumption(x);
  }

  double target_;
};

}  // namespace

OptResult solve_oracle(const OptProblem& problem, const OracleOptions& options) {
  OptResult result;
  if (solve_trivial(problem, result)) return result;

  const auto lambdas = problem.arrival_rates();
  const std::size_t n = lambdas.size();
  const BudgetProjection project(budget(problem));

  auto gradient = [&](const std::vector<double>& x) {
    std::vector<double> g(n);
    for (std::size_t c = 0; c < n; ++c) g[c] = lambdas[c] * refresh_probability_slope(x[c]);
    return g;
  };

  std::vector<double> x(n, 0.0);
  double fx = objective(problem, x);
  double step = 1.0;
  std::deque<double> history{fx};
  bool converged = false;

  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    const auto g = gradient(x);
    std::vector<double> y(n);
    std::vector<double> candidate;
    double f_candidate = fx;
    bool accepted = false;
    for (int halving = 0; halving < 200; ++halving) {
      for (std::size_t c = 0; c < n; ++c) y[c] = x[c] - step * g[c];
      candidate = project(y);
      f_candidate = objective(problem, candidate);
      double linear = 0.0;
      double dist2 = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        const double d = candidate[c] - x[c];
        linear += g[c] * d;
        dist2 += d * d;
      }
      if (f_candidate <= fx + linear + dist2 / (2.0 * step)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (accepted) {
      x = std::move(candidate);
      fx = f_candidate;
      step *= 2.0;
    }

    history.push_back(fx);
    if (history.size() > options.stall_window + 1) history.pop_front();
    if (history.size() == options.stall_window + 1 &&
        history.front() - fx <= options.stall_tolerance * std::max(1.0, std::abs(fx))) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw NonConvergence(fmt::format("solve_oracle: no convergence in {} iterations",
                                     options.max_iterations));
  }

  // Multiplier estimate: -d(objective)/d(consumption) averaged over the
  // items away from the boundary.
  double price_sum = 0.0;
  std::size_t priced = 0;
  for (std::size_t c = 0; c < n; ++c) {
    if (x[c] <= 1e-10) continue;
    price_sum += -lambdas[c] * refresh_probability_slope(x[c]) / -std::expm1(-x[c]);
    ++priced;
  }
  result.status = OptStatus::optimal;
  result.dual_price = priced > 0 ? price_sum / static_cast<double>(priced) : 0.0;
  result.nbars = std::move(x);
  finish(problem, result);
  return result;
}

ClassedResult solve_classes(std::span<const OptProblem> classes) {
  ClassedResult out;
  std::vector<double> lambdas;
  std::vector<double> windows;
  bool feasible = !classes.empty();
  for (const auto& problem : classes) {
    if (!(problem.rates() == classes.front().rates())) {
      throw InvalidArgument("solve_classes: every class must share one set of service rates");
    }
  }
  for (const auto& problem : classes) {
    out.classes.push_back(solve(problem));
    const auto& r = out.classes.back();
    if (r.windows.empty()) {
      feasible = false;
      continue;
    }
    lambdas.insert(lambdas.end(), problem.arrival_rates().begin(), problem.arrival_rates().end());
    windows.insert(windows.end(), r.windows.begin(), r.windows.end());
  }
  if (feasible) {
    out.joint = analytics::multi_source_predict(catalog_for(lambdas, windows),
                                                classes.front().rates());
  }
  return out;
}

model::Catalog catalog_for(std::span<const double> arrival_rates, std::span<const double> windows) {
  if (arrival_rates.size() != windows.size()) {
    throw InvalidArgument("catalog_for: one window per item required");
  }
  const double total = std::accumulate(arrival_rates.begin(), arrival_rates.end(), 0.0);
  std::vector<model::CatalogItem> items;
  items.reserve(arrival_rates.size());
  for (std::size_t c = 0; c < arrival_rates.size(); ++c) {
    items.push_back({static_cast<int>(c + 1), arrival_rates[c] / total, windows[c]});
  }
  return model::Catalog(std::move(items), total);
}

}  // namespace aoicache::optimizer
