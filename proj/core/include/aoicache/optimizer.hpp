#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "aoicache/analytics.hpp"
#include "aoicache/model.hpp"

namespace aoicache::optimizer {

using model::ServiceRates;

// Window design problem: choose W_c >= aoi_floor for every item to minimize
// the mean delay while the request-weighted mean AoI stays <= aoi_budget.
// Since the delay is increasing in the mean refresh probability, this is the
// same as minimizing sum_c lambda_c p(nbar_c) subject to
//   sum_c (nbar_c + e^-nbar_c) <= 2 Lambda A + C - 2 Lambda floor,  nbar_c >= 0.
class OptProblem {
 public:
  // Throws InvalidArgument unless every rate is positive and finite and the
  // budget is positive. When total_arrival_rate is given it must equal the
  // sum of the item rates within 1e-9 relative.
  OptProblem(std::vector<double> arrival_rates, ServiceRates rates, double aoi_budget,
             std::optional<double> total_arrival_rate = std::nullopt);

  std::span<const double> arrival_rates() const { return arrival_rates_; }
  std::size_t size() const { return arrival_rates_.size(); }
  const ServiceRates& rates() const { return rates_; }
  double aoi_budget() const { return aoi_budget_; }
  double total_arrival_rate() const { return total_arrival_rate_; }

 private:
  std::vector<double> arrival_rates_;
  ServiceRates rates_;
  double aoi_budget_;
  double total_arrival_rate_;
};

enum class OptStatus {
  optimal,
  boundary_all_refresh,  // budget equals the AoI floor: every W_c at the floor
  infeasible_budget,     // budget below the AoI floor
  unstable_at_optimum,   // solved, but the queue is unstable at the windows
};

std::string_view to_string(OptStatus status);

struct OptResult {
  OptStatus status = OptStatus::optimal;
  std::vector<double> windows;  // seconds; empty when infeasible
  std::vector<double> nbars;
  double dual_price = 0.0;       // multiplier of the AoI budget constraint
  double budget_slack = 0.0;     // budget() minus consumed budget
  double objective = 0.0;        // sum_c lambda_c p_c
  std::optional<analytics::MultiPrediction> predicted;  // absent when infeasible
};

// Right-hand side of the budget constraint in nbar form:
//   2 Lambda A + C - 2 Lambda (1 / mu_r + 1 / mu_d).
// Equals C exactly when the AoI budget equals the floor.
double budget(const OptProblem& problem);

// sum_c (nbar_c + e^-nbar_c).
double budget_consumption(std::span<const double> nbars);

// sum_c lambda_c p(nbar_c).
double objective(const OptProblem& problem, std::span<const double> nbars);

// Multiplier that makes nbar stationary for an item of rate lambda_c:
//   (lambda_c / nbar) (1 / nbar - 1 / (e^nbar - 1)).
// Positive, strictly decreasing in nbar, and ~ lambda_c / (2 nbar) as
// nbar -> 0. Throws InvalidArgument for nbar <= 0.
double stationarity_price(double lambda_c, double nbar);

// The search interval of invert_price.
inline constexpr double kMinNbar = 1e-15;
inline constexpr double kMaxNbar = 1e6;

// Unique nbar with stationarity_price(lambda_c, nbar) == nu0, by bisection
// down to floating-point resolution. Throws BracketFailure when the root is
// not inside [kMinNbar, kMaxNbar].
double invert_price(double lambda_c, double nu0);

// Dual bisection on the budget multiplier. Infeasible and boundary budgets are
// reported through status, not thrown.
OptResult solve(const OptProblem& problem);

struct OracleOptions {
  std::size_t max_iterations = 500'000;
  std::size_t stall_window = 100;   // iterations compared for improvement
  double stall_tolerance = 1e-10;   // relative objective improvement
};

// Independent check of solve(): projected gradient descent on nbar with
// backtracking, projecting onto {nbar >= 0, consumption <= budget} exactly.
// Throws NonConvergence when max_iterations is hit first. dual_price is
// estimated from the gradients at the returned point.
OptResult solve_oracle(const OptProblem& problem, const OracleOptions& options = {});

// Several request classes with their own AoI budgets sharing one queue (and
// so one set of service rates; InvalidArgument otherwise). Each
// class is solved on its own; the joint prediction covers the union of items
// in class order.
struct ClassedResult {
  std::vector<OptResult> classes;
  std::optional<analytics::MultiPrediction> joint;  // absent if a class is infeasible
};

ClassedResult solve_classes(std::span<const OptProblem> classes);

// Catalog for the given item rates and windows (ids 1..C, popularity
// lambda_c / Lambda).
model::Catalog catalog_for(std::span<const double> arrival_rates, std::span<const double> windows);

}  // namespace aoicache::optimizer
