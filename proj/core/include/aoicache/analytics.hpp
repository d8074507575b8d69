#pragma once

#include <optional>
#include <vector>

#include "aoicache/model.hpp"

namespace aoicache::analytics {

using model::Catalog;
using model::ServiceRates;

// A mean delay, or std::nullopt when the queue is unstable
// (arrival_rate * E[X] >= 1).
using MaybeDelay = std::optional<double>;

// Below this exponent magnitude the closed forms switch to series expansions.
inline constexpr double kSeriesThreshold = 1e-8;

// One single-source operating point: request rate, refreshing window, and the
// service rates. Throws InvalidArgument unless arrival_rate > 0 and
// window >= rates.aoi_floor().
class LoadPoint {
 public:
  LoadPoint(double arrival_rate, double window, ServiceRates rates);

  double arrival_rate() const { return arrival_rate_; }
  double window() const { return window_; }
  const ServiceRates& rates() const { return rates_; }

 private:
  double arrival_rate_;
  double window_;
  ServiceRates rates_;
};

struct Prediction {
  double nbar = 0.0;                 // expected direct serves per refresh cycle
  double refresh_probability = 1.0;  // p
  double refresh_frequency = 0.0;    // p * lambda, refreshes per second
  double mean_aoi = 0.0;             // seconds
  MaybeDelay mean_delay;             // seconds
  double service_time_mean = 0.0;
  double service_time_variance = 0.0;

  bool stable() const { return mean_delay.has_value(); }
};

// lambda * (W - aoi_floor).
double nbar(const LoadPoint& point);

// (1 - e^-nbar) / nbar, continuously extended to 1 at nbar = 0.
double refresh_probability(double nbar);

// p * lambda.
double refresh_frequency(const LoadPoint& point);

// Mean AoI of delivered content for one item:
//   A = (W + floor) / 2 - (1 - e^-nbar) / (2 lambda).
double mean_aoi_single(const LoadPoint& point);

// M/M/1 approximation of the mean sojourn time:
//   D = E[X] / (1 - lambda E[X]),  E[X] = p / mu_r + 1 / mu_d.
MaybeDelay mean_delay_single(const LoadPoint& point);

struct DelayBounds {
  MaybeDelay d_max;  // every request refreshes (W at the floor)
  MaybeDelay d_min;  // no request refreshes (W -> infinity)
};

// Throws InvalidArgument for a negative arrival rate. Lambda = 0 is allowed.
DelayBounds delay_bounds(const ServiceRates& rates, double arrival_rate);

struct ServiceMoments {
  double mean = 0.0;
  double variance = 0.0;

  double second_moment() const { return variance + mean * mean; }
};

// Mean and variance of X = T_D + I * T_R with P(I = 1) = p and independent
// exponential T_R, T_D. Accepts p in [0, 1].
ServiceMoments service_time_moments(double p, const ServiceRates& rates);

// Pollaczek-Khinchine mean sojourn time for the same two-phase service:
//   E[X] + lambda E[X^2] / (2 (1 - lambda E[X])).
MaybeDelay mg1_delay(double p, double arrival_rate, const ServiceRates& rates);

// Everything the closed forms say about a single-source operating point.
Prediction predict_single(const LoadPoint& point);

struct MultiPrediction {
  // Per item, in catalog order. Each item's mean_delay is the system delay
  // (one FIFO queue is shared) and its service moments use its own p_c.
  std::vector<Prediction> items;
  // refresh_probability is the request-weighted mean P, refresh_frequency is
  // P * Lambda, mean_aoi is (1 / Lambda) sum lambda_c A_c, nbar is the
  // request-weighted mean of the per-item nbar.
  Prediction system;

  bool stable() const { return system.stable(); }
};

// Multi-item predictions. Every p_c and A_c depends only on the item's own
// lambda_c and W_c; the delay couples all items through P. Throws
// InvalidArgument if a window is below the AoI floor. Instability is reported
// through system.mean_delay, never thrown.
MultiPrediction multi_source_predict(const Catalog& catalog, const ServiceRates& rates);

}  // namespace aoicache::analytics
