#include "aoicache/analytics.hpp"

#include <cmath>

#include <fmt/format.h>

#include "aoicache/error.hpp"

namespace aoicache::analytics {

namespace {

// 1 - p(x): the fraction of a refresh cycle's requests served from cache.
// The direct form cancels badly for small x.
double directly_served_fraction(double x) {
  if (x < 1e-4) return x * (0.5 - x * (1.0 / 6.0 - x / 24.0));
  return 1.0 - refresh_probability(x);
}

MaybeDelay mm1_sojourn(double mean_service, double arrival_rate) {
  const double utilization = arrival_rate * mean_service;
  if (!(utilization < 1.0)) return std::nullopt;
  return mean_service / (1.0 - utilization);
}

}  // namespace

LoadPoint::LoadPoint(double arrival_rate, double window, ServiceRates rates)
    : arrival_rate_(arrival_rate), window_(window), rates_(rates) {
  if (!(arrival_rate > 0.0) || !std::isfinite(arrival_rate)) {
    throw InvalidArgument(fmt::format("arrival rate must be positive, got {}", arrival_rate));
  }
  if (!(window >= rates.aoi_floor()) || !std::isfinite(window)) {
    throw InvalidArgument(fmt::format("window {} s is below the AoI floor {} s", window,
                                      rates.aoi_floor()));
  }
}

double nbar(const LoadPoint& point) {
  return point.arrival_rate() * (point.window() - point.rates().aoi_floor());
}

double refresh_probability(double nbar) {
  if (!(nbar >= 0.0)) throw InvalidArgument("refresh_probability: nbar must be >= 0");
  if (nbar < kSeriesThreshold) return 1.0 - nbar * (0.5 - nbar / 6.0);
  return -std::expm1(-nbar) / nbar;
}

double refresh_frequency(const LoadPoint& point) {
  return refresh_probability(nbar(point)) * point.arrival_rate();
}

double mean_aoi_single(const LoadPoint& point) {
  const double floor = point.rates().aoi_floor();
  const double slack = point.window() - floor;
  return floor + 0.5 * slack * directly_served_fraction(nbar(point));
}

MaybeDelay mean_delay_single(const LoadPoint& point) {
  const double p = refresh_probability(nbar(point));
  return mm1_sojourn(service_time_moments(p, point.rates()).mean, point.arrival_rate());
}

DelayBounds delay_bounds(const ServiceRates& rates, double arrival_rate) {
  if (!(arrival_rate >= 0.0)) throw InvalidArgument("delay_bounds: arrival rate must be >= 0");
  return {mm1_sojourn(rates.aoi_floor(), arrival_rate),
          mm1_sojourn(1.0 / rates.mu_d(), arrival_rate)};
}

ServiceMoments service_time_moments(double p, const ServiceRates& rates) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("service_time_moments: p outside [0, 1]");
  const double fetch = 1.0 / rates.mu_r();
  const double deliver = 1.0 / rates.mu_d();
  const double miss = 1.0 - p;
  return {p * fetch + deliver, deliver * deliver + fetch * fetch - miss * miss * fetch * fetch};
}

MaybeDelay mg1_delay(double p, double arrival_rate, const ServiceRates& rates) {
  if (!(arrival_rate >= 0.0)) throw InvalidArgument("mg1_delay: arrival rate must be >= 0");
  const auto m = service_time_moments(p, rates);
  const double utilization = arrival_rate * m.mean;
  if (!(utilization < 1.0)) return std::nullopt;
  return m.mean + arrival_rate * m.second_moment() / (2.0 * (1.0 - utilization));
}

Prediction predict_single(const LoadPoint& point) {
  Prediction out;
  out.nbar = nbar(point);
  out.refresh_probability = refresh_probability(out.nbar);
  out.refresh_frequency = out.refresh_probability * point.arrival_rate();
  out.mean_aoi = mean_aoi_single(point);
  const auto m = service_time_moments(out.refresh_probability, point.rates());
  out.service_time_mean = m.mean;
  out.service_time_variance = m.variance;
  out.mean_delay = mm1_sojourn(m.mean, point.arrival_rate());
  return out;
}

MultiPrediction multi_source_predict(const Catalog& catalog, const ServiceRates& rates) {
  catalog.check_windows(rates);
  MultiPrediction out;
  out.items.reserve(catalog.size());

  double total_rate = 0.0;
  double refresh_rate = 0.0;
  double weighted_aoi = 0.0;
  double weighted_nbar = 0.0;
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    const double lambda = catalog.arrival_rate(i);
    out.items.push_back(predict_single(LoadPoint(lambda, catalog[i].window, rates)));
    const auto& item = out.items.back();
    total_rate += lambda;
    refresh_rate += item.refresh_frequency;
    weighted_aoi += lambda * item.mean_aoi;
    weighted_nbar += lambda * item.nbar;
  }

  auto& sys = out.system;
  sys.refresh_probability = refresh_rate / total_rate;
  sys.refresh_frequency = refresh_rate;
  sys.mean_aoi = weighted_aoi / total_rate;
  sys.nbar = weighted_nbar / total_rate;
  const auto m = service_time_moments(sys.refresh_probability, rates);
  sys.service_time_mean = m.mean;
  sys.service_time_variance = m.variance;
  sys.mean_delay = mm1_sojourn(m.mean, total_rate);

  for (auto& item : out.items) item.mean_delay = sys.mean_delay;
  return out;
}

}  // namespace aoicache::analytics
