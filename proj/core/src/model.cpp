#include "aoicache/model.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include <fmt/format.h>

#include "aoicache/error.hpp"

namespace aoicache::model {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw InvalidArgument(fmt::format("{} must be positive and finite, got {}", name, value));
  }
}

// log2 of the SNR at the "effective" distance R / sqrt(e).
double log2_effective_snr(const RadioConfig& c, double tx_power) {
  const double effective_distance = c.coverage_radius / std::sqrt(std::numbers::e);
  return std::log2(tx_power / c.noise_power) -
         c.path_loss_exponent * std::log2(effective_distance);
}

}  // namespace

double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

RadioConfig RadioConfig::reference_cell() {
  RadioConfig c;
  c.coverage_radius = 1000.0;
  c.bandwidth = 10e6;
  c.content_size = 10.0 * kBitsPerKilobyte;
  c.path_loss_exponent = 4.0;
  c.noise_power = dbm_to_watts(-95.0);
  c.bs_tx_power = 1.0;
  c.source_tx_power = 0.1;
  return c;
}

void validate(const RadioConfig& config) {
  require_positive(config.coverage_radius, "coverage_radius");
  require_positive(config.bandwidth, "bandwidth");
  require_positive(config.content_size, "content_size");
  require_positive(config.path_loss_exponent, "path_loss_exponent");
  require_positive(config.noise_power, "noise_power");
  require_positive(config.bs_tx_power, "bs_tx_power");
  require_positive(config.source_tx_power, "source_tx_power");
  for (auto [power, name] : {std::pair{config.bs_tx_power, "bs_tx_power"},
                             std::pair{config.source_tx_power, "source_tx_power"}}) {
    const double bits = log2_effective_snr(config, power);
    if (!(bits > 0.0)) {
      throw NonPositiveRate(
          name, fmt::format("{} = {} W gives a non-positive service rate "
                            "(log2 of effective SNR = {})",
                            name, power, bits));
    }
  }
}

ServiceRates::ServiceRates(double mu_d, double mu_r) : mu_d_(mu_d), mu_r_(mu_r) {
  require_positive(mu_d, "mu_d");
  require_positive(mu_r, "mu_r");
  aoi_floor_ = 1.0 / mu_r_ + 1.0 / mu_d_;
}

ServiceRates derive_service_rates(const RadioConfig& config) {
  validate(config);
  const double scale = config.bandwidth / config.content_size;
  return ServiceRates(scale * log2_effective_snr(config, config.bs_tx_power),
                      scale * log2_effective_snr(config, config.source_tx_power));
}

std::vector<double> zipf_popularities(std::size_t item_count, double concentration) {
  if (item_count == 0) throw InvalidArgument("zipf_popularities: item_count must be >= 1");
  if (!(concentration >= 0.0) || !std::isfinite(concentration)) {
    throw InvalidArgument("zipf_popularities: concentration must be finite and >= 0");
  }
  std::vector<double> q(item_count);
  double total = 0.0;
  for (std::size_t c = 0; c < item_count; ++c) {
    q[c] = std::pow(static_cast<double>(c + 1), -concentration);
    total += q[c];
  }
  for (double& v : q) v /= total;
  return q;
}

Catalog::Catalog(std::vector<CatalogItem> items, double total_arrival_rate)
    : items_(std::move(items)), total_arrival_rate_(total_arrival_rate) {
  if (items_.empty()) throw InvalidArgument("catalog must hold at least one item");
  require_positive(total_arrival_rate_, "total_arrival_rate");
  std::set<int> ids;
  double sum = 0.0;
  for (const auto& item : items_) {
    if (!(item.popularity > 0.0 && item.popularity <= 1.0)) {
      throw InvalidArgument(
          fmt::format("item {}: popularity {} outside (0, 1]", item.item_id, item.popularity));
    }
    if (!std::isfinite(item.window)) {
      throw InvalidArgument(fmt::format("item {}: window must be finite", item.item_id));
    }
    if (!ids.insert(item.item_id).second) {
      throw InvalidArgument(fmt::format("duplicate item id {}", item.item_id));
    }
    sum += item.popularity;
  }
  if (std::abs(sum - 1.0) > kPopularitySumTolerance) {
    throw InvalidArgument(fmt::format("popularities sum to {:.17g}, expected 1", sum));
  }
}

Catalog Catalog::zipf(std::size_t item_count, double concentration,
                      double total_arrival_rate, double window) {
  const auto q = zipf_popularities(item_count, concentration);
  std::vector<CatalogItem> items;
  items.reserve(item_count);
  for (std::size_t c = 0; c < item_count; ++c) {
    items.push_back({static_cast<int>(c + 1), q[c], window});
  }
  return Catalog(std::move(items), total_arrival_rate);
}

double Catalog::arrival_rate(std::size_t i) const {
  return total_arrival_rate_ * items_.at(i).popularity;
}

std::vector<double> Catalog::arrival_rates() const {
  std::vector<double> rates(items_.size());
  for (std::size_t i = 0; i < items_.size(); ++i) rates[i] = arrival_rate(i);
  return rates;
}

void Catalog::check_windows(const ServiceRates& rates) const {
  for (const auto& item : items_) {
    if (item.window < rates.aoi_floor()) {
      throw InvalidArgument(fmt::format("item {}: window {} s is below the AoI floor {} s",
                                        item.item_id, item.window, rates.aoi_floor()));
    }
  }
}

Catalog Catalog::with_windows(std::span<const double> windows) const {
  if (windows.size() != items_.size()) {
    throw InvalidArgument("with_windows: one window per item required");
  }
  auto items = items_;
  for (std::size_t i = 0; i < items.size(); ++i) items[i].window = windows[i];
  return Catalog(std::move(items), total_arrival_rate_);
}

Catalog Catalog::with_common_window(double window) const {
  std::vector<double> windows(items_.size(), window);
  return with_windows(windows);
}

}  // namespace aoicache::model
