#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace aoicache::model {

// "KB" in content sizes means 1024 bytes of 8 bits.
inline constexpr double kBitsPerKilobyte = 8.0 * 1024.0;

// Absolute tolerance on the popularity vector summing to one.
inline constexpr double kPopularitySumTolerance = 1e-12;

double dbm_to_watts(double dbm);

// Physical-layer parameters of one base-station cell. Units: meters, Hz,
// bits, watts.
struct RadioConfig {
  double coverage_radius = 0.0;
  double bandwidth = 0.0;
  double content_size = 0.0;
  double path_loss_exponent = 0.0;
  double noise_power = 0.0;
  double bs_tx_power = 0.0;
  double source_tx_power = 0.0;

  // The reference cell used throughout the experiments: R = 1000 m,
  // B = 10 MHz, L = 10 KB, alpha = 4, noise = -95 dBm, P_BS = 1 W,
  // P_source = 0.1 W.
  static RadioConfig reference_cell();

  bool operator==(const RadioConfig&) const = default;
};

// Throws InvalidArgument for non-positive fields and NonPositiveRate when a
// derived rate would be <= 0.
void validate(const RadioConfig& config);

// Mean delivery (mu_d) and fetch (mu_r) rates in requests per second.
class ServiceRates {
 public:
  // Throws InvalidArgument unless both rates are finite and > 0.
  ServiceRates(double mu_d, double mu_r);

  double mu_d() const { return mu_d_; }
  double mu_r() const { return mu_r_; }

  // Smallest achievable mean AoI: one fetch plus one delivery.
  double aoi_floor() const { return aoi_floor_; }

  bool operator==(const ServiceRates&) const = default;

 private:
  double mu_d_;
  double mu_r_;
  double aoi_floor_;
};

// Spatially averaged Shannon rate with users and sources uniform in a disc:
//   mu = (B / L) * log2(P * (R / sqrt(e))^-alpha / sigma^2)
// Both rates come from the same high-SNR approximation, which underestimates
// the exact average.
ServiceRates derive_service_rates(const RadioConfig& config);

// Zipf popularity q_c = c^-nu / sum_s s^-nu for c = 1..item_count.
std::vector<double> zipf_popularities(std::size_t item_count, double concentration);

struct CatalogItem {
  int item_id = 0;
  double popularity = 0.0;
  double window = 0.0;  // refreshing window W_c, seconds

  bool operator==(const CatalogItem&) const = default;
};

class Catalog {
 public:
  // Throws InvalidArgument if the catalog is empty, a popularity is outside
  // (0, 1], popularities do not sum to 1, item ids repeat, a window is not
  // finite, or the total rate is not positive.
  Catalog(std::vector<CatalogItem> items, double total_arrival_rate);

  // Zipf popularities over items 1..item_count, every item sharing `window`.
  static Catalog zipf(std::size_t item_count, double concentration,
                      double total_arrival_rate, double window);

  std::span<const CatalogItem> items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  const CatalogItem& operator[](std::size_t i) const { return items_[i]; }

  double total_arrival_rate() const { return total_arrival_rate_; }

  // lambda_c = Lambda * q_c.
  double arrival_rate(std::size_t i) const;
  std::vector<double> arrival_rates() const;

  // Throws InvalidArgument if any window is below rates.aoi_floor().
  void check_windows(const ServiceRates& rates) const;

  // Copy with every window replaced.
  Catalog with_windows(std::span<const double> windows) const;
  Catalog with_common_window(double window) const;

  bool operator==(const Catalog&) const = default;

 private:
  std::vector<CatalogItem> items_;
  double total_arrival_rate_;
};

}  // namespace aoicache::model
