#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "aoicache/model.hpp"

namespace aoicache::desim {

using model::Catalog;
using model::ServiceRates;

// Two-sided 95% normal quantile.
inline constexpr double kZ95 = 1.959963984540054;

enum class Policy {
  freshness_window,  // refresh iff AoI at service start >= W_c
  always_refresh,    // eager refreshing: every request fetches first
  never_refresh,     // serve from cache after the initial fetch
};

std::string_view to_string(Policy policy);
std::optional<Policy> parse_policy(std::string_view name);

struct SimConfig {
  std::uint64_t seed = 0;
  ServiceRates rates;
  Catalog catalog;
  std::size_t request_budget = 100'000;  // completions, warmup included
  double warmup_fraction = 0.1;          // leading completions discarded
  Policy policy = Policy::freshness_window;
  std::size_t queue_cap = 10'000'000;    // waiting requests before divergence
};

// Throws InvalidArgument on a zero budget or cap, a warmup fraction outside
// [0, 1), a warmup that would discard every completion, or a window below the
// AoI floor.
void validate(const SimConfig& config);

// The cached copy of one item. An entry with no version forces the next
// request to refresh.
struct CacheEntry {
  int item_id = 0;
  std::optional<double> version_timestamp;  // generation instant, seconds

  // +infinity before the first fetch.
  double aoi(double now) const;
};

struct RequestRecord {
  int item_id = 0;
  double arrival_time = 0.0;
  double service_start = 0.0;
  double departure_time = 0.0;
  bool refreshed = false;
  double fetch_time = 0.0;  // 0 unless refreshed
  double delivery_time = 0.0;
  double aoi_at_service_start = 0.0;  // +infinity for an item never fetched
  double aoi_at_delivery = 0.0;
  double delay = 0.0;
  bool warmup = false;  // excluded from the report
};

// Observer for every completed request, in departure order.
using RecordSink = std::function<void(const RequestRecord&)>;

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;

  double half_width() const { return kZ95 * std_error; }

  bool operator==(const Estimate&) const = default;
};

struct Stats {
  std::size_t count = 0;
  Estimate mean_aoi;
  Estimate mean_delay;
  Estimate refresh_fraction;

  bool operator==(const Stats&) const = default;
};

struct ItemStats {
  int item_id = 0;
  Stats stats;

  bool operator==(const ItemStats&) const = default;
};

// For a single run std_error is the naive i.i.d. standard error of the
// retained samples. For a replicated run it is the between-replication
// standard error of the per-replication means.
struct SimReport {
  Policy policy = Policy::freshness_window;
  std::vector<ItemStats> items;  // catalog order
  Stats aggregate;
  double simulated_time = 0.0;   // seconds, summed over replications
  std::size_t replications = 1;

  bool operator==(const SimReport&) const = default;
};

// Poisson arrivals, one FIFO server, AoI checked against the item's window at
// service start. A refresh draws T_R ~ Exp(mu_r) then T_D ~ Exp(mu_d) and the
// new version is stamped at the fetch start; otherwise only T_D is drawn.
// Identical configs give identical reports. Throws QueueDivergence when more
// than queue_cap requests are waiting.
SimReport run_simulation(const SimConfig& config, const RecordSink& sink = {});

// Seed of replication `index`; distinct for distinct indices.
std::uint64_t derive_seed(std::uint64_t base_seed, std::size_t index);

// Runs `replications` >= 2 independent copies (seeds from derive_seed) and
// pools them. Pooled means are count-weighted; half-widths come from the
// spread of the per-replication means. QueueDivergence is rethrown carrying
// the lowest failing replication index.
SimReport replicate(const SimConfig& config, std::size_t replications);

// Merges finished replications; exposed so callers running the replications
// themselves get the same pooling.
SimReport pool(const std::vector<SimReport>& runs);

}  // namespace aoicache::desim
