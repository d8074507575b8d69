#include "aoicache/desim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <future>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "aoicache/error.hpp"

namespace aoicache::desim {

namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// mt19937_64 is fully specified by the standard; the distributions are not,
// so the draws below are done by hand to keep runs portable.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t stream_id)
      : engine_(splitmix64(seed ^ splitmix64(stream_id))) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

 private:
  std::mt19937_64 engine_;
};

enum StreamId : std::uint64_t { kArrivals = 1, kItems = 2, kService = 3 };

// Welford accumulator.
struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }

  // Chan et al. pairwise combination.
  void merge(const Moments& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double total = static_cast<double>(n + o.n);
    const double d = o.mean - mean;
    mean = (static_cast<double>(n) * mean + static_cast<double>(o.n) * o.mean) / total;
    m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / total;
    n += o.n;
  }

  Estimate estimate() const {
    if (n < 2) return {mean, 0.0};
    const double var = m2 / static_cast<double>(n - 1);
    return {mean, std::sqrt(var / static_cast<double>(n))};
  }
};

struct Accumulator {
  Moments aoi;
  Moments delay;
  Moments refresh;

  void add(const RequestRecord& r) {
    aoi.add(r.aoi_at_delivery);
    delay.add(r.delay);
    refresh.add(r.refreshed ? 1.0 : 0.0);
  }

  void merge(const Accumulator& o) {
    aoi.merge(o.aoi);
    delay.merge(o.delay);
    refresh.merge(o.refresh);
  }

  Stats stats() const {
    return {aoi.n, aoi.estimate(), delay.estimate(), refresh.estimate()};
  }
};

struct Pending {
  double arrival_time;
  std::size_t item;
};

bool should_refresh(Policy policy, const CacheEntry& entry, double now, double window) {
  if (!entry.version_timestamp) return true;
  switch (policy) {
    case Policy::freshness_window:
      return entry.aoi(now) >= window;
    case Policy::always_refresh:
      return true;
    case Policy::never_refresh:
      return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(Policy policy) {
  switch (policy) {
    case Policy::freshness_window:
      return "freshness_window";
    case Policy::always_refresh:
      return "always_refresh";
    case Policy::never_refresh:
      return "never_refresh";
  }
  return "unknown";
}

std::optional<Policy> parse_policy(std::string_view name) {
  for (auto p : {Policy::freshness_window, Policy::always_refresh, Policy::never_refresh}) {
    if (to_string(p) == name) return p;
  }
  return std::nullopt;
}

double CacheEntry::aoi(double now) const {
  return version_timestamp ? now - *version_timestamp : kInfinity;
}

void validate(const SimConfig& config) {
  if (config.request_budget == 0) throw InvalidArgument("request_budget must be >= 1");
  if (config.queue_cap == 0) throw InvalidArgument("queue_cap must be >= 1");
  if (!(config.warmup_fraction >= 0.0 && config.warmup_fraction < 1.0)) {
    throw InvalidArgument(
        fmt::format("warmup_fraction {} outside [0, 1)", config.warmup_fraction));
  }
  const auto warmup = static_cast<std::size_t>(config.warmup_fraction *
                                               static_cast<double>(config.request_budget));
  if (warmup >= config.request_budget) {
    throw InvalidArgument("warmup would discard every completion");
  }
  config.catalog.check_windows(config.rates);
}

SimReport run_simulation(const SimConfig& config, const RecordSink& sink) {
  validate(config);
  const auto& catalog = config.catalog;
  const std::size_t n_items = catalog.size();
  const double mu_d = config.rates.mu_d();
  const double mu_r = config.rates.mu_r();

  std::vector<double> cdf(n_items);
  double running = 0.0;
  for (std::size_t i = 0; i < n_items; ++i) {
    running += catalog[i].popularity;
    cdf[i] = running;
  }

  Stream arrivals(config.seed, kArrivals);
  Stream picks(config.seed, kItems);
  Stream service(config.seed, kService);

  auto pick_item = [&] {
    const double u = picks.uniform() * running;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return std::min(static_cast<std::size_t>(it - cdf.begin()), n_items - 1);
  };

  std::vector<CacheEntry> cache(n_items);
  for (std::size_t i = 0; i < n_items; ++i) cache[i].item_id = catalog[i].item_id;

  const auto warmup = static_cast<std::size_t>(config.warmup_fraction *
                                               static_cast<double>(config.request_budget));
  std::vector<Accumulator> per_item(n_items);

  std::deque<Pending> waiting;
  std::optional<RequestRecord> in_service;
  std::size_t in_service_item = 0;
  std::size_t completed = 0;
  double now = 0.0;
  double next_arrival = arrivals.exponential(catalog.total_arrival_rate());

  while (completed < config.request_budget) {
    if (!in_service && !waiting.empty()) {
      const Pending job = waiting.front();
      waiting.pop_front();
      CacheEntry& entry = cache[job.item];

      RequestRecord r;
      r.item_id = entry.item_id;
      r.arrival_time = job.arrival_time;
      r.service_start = now;
      r.aoi_at_service_start = entry.aoi(now);
      r.refreshed = should_refresh(config.policy, entry, now, catalog[job.item].window);
      if (r.refreshed) {
        r.fetch_time = service.exponential(mu_r);
        entry.version_timestamp = now;
      }
      r.delivery_time = service.exponential(mu_d);
      const double service_time = r.fetch_time + r.delivery_time;
      r.departure_time = now + service_time;
      r.aoi_at_delivery =
          r.refreshed ? service_time : r.departure_time - *entry.version_timestamp;
      r.delay = r.departure_time - r.arrival_time;
      in_service = r;
      in_service_item = job.item;
    }

    if (in_service && in_service->departure_time <= next_arrival) {
      now = in_service->departure_time;
      in_service->warmup = completed < warmup;
      if (!in_service->warmup) per_item[in_service_item].add(*in_service);
      if (sink) sink(*in_service);
      in_service.reset();
      ++completed;
      continue;
    }

    now = next_arrival;
    waiting.push_back({now, pick_item()});
    if (waiting.size() > config.queue_cap) {
      throw QueueDivergence(
          fmt::format("queue length {} exceeded cap {} at t = {} s (unstable load?)",
                      waiting.size(), config.queue_cap, now),
          waiting.size());
    }
    next_arrival = now + arrivals.exponential(catalog.total_arrival_rate());
  }

  SimReport report;
  report.policy = config.policy;
  report.simulated_time = now;
  Accumulator total;
  for (std::size_t i = 0; i < n_items; ++i) {
    report.items.push_back({catalog[i].item_id, per_item[i].stats()});
    total.merge(per_item[i]);
  }
  report.aggregate = total.stats();
  return report;
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::size_t index) {
  // base + (index + 1) * odd constant is injective in index, and splitmix64
  // is a bijection.
  return splitmix64(base_seed + (static_cast<std::uint64_t>(index) + 1) * 0xd1b54a32d192ed03ULL);
}

namespace {

// Pools one metric over replications: count-weighted mean, standard error of
// the per-replication means around it.
Estimate pool_metric(const std::vector<std::pair<std::size_t, double>>& samples) {
  std::size_t total = 0;
  double weighted = 0.0;
  for (auto [count, mean] : samples) {
    total += count;
    weighted += static_cast<double>(count) * mean;
  }
  if (total == 0) return {};
  const double pooled = weighted / static_cast<double>(total);
  std::size_t used = 0;
  double ss = 0.0;
  for (auto [count, mean] : samples) {
    if (count == 0) continue;
    ++used;
    ss += (mean - pooled) * (mean - pooled);
  }
  if (used < 2) return {pooled, 0.0};
  const double r = static_cast<double>(used);
  return {pooled, std::sqrt(ss / (r * (r - 1.0)))};
}

Stats pool_stats(const std::vector<const Stats*>& parts) {
  std::vector<std::pair<std::size_t, double>> aoi, delay, refresh;
  Stats out;
  for (const Stats* s : parts) {
    out.count += s->count;
    aoi.emplace_back(s->count, s->mean_aoi.mean);
    delay.emplace_back(s->count, s->mean_delay.mean);
    refresh.emplace_back(s->count, s->refresh_fraction.mean);
  }
  out.mean_aoi = pool_metric(aoi);
  out.mean_delay = pool_metric(delay);
  out.refresh_fraction = pool_metric(refresh);
  return out;
}

}  // namespace

SimReport pool(const std::vector<SimReport>& runs) {
  if (runs.empty()) throw InvalidArgument("pool: no runs");
  SimReport out;
  out.policy = runs.front().policy;
  out.replications = 0;
  const std::size_t n_items = runs.front().items.size();
  for (const auto& run : runs) {
    if (run.items.size() != n_items) throw InvalidArgument("pool: catalogs differ");
    out.simulated_time += run.simulated_time;
    out.replications += run.replications;
  }
  for (std::size_t i = 0; i < n_items; ++i) {
    std::vector<const Stats*> parts;
    for (const auto& run : runs) parts.push_back(&run.items[i].stats);
    out.items.push_back({runs.front().items[i].item_id, pool_stats(parts)});
  }
  std::vector<const Stats*> parts;
  for (const auto& run : runs) parts.push_back(&run.aggregate);
  out.aggregate = pool_stats(parts);
  return out;
}

SimReport replicate(const SimConfig& config, std::size_t replications) {
  if (replications < 2) throw InvalidArgument("replicate: need at least 2 replications");
  validate(config);

  std::vector<std::future<SimReport>> jobs;
  jobs.reserve(replications);
  for (std::size_t r = 0; r < replications; ++r) {
    SimConfig cfg = config;
    cfg.seed = derive_seed(config.seed, r);
    jobs.push_back(std::async(std::launch::async, [cfg] { return run_simulation(cfg); }));
  }

  std::vector<SimReport> runs;
  std::optional<QueueDivergence> failure;
  for (std::size_t r = 0; r < replications; ++r) {
    try {
      runs.push_back(jobs[r].get());
    } catch (const QueueDivergence& e) {
      if (!failure) {
        failure.emplace(fmt::format("replication {}: {}", r, e.what()), e.queue_length(), r);
      }
    }
  }
  if (failure) throw *failure;
  return pool(runs);
}

}  // namespace aoicache::desim
