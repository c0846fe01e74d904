#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "eqe/jsonl.hpp"

namespace eqe {

/// Source of "now" in unix seconds. Injected so TTL logic is testable.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now() const = 0;
};

class SystemClock : public Clock {
 public:
  double now() const override;
};

class ManualClock : public Clock {
 public:
  explicit ManualClock(double start = 0.0) : t_(start) {}
  double now() const override { return t_.load(); }
  void set(double t) { t_.store(t); }
  void advance(double dt) { t_.store(t_.load() + dt); }

 private:
  std::atomic<double> t_;
};

struct CacheConfig {
  double soft_ttl = 300.0;
  double hard_ttl = 3600.0;
  std::size_t capacity = 100000;
};

struct CacheEntry {
  std::string query;
  std::string expansion;
  double computed_ts = 0.0;
};

/// Thread-safe LRU map with hard-TTL expiry.
class ExpansionCache {
 public:
  explicit ExpansionCache(CacheConfig config = {});

  /// Entry younger than hard_ttl (and marks it most recently used); expired
  /// entries are removed.
  std::optional<CacheEntry> get(const std::string& query, double now);
  void put(CacheEntry entry);
  std::size_t size() const;
  const CacheConfig& config() const { return config_; }

 private:
  CacheConfig config_;
  mutable std::mutex mu_;
  std::list<CacheEntry> lru_;  // front = most recent
  std::unordered_map<std::string, std::list<CacheEntry>::iterator> map_;
};

enum class ResponseSource { cache, computed };
std::string_view to_string(ResponseSource s);

struct ExpandResponse {
  std::string query;
  std::string expansion;
  ResponseSource source = ResponseSource::computed;
  double latency_ms = 0.0;

  Json to_json() const;
};

struct ServiceCounters {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t refreshes = 0;  // refreshes scheduled
  std::uint64_t computed = 0;   // expansion computations finished, inline or background

  Json to_json() const;
};

/// Returns the top-1 expansion, or "" when there is none.
using ExpandFn = std::function<std::string(const std::string& query)>;

/// Cache-fronted expansion with stale-while-revalidate. A hit younger than
/// soft_ttl is returned as is; a hit between soft_ttl and hard_ttl is
/// returned and queued for a background recompute (one in flight per key);
/// anything else is computed inline. Empty expansions are never cached.
class ExpansionService {
 public:
  ExpansionService(ExpandFn fn, std::shared_ptr<const Clock> clock, CacheConfig config = {});
  ~ExpansionService();
  ExpansionService(const ExpansionService&) = delete;
  ExpansionService& operator=(const ExpansionService&) = delete;

  /// Throws std::invalid_argument on an empty query.
  ExpandResponse expand(const std::string& query);

  ServiceCounters counters() const;
  const ExpansionCache& cache() const { return cache_; }

  /// Blocks until no refresh is queued or running.
  void wait_idle();

 private:
  void worker_loop();

  ExpandFn fn_;
  std::shared_ptr<const Clock> clock_;
  ExpansionCache cache_;

  std::atomic<std::uint64_t> hits_{0}, misses_{0}, refreshes_{0}, computed_{0};

  std::mutex qmu_;
  std::condition_variable qcv_;
  std::condition_variable idle_cv_;
  std::deque<std::string> queue_;
  std::unordered_set<std::string> inflight_;
  bool stop_ = false;
  std::thread worker_;
};

}  // namespace eqe
