#include "eqe/cache.hpp"

#include <chrono>
#include <stdexcept>

namespace eqe {

double SystemClock::now() const {
  using namespace std::chrono;
  return duration<double>(system_clock::now().time_since_epoch()).count();
}

ExpansionCache::ExpansionCache(CacheConfig config) : config_(config) {
  if (!(config_.soft_ttl >= 0.0) || !(config_.soft_ttl <= config_.hard_ttl)) {
    throw std::invalid_argument("CacheConfig: need 0 <= soft_ttl <= hard_ttl");
  }
  if (config_.capacity == 0) throw std::invalid_argument("CacheConfig: capacity must be >= 1");
}

std::optional<CacheEntry> ExpansionCache::get(const std::string& query, double now) {
  std::lock_guard lock(mu_);
  const auto it = map_.find(query);
  if (it == map_.end()) return std::nullopt;
  if (now - it->second->computed_ts >= config_.hard_ttl) {
    lru_.erase(it->second);
    map_.erase(it);
    return std::nullopt;
  }
  lru_.splice(lru_.begin(), lru_, it->second);
  return *it->second;
}

void ExpansionCache::put(CacheEntry entry) {
  std::lock_guard lock(mu_);
  if (const auto it = map_.find(entry.query); it != map_.end()) {
    *it->second = std::move(entry);
    lru_.splice(lru_.begin(), lru_, it->second);
    return;
  }
  lru_.push_front(std::move(entry));
  map_.emplace(lru_.front().query, lru_.begin());
  if (lru_.size() > config_.capacity) {
    map_.erase(lru_.back().query);
    lru_.pop_back();
  }
}

std::size_t ExpansionCache::size() const {
  std::lock_guard lock(mu_);
  return lru_.size();
}

std::string_view to_string(ResponseSource s) { return s == ResponseSource::cache ? "cache" : "computed"; }

Json ExpandResponse::to_json() const {
  return Json{{"query", query}, {"expansion", expansion}, {"source", to_string(source)}, {"latency_ms", latency_ms}};
}

Json ServiceCounters::to_json() const {
  return Json{{"hits", hits}, {"misses", misses}, {"refreshes", refreshes}, {"computed", computed}};
}

ExpansionService::ExpansionService(ExpandFn fn, std::shared_ptr<const Clock> clock, CacheConfig config)
    : fn_(std::move(fn)), clock_(std::move(clock)), cache_(config) {
  if (!fn_ || !clock_) throw std::invalid_argument("ExpansionService: expand function and clock are required");
  worker_ = std::thread([this] { worker_loop(); });
}

ExpansionService::~ExpansionService() {
  {
    std::lock_guard lock(qmu_);
    stop_ = true;
  }
  qcv_.notify_all();
  worker_.join();
}

ExpandResponse ExpansionService::expand(const std::string& query) {
  if (query.empty()) throw std::invalid_argument("expand: empty query");
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  };
  const double now = clock_->now();
  if (auto hit = cache_.get(query, now)) {
    ++hits_;
    if (now - hit->computed_ts > cache_.config().soft_ttl) {
      bool scheduled = false;
      {
        std::lock_guard lock(qmu_);
        if (inflight_.insert(query).second) {
          queue_.push_back(query);
          scheduled = true;
        }
      }
      if (scheduled) {
        ++refreshes_;
        qcv_.notify_one();
      }
    }
    return {query, hit->expansion, ResponseSource::cache, elapsed_ms()};
  }
  ++misses_;
  std::string expansion = fn_(query);
  ++computed_;
  if (!expansion.empty()) cache_.put({query, expansion, clock_->now()});
  return {query, std::move(expansion), ResponseSource::computed, elapsed_ms()};
}

ServiceCounters ExpansionService::counters() const {
  return {hits_.load(), misses_.load(), refreshes_.load(), computed_.load()};
}

void ExpansionService::wait_idle() {
  std::unique_lock lock(qmu_);
  idle_cv_.wait(lock, [&] { return inflight_.empty(); });
}

void ExpansionService::worker_loop() {
  for (;;) {
    std::string query;
    {
      std::unique_lock lock(qmu_);
      qcv_.wait(lock, [&] { return stop_ || !queue_.empty(); });
      if (stop_) return;
      query = std::move(queue_.front());
      queue_.pop_front();
    }
    try {
      std::string expansion = fn_(query);
      ++computed_;
      // A refresh that finds nothing leaves the stale entry to expire.
      if (!expansion.empty()) cache_.put({query, std::move(expansion), clock_->now()});
    } catch (...) {
      // Refresh failures keep the stale entry; the next hit retries.
    }
    {
      std::lock_guard lock(qmu_);
      inflight_.erase(query);
    }
    idle_cv_.notify_all();
  }
}

}  // namespace eqe
