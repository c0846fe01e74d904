#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "eqe/cache.hpp"
#include "eqe/collect.hpp"

namespace httplib {
class Server;
}

namespace eqe {

struct IngestResult {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

/// Online event collection: coarse rules, then the fine classifier. Accepted
/// candidates are kept in arrival order.
class EventIngestor {
 public:
  EventIngestor(TriggerLexicon lex, FineFilterModel model, CoarseFilterConfig coarse,
                std::shared_ptr<const Clock> clock);

  /// Body is headlines.jsonl records. Throws DataError on a malformed line;
  /// nothing is ingested in that case.
  IngestResult ingest(std::string_view jsonl);
  std::vector<EventCandidate> accepted() const;

 private:
  TriggerLexicon lex_;
  FineFilterModel model_;
  CoarseFilterConfig coarse_;
  std::shared_ptr<const Clock> clock_;
  mutable std::mutex mu_;
  std::vector<EventCandidate> accepted_;
};

/// HTTP/1.1 front end:
///   GET  /expand?q=  -> {"query","expansion","source","latency_ms"}
///   POST /events     -> {"accepted","rejected"}
///   GET  /healthz    -> {"status":"ok"}
///   GET  /stats      -> {"hits","misses","refreshes","computed"}
/// Bad requests get 400 with {"error"}.
class HttpService {
 public:
  /// `ingestor` may be null, in which case POST /events answers 503.
  HttpService(ExpansionService& service, EventIngestor* ingestor);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Binds (port 0 picks a free port) and serves on a background thread.
  /// Returns the bound port. Throws std::runtime_error if binding fails.
  int start(const std::string& host, int port);
  /// Serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

 private:
  void install_routes();

  ExpansionService& service_;
  EventIngestor* ingestor_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace eqe
