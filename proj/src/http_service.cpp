#include "eqe/http_service.hpp"

#include <sstream>
#include <stdexcept>

#include <httplib.h>

#include "eqe/common.hpp"
#include "eqe/jsonl.hpp"

namespace eqe {

namespace {

constexpr const char* kJson = "application/json";

void reply(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

}  // namespace

EventIngestor::EventIngestor(TriggerLexicon lex, FineFilterModel model, CoarseFilterConfig coarse,
                             std::shared_ptr<const Clock> clock)
    : lex_(std::move(lex)), model_(std::move(model)), coarse_(coarse), clock_(std::move(clock)) {}

IngestResult EventIngestor::ingest(std::string_view jsonl) {
  std::istringstream in{std::string(jsonl)};
  const auto headlines = parse_headlines(in);
  const CoarseReport coarse = coarse_filter(headlines, lex_, coarse_);
  const FineReport fine = fine_filter(coarse.kept, model_, &lex_, static_cast<std::int64_t>(clock_->now()));
  std::lock_guard lock(mu_);
  accepted_.insert(accepted_.end(), fine.kept.begin(), fine.kept.end());
  return {fine.kept.size(), coarse.rejected.size() + fine.rejected.size()};
}

std::vector<EventCandidate> EventIngestor::accepted() const {
  std::lock_guard lock(mu_);
  return accepted_;
}

HttpService::HttpService(ExpansionService& service, EventIngestor* ingestor)
    : service_(service), ingestor_(ingestor), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

HttpService::~HttpService() { stop(); }

void HttpService::install_routes() {
  server_->Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, Json{{"status", "ok"}});
  });
  server_->Get("/stats", [this](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, service_.counters().to_json());
  });
  server_->Get("/expand", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string q = req.get_param_value("q");
    if (q.empty()) return reply(res, 400, Json{{"error", "missing query parameter q"}});
    reply(res, 200, service_.expand(q).to_json());
  });
  server_->Post("/events", [this](const httplib::Request& req, httplib::Response& res) {
    if (ingestor_ == nullptr) return reply(res, 503, Json{{"error", "event ingestion disabled"}});
    try {
      const IngestResult r = ingestor_->ingest(req.body);
      reply(res, 200, Json{{"accepted", r.accepted}, {"rejected", r.rejected}});
    } catch (const DataError& e) {
      reply(res, 400, Json{{"error", e.what()}});
    }
  });
  server_->set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::invalid_argument& e) {
      return reply(res, 400, Json{{"error", e.what()}});
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    reply(res, 500, Json{{"error", what}});
  });
}

int HttpService::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
    if (bound < 0) throw std::runtime_error("cannot bind " + host);
  } else if (!server_->bind_to_port(host, port)) {
    throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void HttpService::run(const std::string& host, int port) {
  if (!server_->listen(host, port)) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
}

void HttpService::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace eqe
