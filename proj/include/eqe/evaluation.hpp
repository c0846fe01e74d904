#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eqe/cache.hpp"
#include "eqe/collect.hpp"
#include "eqe/corpus.hpp"
#include "eqe/rank.hpp"
#include "eqe/retrieve.hpp"

namespace eqe {

struct RetrievedDoc {
  std::size_t doc = 0;  // corpus position
  double score = 0.0;

  bool operator==(const RetrievedDoc&) const = default;
};

/// Top-k BM25 for the query and for the expansion, unioned; each doc scores
/// max(BM25(query, d), BM25(expansion, d)); re-sorted (ties by corpus
/// position) and cut to k. An empty expansion gives plain retrieval.
std::vector<RetrievedDoc> expanded_retrieval(const std::string& query, const std::string& expansion,
                                             const DocumentCorpus& corpus, std::size_t k);

struct EvalQuery {
  std::string query;
  std::set<std::string> clicked;  // T
};

/// Groups a click log into one EvalQuery per distinct query (sorted).
std::vector<EvalQuery> eval_queries_from_clicklog(std::span<const ClickRecord> clicklog);

struct RecallReport {
  std::vector<std::size_t> k_list;
  std::vector<double> recall;            // mean per k
  std::vector<std::vector<double>> per_query;  // [k][query]
  std::size_t evaluated = 0;
  std::size_t excluded = 0;  // N = 0
  std::size_t expanded = 0;  // queries that received a non-empty expansion

  Json to_json() const;
};

/// Recall@K = |I n T| / |T| with I = expanded_retrieval top-K. Throws
/// DataError when a clicked doc id is not in the corpus.
RecallReport eval_recall_at_k(std::span<const EvalQuery> queries, const ExpandFn& expander,
                              const DocumentCorpus& corpus, const std::vector<std::size_t>& k_list = {100, 150, 200});

struct CoverageTimeline {
  std::vector<double> checkpoints_min{1, 2, 5, 10, 15, 20};
  std::vector<double> coverage;

  Json to_json() const;
};

struct TimedEvent {
  std::string event_id;
  std::int64_t ts = 0;
};

/// Coverage at m = share of truth events whose earliest discovery lags the
/// first publication by at most m minutes. Throws std::invalid_argument on
/// an empty truth set.
CoverageTimeline eval_coverage_timeline(std::span<const TimedEvent> truth, std::span<const TimedEvent> discoveries,
                                        std::vector<double> checkpoints_min = {1, 2, 5, 10, 15, 20});

/// {"event_id","first_publish_ts"} and {"event_id","discovered_ts"}.
std::vector<TimedEvent> load_coverage_truth(const std::filesystem::path& path);
std::vector<TimedEvent> load_coverage_discoveries(const std::filesystem::path& path);

struct EqeExpanderConfig {
  std::size_t candidate_k = 50;
  SearchMode mode = SearchMode::exact;
  // Top-1 scores below this yield no expansion.
  double min_rank_score = -std::numeric_limits<double>::infinity();
};

/// Retrieve -> rank -> top-1 over a frozen index. Counts its retrieval and
/// ranking calls. Safe for concurrent use.
class EqeExpander {
 public:
  EqeExpander(const DualTower& tower, const EventIndex& index, std::span<const EventRecord> events,
              const GBDTModel& model, RankingContext ctx, EqeExpanderConfig config = {});

  std::string expand(const std::string& query) const;
  ExpandFn as_fn() const {
    return [this](const std::string& q) { return expand(q); };
  }

  std::uint64_t retrieval_calls() const { return retrievals_.load(); }
  std::uint64_t ranking_calls() const { return rankings_.load(); }

 private:
  const DualTower& tower_;
  const EventIndex& index_;
  std::vector<const EventRecord*> row_event_;
  const GBDTModel& model_;
  RankingContext ctx_;
  EqeExpanderConfig config_;
  mutable std::atomic<std::uint64_t> retrievals_{0};
  mutable std::atomic<std::uint64_t> rankings_{0};
};

}  // namespace eqe
