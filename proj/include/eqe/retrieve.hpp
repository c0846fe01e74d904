#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eqe/embedding.hpp"
#include "eqe/reformulate.hpp"

namespace eqe {

/// Query and event encoders. When shared, one parameter set serves both.
class DualTower {
 public:
  DualTower() = default;
  explicit DualTower(EncoderModel query_tower) : query_(std::move(query_tower)) {}
  DualTower(EncoderModel query_tower, EncoderModel event_tower)
      : query_(std::move(query_tower)), event_(std::move(event_tower)) {}

  bool shared() const { return !event_.has_value(); }
  const EncoderModel& query_tower() const { return query_; }
  const EncoderModel& event_tower() const { return event_ ? *event_ : query_; }
  EncoderModel& query_tower() { return query_; }
  EncoderModel& event_tower() { return event_ ? *event_ : query_; }

  Vec encode_query(const TokenSeq& t) const { return query_.encode(t); }
  Vec encode_event(const TokenSeq& t) const { return event_tower().encode(t); }

  void save(const std::filesystem::path& path) const;
  static DualTower load(const std::filesystem::path& path);

  bool operator==(const DualTower& o) const { return query_ == o.query_ && event_ == o.event_; }

 private:
  EncoderModel query_;
  std::optional<EncoderModel> event_;
};

struct RetrievalPair {
  std::string query;
  std::string event;
};

struct TowerTrainResult {
  DualTower tower;
  std::vector<double> loss_curve;
};

/// In-batch InfoNCE: the other events of a (re-shuffled every epoch) batch
/// serve as negatives. Throws std::invalid_argument below 2 pairs.
TowerTrainResult train_stage1(DualTower tower, std::span<const RetrievalPair> pairs, const TrainConfig& config);

struct EventRecord {
  std::string event_id;
  std::string text;
  std::string source_headline_id;
  std::int64_t found_ts = 0;

  bool operator==(const EventRecord&) const = default;
};

std::vector<EventRecord> load_events(const std::filesystem::path& path);
void save_events(const std::filesystem::path& path, std::span<const EventRecord> events);

struct IvfConfig {
  bool enabled = false;
  std::size_t n_lists = 0;  // 0 = ceil(sqrt(n))
  std::size_t kmeans_iters = 10;
  std::size_t nprobe = 4;
  std::uint64_t seed = 29;
};

enum class SearchMode { exact, ivf };

struct SearchHit {
  std::size_t row = 0;
  std::string id;
  double score = 0.0;

  bool operator==(const SearchHit&) const = default;
};

/// Frozen set of unit vectors with optional inverted-file lists.
class EventIndex {
 public:
  EventIndex() = default;

  /// Takes ownership of `vectors` (one row per id). Rows are renormalised.
  EventIndex(std::vector<std::string> ids, Matrix vectors, const IvfConfig& ivf = {});

  static EventIndex build(const DualTower& tower, std::span<const EventRecord> events, const IvfConfig& ivf = {});

  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return vectors_.cols(); }
  const std::vector<std::string>& ids() const { return ids_; }
  std::span<const double> vector(std::size_t row) const { return vectors_.row(row); }
  bool has_ivf() const { return !centroids_.data().empty(); }
  const Matrix& centroids() const { return centroids_; }
  const std::vector<std::vector<std::size_t>>& lists() const { return lists_; }
  std::size_t nprobe() const { return nprobe_; }

  /// Top-k by cosine, ties by ascending id. IVF mode scans the `nprobe`
  /// lists whose centroids are closest (0 = index default); it falls back
  /// to exact search when no IVF tables exist.
  std::vector<SearchHit> search(std::span<const double> query, std::size_t k, SearchMode mode = SearchMode::exact,
                                std::size_t nprobe = 0) const;

  void save(const std::filesystem::path& path) const;
  static EventIndex load(const std::filesystem::path& path);

  bool operator==(const EventIndex&) const = default;

 private:
  void build_ivf(const IvfConfig& ivf);

  std::vector<std::string> ids_;
  Matrix vectors_;
  Matrix centroids_;
  std::vector<std::vector<std::size_t>> lists_;
  std::size_t nprobe_ = 4;
};

std::vector<SearchHit> search_topk(const EventIndex& index, std::span<const double> query, std::size_t k,
                                   SearchMode mode = SearchMode::exact);

struct HardNegBand {
  double lower_pct = 60.0;
  double upper_pct = 95.0;
};

/// Nearest-rank percentile of an ascending-sorted sample: the value at
/// rank max(1, ceil(p / 100 * n)).
double nearest_rank_percentile(std::span<const double> sorted_ascending, double pct);

struct HardNegConfig {
  HardNegBand band;
  // Restrict the score distribution to the top `pool_k` non-positive events
  // (0 = every non-positive event).
  std::size_t pool_k = 100;
  // When set, candidates passing these relevance gates against the query
  // are treated as unlabeled positives and excluded.
  std::optional<PairFilterThresholds> exclude_relevant;
};

struct HardNegative {
  std::string event_id;
  std::string text;
  double score = 0.0;
};

/// query -> hard negatives sorted by descending score. Positives of a query
/// are all events whose text equals one of its paired events.
std::map<std::string, std::vector<HardNegative>> mine_hard_negatives(const EventIndex& index,
                                                                     std::span<const EventRecord> events,
                                                                     const DualTower& tower,
                                                                     std::span<const RetrievalPair> pairs,
                                                                     const HardNegConfig& config = {});

struct Stage2Config {
  TrainConfig train;
  std::size_t max_hard = 4;
  bool keep_in_batch = true;
  // true: sample max_hard of the mined list each epoch; false: take the top max_hard.
  bool sample_hard = true;
};

/// Retrains from the stage-1 parameters with each query's hard negatives
/// (up to max_hard) added to its softmax denominator.
TowerTrainResult train_stage2(DualTower stage1, std::span<const RetrievalPair> pairs,
                              const std::map<std::string, std::vector<HardNegative>>& hard_negs,
                              const Stage2Config& config);

struct ScoredCandidate {
  double score = 0.0;
  bool relevant = false;
};

struct RetrievalMetricsReport {
  double recall_at_k = 0.0;
  double mrr_at_k = 0.0;
  double auc = 0.0;
  std::size_t k = 0;
  std::size_t evaluated = 0;
  std::size_t excluded = 0;      // no candidates or no relevant candidate
  std::size_t auc_evaluated = 0; // queries with both classes
};

/// Candidates are ranked by descending score, ties in input order.
RetrievalMetricsReport retrieval_metrics(const std::vector<std::vector<ScoredCandidate>>& lists, std::size_t k);

struct EventClusters {
  std::vector<std::size_t> cluster_of;  // per index row; clusters numbered by first member
  std::vector<std::size_t> sizes;       // per cluster

  std::size_t size_of_row(std::size_t row) const { return sizes[cluster_of[row]]; }
};

/// Single-link components over edges with cosine >= theta.
EventClusters cluster_events(const EventIndex& index, double theta = 0.85);

}  // namespace eqe
