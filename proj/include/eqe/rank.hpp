#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "eqe/collect.hpp"
#include "eqe/embedding.hpp"
#include "eqe/jsonl.hpp"
#include "eqe/retrieve.hpp"
#include "eqe/textcore.hpp"

namespace eqe {

inline constexpr std::string_view kFeatureRegistry = "eqe-features-v1";

/// Registry order. Query-side stand-ins: token count, max TF-IDF, lexicon
/// entity overlap. Absent data (unknown query frequency, event outside the
/// cluster table) defaults to 0.
inline constexpr std::array<std::string_view, 10> kFeatureNames = {
    "cosine_sim",        "bm25",            "jaccard_sim", "entity_overlap",      "keyword_in_event",
    "query_token_count", "query_max_tfidf", "query_freq",  "event_recency_hours", "event_popularity"};

enum FeatureId : std::size_t {
  kCosineSim,
  kBm25,
  kJaccardSim,
  kEntityOverlap,
  kKeywordInEvent,
  kQueryTokenCount,
  kQueryMaxTfidf,
  kQueryFreq,
  kEventRecencyHours,
  kEventPopularity,
};

struct FeatureVector {
  std::string registry{kFeatureRegistry};
  std::vector<double> values = std::vector<double>(kFeatureNames.size(), 0.0);

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  bool operator==(const FeatureVector&) const = default;
};

/// Everything extract_features reads besides the (query, event) pair.
/// Pointers are borrowed; encoder, corpus_stats and lexicon are required.
struct RankingContext {
  const EncoderModel* encoder = nullptr;
  const CorpusStats* corpus_stats = nullptr;
  const TriggerLexicon* lexicon = nullptr;
  BM25Params bm25;
  std::unordered_map<std::string, double> popularity;  // event_id -> cluster size
  std::unordered_map<std::string, double> query_freq;
  std::int64_t now_ts = 0;
};

/// event_id -> size of its cluster.
std::unordered_map<std::string, double> popularity_table(const EventIndex& index, const EventClusters& clusters);

FeatureVector extract_features(std::string_view query, const EventRecord& event, const RankingContext& ctx);

struct GBDTConfig {
  std::size_t n_trees = 100;
  std::size_t max_depth = 3;
  double lr = 0.1;
  std::size_t min_leaf = 2;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  double value = 0.0;
  int left = -1;  // x[feature] < threshold
  int right = -1;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const;
  std::size_t depth() const;
  bool operator==(const RegressionTree&) const = default;
};

struct GBDTModel {
  std::string registry{kFeatureRegistry};
  std::size_t n_features = kFeatureNames.size();
  double base = 0.0;
  double lr = 0.1;
  std::vector<RegressionTree> trees;
  std::vector<double> train_mse;  // after 0..n_trees rounds; not persisted

  Json to_json() const;
  static GBDTModel from_json(const Json& doc);
  void save(const std::filesystem::path& path) const;
  static GBDTModel load(const std::filesystem::path& path);

  bool operator==(const GBDTModel& o) const {
    return registry == o.registry && n_features == o.n_features && base == o.base && lr == o.lr && trees == o.trees;
  }
};

struct GBDTSample {
  FeatureVector features;
  double label = 0.0;
};

/// Squared-error boosting with exact greedy splits at midpoints of sorted
/// unique values. All samples must share one registry and width.
GBDTModel gbdt_train(std::span<const GBDTSample> samples, const GBDTConfig& config = {});

/// Throws std::invalid_argument when fv does not match the model registry.
double gbdt_predict(const GBDTModel& model, const FeatureVector& fv);

struct RankedEvent {
  EventRecord event;
  double score = 0.0;
  FeatureVector features;
};

/// Descending score, ties by ascending event_id. Throws
/// std::invalid_argument("no expansion") on an empty candidate list.
std::vector<RankedEvent> rank_candidates(std::string_view query, std::span<const EventRecord> events,
                                         const GBDTModel& model, const RankingContext& ctx);
RankedEvent top1(std::string_view query, std::span<const EventRecord> events, const GBDTModel& model,
                 const RankingContext& ctx);

struct RankSample {
  std::string query;
  std::string event_id;
  int label = 0;
  std::int64_t ts = 0;
};

std::vector<RankSample> load_rank_samples(const std::filesystem::path& path);

/// Features for each sample with now_ts = sample.ts. Throws DataError on an
/// unknown event_id.
std::vector<GBDTSample> build_rank_training_set(std::span<const RankSample> samples,
                                                std::span<const EventRecord> events, RankingContext ctx);

}  // namespace eqe
