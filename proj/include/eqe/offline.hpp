#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "eqe/config.hpp"
#include "eqe/jsonl.hpp"

namespace eqe {

/// Event ids are derived from the source headline id.
inline std::string event_id_for_headline(const std::string& headline_id) { return "ev-" + headline_id; }

/// Fixed file layout under <data_dir>.
struct DataPaths {
  std::filesystem::path root;

  std::filesystem::path headlines() const { return root / "headlines.jsonl"; }
  std::filesystem::path clicklog() const { return root / "clicklog.jsonl"; }
  std::filesystem::path eval_clicklog() const { return root / "eval_clicklog.jsonl"; }
  std::filesystem::path labeled() const { return root / "labeled.jsonl"; }
  std::filesystem::path lexicon() const { return root / "lexicon"; }
  std::filesystem::path corpus() const { return root / "corpus.jsonl"; }
  std::filesystem::path rank_samples() const { return root / "ranksamples.jsonl"; }
  std::filesystem::path gold() const { return root / "title2eventphrase.jsonl"; }
  std::filesystem::path coverage_truth() const { return root / "coverage_truth.jsonl"; }
  std::filesystem::path coverage_discoveries() const { return root / "coverage_discoveries.jsonl"; }

  std::filesystem::path artifacts() const { return root / "artifacts"; }
  std::filesystem::path fine_model() const { return artifacts() / "fine_filter.json"; }
  std::filesystem::path candidates() const { return artifacts() / "candidates.jsonl"; }
  std::filesystem::path rejections() const { return artifacts() / "rejections.jsonl"; }
  std::filesystem::path events() const { return artifacts() / "events.jsonl"; }
  std::filesystem::path encoder() const { return artifacts() / "encoder.json"; }
  std::filesystem::path retriever() const { return artifacts() / "retriever.json"; }
  std::filesystem::path hard_negatives() const { return artifacts() / "hard_negatives.jsonl"; }
  std::filesystem::path index() const { return artifacts() / "index.bin"; }
  std::filesystem::path event_clusters() const { return artifacts() / "event_clusters.jsonl"; }
  std::filesystem::path ranker() const { return artifacts() / "ranker.json"; }
  std::filesystem::path query_clusters() const { return artifacts() / "clusters.jsonl"; }
  std::filesystem::path report() const { return artifacts() / "report.json"; }
};

struct StageReport {
  std::string name;
  std::size_t input = 0;
  std::size_t kept = 0;
  std::size_t rejected = 0;
  std::map<std::string, std::size_t> reasons;  // rejection counts
  std::map<std::string, std::size_t> info;     // stage-specific outputs
  bool resumed = false;

  Json to_json() const;
};

struct OfflineReport {
  std::vector<StageReport> stages;

  const StageReport& stage(const std::string& name) const;
  Json to_json() const;
};

struct OfflineOptions {
  // Reuse a stage's persisted outputs instead of recomputing them.
  bool resume = false;
};

/// Stage "collect": coarse rules, then a fine classifier trained on
/// labeled.jsonl. Candidates carry found_ts = publish_ts.
StageReport run_collect_stage(const EqeConfig& config, const DataPaths& paths, bool resume = false);
/// Stage "reformulate": extractive event phrase per candidate.
StageReport run_reformulate_stage(const EqeConfig& config, const DataPaths& paths, bool resume = false);
/// Stage "index": encodes events with artifacts/retriever.json, creating an
/// untrained tower over the event and click-query vocabulary when absent.
StageReport run_index_stage(const EqeConfig& config, const DataPaths& paths, bool resume = false);
/// Stage "cluster": event popularity clusters.
StageReport run_cluster_stage(const EqeConfig& config, const DataPaths& paths, bool resume = false);

/// collect -> reformulate -> index -> cluster, then report.json. An empty
/// headline file yields all-zero counts and writes nothing. Stage errors
/// are rethrown prefixed with the stage name.
OfflineReport run_offline_pipeline(const EqeConfig& config, const std::filesystem::path& data_dir,
                                   const OfflineOptions& options = {});

std::vector<EventCandidate> load_candidates(const std::filesystem::path& path);
void save_candidates(const std::filesystem::path& path, const std::vector<EventCandidate>& cands);

/// event_clusters.jsonl: {"event_id","cluster","size"}.
void save_event_clusters(const std::filesystem::path& path, const EventIndex& index, const EventClusters& clusters);
std::unordered_map<std::string, double> load_event_popularity(const std::filesystem::path& path);

/// Vocabulary corpus for a fresh tower: event texts plus click-log queries.
DualTower untrained_tower(const std::vector<EventRecord>& events, const std::vector<ClickRecord>& clicks,
                          const EncoderConfig& config);

}  // namespace eqe
