#pragma once

#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "eqe/clickgraph.hpp"
#include "eqe/config.hpp"
#include "eqe/corpus.hpp"
#include "eqe/evaluation.hpp"
#include "eqe/offline.hpp"

namespace eqe {

// One entry point per CLI subcommand. Each reads inputs from the data
// directory layout, writes its artifacts, and returns a JSON summary.

/// Click-joined retrieval pairs: a click on doc d pairs the query with the
/// event collected from headline d. Duplicates are dropped; order follows
/// the click log.
std::vector<RetrievalPair> retrieval_pairs_from_clicks(std::span<const ClickRecord> clicklog,
                                                       std::span<const EventRecord> events);

/// Reformulation encoder: click and trigger-window pairs, relevance-gated by
/// an untrained encoder, then contrastive training. Writes encoder.json.
Json train_encoder_step(const EqeConfig& config, const DataPaths& paths);

/// Stage 1 trains a fresh shared tower on click-joined pairs; stage 2
/// retrains retriever_stage1.json with hard_negatives.jsonl. Both write
/// retriever.json.
Json train_retriever_step(const EqeConfig& config, const DataPaths& paths, int stage);

/// Mines hard negatives for the click-joined pairs with retriever.json.
Json mine_negatives_step(const EqeConfig& config, const DataPaths& paths);

/// Fits the GBDT ranker on ranksamples.jsonl. Samples naming events absent
/// from events.jsonl are skipped and counted.
Json train_ranker_step(const EqeConfig& config, const DataPaths& paths);

/// Click graph, propagation and query clusters. Writes clusters.jsonl.
Json baseline_step(const EqeConfig& config, const DataPaths& paths);

/// ROUGE-L / BLEU / embedding score of predictions against the gold
/// phrases, aligned by line. Without a predictions file the extractive
/// reformulator produces them.
Json eval_gen_step(const EqeConfig& config, const DataPaths& paths, const std::optional<std::filesystem::path>& predictions);

/// Recall@k, MRR@k and AUC of retriever.json over click-joined pairs.
Json eval_retrieval_step(const EqeConfig& config, const DataPaths& paths);

Json eval_coverage_step(const EqeConfig& config, const DataPaths& paths);

/// Loaded serving artifacts. The ranking clock is fixed at now_ts.
struct ServingBundle {
  DualTower tower;
  EventIndex index;
  std::vector<EventRecord> events;
  GBDTModel ranker;
  DocumentCorpus corpus;
  TriggerLexicon lexicon;
  std::unique_ptr<EqeExpander> expander;

  ServingBundle() = default;
  ServingBundle(const ServingBundle&) = delete;
  ServingBundle& operator=(const ServingBundle&) = delete;
};

/// Needs index.bin, retriever.json, events.jsonl, ranker.json, corpus.jsonl
/// and lexicon/; event_clusters.jsonl and clicklog.jsonl are optional.
std::unique_ptr<ServingBundle> load_serving_bundle(const EqeConfig& config, const DataPaths& paths, std::int64_t now_ts);

struct E2EReport {
  RecallReport none;
  RecallReport baseline;
  RecallReport eqe;

  Json to_json() const;
};

/// Recall@K on eval_clicklog.jsonl for plain retrieval, the click-graph
/// baseline (clusters.jsonl) and EQE. The ranking clock is the latest
/// evaluation click.
E2EReport eval_e2e_step(const EqeConfig& config, const DataPaths& paths);

}  // namespace eqe
