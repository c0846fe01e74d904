#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_set>
#include <vector>

#include "eqe/collect.hpp"
#include "eqe/corpus.hpp"
#include "eqe/evaluation.hpp"
#include "eqe/rank.hpp"
#include "eqe/reformulate.hpp"
#include "eqe/retrieve.hpp"

namespace eqe::synth {

/// Deterministic pronounceable pseudo-words (lowercase ASCII, never a
/// reserved lexicon word, never repeated within one generator).
class WordFactory {
 public:
  explicit WordFactory(std::uint64_t seed);
  std::string next();
  std::vector<std::string> take(std::size_t n);

 private:
  std::uint64_t state_;
  std::unordered_set<std::string> issued_;
};

/// Event trigger verbs and interrogatives used by every generator.
const std::vector<std::string>& trigger_words();
const std::vector<std::string>& interrogative_words();

// Paraphrase families: an (entity, action) family holds `variants` events
// written with event-side action synonyms; its queries use disjoint
// query-side synonyms, so only the entity token is shared lexically.
struct ParaphraseConfig {
  std::size_t n_entities = 40;
  std::size_t n_actions = 10;
  std::size_t variants = 5;
  std::size_t synonyms = 3;
  std::size_t n_fillers = 60;
  std::size_t event_fillers = 2;
  // Entity-specific words shared by all of an entity's events.
  std::size_t entity_context = 3;
  std::size_t event_context = 2;
  std::size_t train_families = 100;
  std::size_t train_queries_per_family = 1;
  std::size_t test_queries = 200;
  std::uint64_t seed = 1;
};

struct ParaphraseQuery {
  std::string query;
  std::size_t family = 0;
};

struct ParaphraseBenchmark {
  std::vector<EventRecord> events;
  std::vector<std::size_t> family_of_event;
  std::vector<RetrievalPair> train_pairs;
  std::vector<ParaphraseQuery> test;
  std::vector<TokenSeq> vocabulary_corpus() const;
};

ParaphraseBenchmark make_paraphrase_benchmark(const ParaphraseConfig& config = {});

/// Mean Recall@k over the test queries (exact search).
double paraphrase_recall_at_k(const DualTower& tower, const ParaphraseBenchmark& bench, std::size_t k);

/// Headline-like strings for the swap-pair representation test.
struct SwapCorpus {
  std::vector<std::string> train;
  std::vector<std::string> heldout;
};

SwapCorpus make_swap_corpus(std::size_t n_train = 500, std::size_t n_heldout = 200, std::uint64_t seed = 5);

struct WorldConfig {
  std::uint64_t seed = 11;
  std::int64_t now_ts = 1700000000;
  std::size_t n_topics = 40;
  std::size_t topic_words = 25;
  std::size_t common_words = 200;
  std::size_t entities_per_topic = 3;
  std::size_t n_docs = 10000;
  std::size_t n_fresh_events = 60;
  std::size_t n_old_events = 340;
  std::size_t outlets_min = 3;
  std::size_t outlets_max = 7;
  std::size_t fresh_docs_per_event = 8;
  std::size_t old_docs_per_event = 3;
  std::size_t n_eval_queries = 200;
  double event_query_share = 0.3;
  std::size_t n_noise_headlines = 800;
  std::size_t n_labeled = 600;
};

/// A complete synthetic data directory: news headlines (events plus coarse
/// and fine rejects), a document corpus, historical and evaluation click
/// logs, labeled titles, ranking samples, gold event phrases and coverage
/// timing files. Fresh events are published in the last few hours before
/// now_ts; the historical click log ends before them.
struct World {
  WorldConfig config;
  TriggerLexicon lexicon;
  std::vector<Headline> headlines;
  std::vector<Document> documents;
  std::vector<ClickRecord> clicklog;
  std::vector<ClickRecord> eval_clicklog;
  std::vector<std::string> event_queries;  // eval queries aimed at fresh events
  std::vector<LabeledTitle> labeled;
  std::vector<RankSample> rank_samples;
  std::vector<GoldPhrase> gold;
  std::vector<TimedEvent> coverage_truth;
  std::vector<TimedEvent> coverage_discoveries;
};

World make_world(const WorldConfig& config = {});

/// Writes headlines.jsonl, clicklog.jsonl, eval_clicklog.jsonl,
/// labeled.jsonl, corpus.jsonl, ranksamples.jsonl, title2eventphrase.jsonl,
/// coverage_truth.jsonl, coverage_discoveries.jsonl and lexicon/.
void write_world(const World& world, const std::filesystem::path& data_dir);

}  // namespace eqe::synth
