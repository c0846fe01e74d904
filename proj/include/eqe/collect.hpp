#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "eqe/textcore.hpp"

namespace eqe {

struct Headline {
  std::string id;
  std::string title;
  std::string site;
  std::string page_type;
  std::int64_t publish_ts = 0;

  bool operator==(const Headline&) const = default;
};

struct ClickRecord {
  std::string query;
  std::string doc_id;
  std::int64_t ts = 0;

  bool operator==(const ClickRecord&) const = default;
};

struct LabeledTitle {
  std::string title;
  bool is_event = false;
};

/// Headlines from JSONL; duplicate ids collapse to the record with the
/// earliest publish_ts (first one wins on equal timestamps). Output keeps
/// first-appearance order.
std::vector<Headline> load_headlines(const std::filesystem::path& path);
std::vector<Headline> parse_headlines(std::istream& in);
std::vector<ClickRecord> load_clicklog(const std::filesystem::path& path);
std::vector<ClickRecord> parse_clicklog(std::istream& in);
std::vector<LabeledTitle> load_labeled(const std::filesystem::path& path);

/// Token lexicons for trigger extraction and the coarse rules.
struct TriggerLexicon {
  std::set<std::string> triggers;
  std::set<std::string> interrogatives;
  std::set<std::string> entity_lexicon;

  bool is_trigger(const std::string& tok) const { return triggers.count(tok) > 0; }
  bool is_interrogative(const std::string& tok) const { return interrogatives.count(tok) > 0; }
  bool is_entity(const std::string& tok) const { return entity_lexicon.count(tok) > 0; }

  /// Loads triggers.txt, interrogatives.txt and entities.txt from `dir`.
  static TriggerLexicon load(const std::filesystem::path& dir);
  void save(const std::filesystem::path& dir) const;
};

/// One token per line (blank lines skipped). Every entry must tokenize to
/// exactly one token; the file must not be empty.
std::set<std::string> load_token_list(const std::filesystem::path& path);

struct TriggerHit {
  std::string token;
  std::size_t position = 0;

  bool operator==(const TriggerHit&) const = default;
};

std::vector<TriggerHit> extract_triggers(const TokenSeq& tokens, const TriggerLexicon& lex);
std::vector<TriggerHit> extract_triggers(std::string_view title, const TriggerLexicon& lex);

enum class RejectReason { non_event, missing_component, multi_event, irregular_syntax, interrogative };

std::string_view to_string(RejectReason r);
RejectReason parse_reject_reason(std::string_view s);
inline constexpr RejectReason kAllRejectReasons[] = {
    RejectReason::non_event, RejectReason::missing_component, RejectReason::multi_event,
    RejectReason::irregular_syntax, RejectReason::interrogative};

struct Rejection {
  Headline headline;
  RejectReason reason;
};

struct CoarseFilterConfig {
  std::size_t min_tokens = 3;
  std::size_t max_tokens = 40;
  std::size_t max_delimiters = 2;
  std::size_t max_triggers = 2;
};

struct CoarseReport {
  std::vector<Headline> kept;
  std::vector<Rejection> rejected;
};

/// Number of segment delimiters ("|", "丨", " - ") in a raw title.
std::size_t count_segment_delimiters(std::string_view title);

/// The coarse rule verdict for one title. Checks run in order
/// irregular_syntax, interrogative, multi_event, missing_component; the
/// first failing rule names the reason. Never returns non_event.
std::optional<RejectReason> coarse_verdict(std::string_view title, const TriggerLexicon& lex,
                                           const CoarseFilterConfig& config = {});

CoarseReport coarse_filter(std::span<const Headline> headlines, const TriggerLexicon& lex,
                           const CoarseFilterConfig& config = {});

/// Sparse vector: (index, value) sorted by index, no duplicate indices.
using SparseVector = std::vector<std::pair<std::uint32_t, double>>;

struct FeaturizerConfig {
  std::uint32_t hash_dim = 1u << 18;
};

/// Hashed unigram + bigram counts in [0, hash_dim), followed by three dense
/// slots: token count (hash_dim), trigger count (hash_dim + 1) and the
/// interrogative flag (hash_dim + 2). Without a lexicon the last two are 0.
SparseVector featurize_title(std::string_view title, const TriggerLexicon* lex = nullptr,
                             const FeaturizerConfig& config = {});

struct FineFilterConfig {
  std::size_t epochs = 200;
  double lr = 1.0;  // initial step; backtracking halves it until the loss drops
  double threshold = 0.5;
  std::uint64_t seed = 7;
  FeaturizerConfig features;
};

/// Logistic event classifier over featurize_title output.
struct FineFilterModel {
  std::map<std::uint32_t, double> weights;
  double bias = 0.0;
  double threshold = 0.5;
  FeaturizerConfig features;
  std::vector<double> loss_curve;  // mean log-loss before each epoch, then final

  /// sigmoid(w.x + b), clamped into the open interval (0, 1).
  double score(const SparseVector& x) const;
  double score(std::string_view title, const TriggerLexicon* lex) const;

  void save(const std::filesystem::path& path) const;
  static FineFilterModel load(const std::filesystem::path& path);
};

/// Full-batch gradient descent with Armijo backtracking, so the training
/// loss never increases between epochs. Zero epochs leaves all weights 0.
/// Throws std::invalid_argument unless both classes have >= 2 examples.
FineFilterModel train_fine_filter(std::span<const LabeledTitle> labeled, const TriggerLexicon* lex,
                                  const FineFilterConfig& config = {});

struct EventCandidate {
  Headline headline;
  double score = 0.0;
  std::int64_t found_ts = 0;
};

struct FineReport {
  std::vector<EventCandidate> kept;
  std::vector<Rejection> rejected;  // reason is always non_event
};

/// Keeps candidates scoring >= model.threshold; kept items carry
/// found_ts = ingest_ts.
FineReport fine_filter(std::span<const Headline> candidates, const FineFilterModel& model,
                       const TriggerLexicon* lex, std::int64_t ingest_ts);

}  // namespace eqe
