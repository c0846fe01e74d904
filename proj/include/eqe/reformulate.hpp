#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eqe/collect.hpp"
#include "eqe/embedding.hpp"
#include "eqe/textcore.hpp"

namespace eqe {

inline constexpr std::string_view kClsMarker = "\xE2\x9F\xA8" "CLS" "\xE2\x9F\xA9";  // ⟨CLS⟩
inline constexpr std::string_view kSepMarker = "\xE2\x9F\xA8" "SEP" "\xE2\x9F\xA9";  // ⟨SEP⟩

/// Fixed keyword template with exactly one "{kw}" placeholder.
class KeywordTemplate {
 public:
  explicit KeywordTemplate(std::string text = "keyword: {kw}");

  const std::string& text() const { return text_; }
  std::string render(std::string_view keyword) const;
  std::string_view prefix() const { return prefix_; }
  std::string_view suffix() const { return suffix_; }

 private:
  std::string text_;
  std::string prefix_;
  std::string suffix_;
};

/// Encoder input "⟨CLS⟩H⟨SEP⟩" and decoder input "⟨CLS⟩T E⟨SEP⟩" (a single
/// space separates the rendered template from the event; E is empty at
/// inference).
struct PromptedExample {
  std::string encoder_input;
  std::string decoder_input;
  std::string headline;
  std::string rendered_template;
  std::string event;
};

/// Highest TF-IDF token among entity-lexicon tokens of the headline, else
/// among all its tokens; ties go to the earliest position. Throws
/// std::invalid_argument on a headline without tokens.
std::string extract_keyword(std::string_view headline, const CorpusStats& stats, const TriggerLexicon& lex);

PromptedExample build_prompt(std::string_view headline, std::string_view event, std::string_view keyword,
                             const KeywordTemplate& tmpl = KeywordTemplate{});

struct ParsedPrompt {
  std::string headline;
  std::string keyword;
  std::string event;
};

/// Inverse of build_prompt for a known template. Throws DataError when the
/// strings do not follow the layout.
ParsedPrompt parse_prompt(std::string_view encoder_input, std::string_view decoder_input,
                          const KeywordTemplate& tmpl = KeywordTemplate{});

/// Swaps two distinct token positions drawn from a seeded RNG and re-joins
/// the tokens with spaces. Throws std::invalid_argument below 2 tokens.
std::string make_positive_pair(std::string_view headline, std::uint64_t seed);

enum class PairSource { click_query, trigger_extraction };
std::string_view to_string(PairSource s);

struct TrainingPair {
  std::string headline;
  std::string event;
  PairSource source = PairSource::click_query;
  std::string headline_id;

  bool operator==(const TrainingPair&) const = default;
};

struct PairBuildConfig {
  std::size_t window = 6;
};

struct PairBuildResult {
  std::vector<TrainingPair> pairs;
  std::size_t skipped_clicks = 0;  // doc_id not found among headlines
};

/// The trigger window used for trigger_extraction targets: tokens from the
/// one just before the first trigger through first trigger + window.
/// Returns an empty sequence when the title has no trigger.
TokenSeq trigger_window(const TokenSeq& tokens, const TriggerLexicon& lex, std::size_t window);

PairBuildResult build_training_pairs(std::span<const ClickRecord> clicklog, std::span<const Headline> headlines,
                                     const TriggerLexicon& lex, const PairBuildConfig& config = {});

struct PairFilterThresholds {
  double max_jaccard = 0.9;
  double min_embed = 0.3;
};

/// Keeps pairs with jaccard_distance <= max_jaccard and embed_score >= min_embed.
std::vector<TrainingPair> filter_pairs(std::span<const TrainingPair> pairs, const EncoderModel& model,
                                       const PairFilterThresholds& thresholds = {});
bool passes_relevance_gates(const TokenSeq& a, const TokenSeq& b, const EncoderModel& model,
                            const PairFilterThresholds& thresholds);

struct ReformulateConfig {
  std::size_t window = 6;
};

/// Strips leading 【...】 / [...] blocks, the segment after the last
/// delimiter ("|", "丨", " - ") and trailing punctuation.
std::string clean_headline(std::string_view headline);

/// Tokens of the cleaned headline from its start through first trigger +
/// window. Throws DataError("not reformulatable") without a trigger.
std::string extractive_reformulate(std::string_view headline, const TriggerLexicon& lex,
                                   const ReformulateConfig& config = {});

struct GoldPhrase {
  std::string title;
  std::string event;
  std::string topic;
};

std::vector<GoldPhrase> load_title2eventphrase(const std::filesystem::path& path);

struct GenEvalRow {
  std::string prediction;
  std::string reference;
  double rouge_l = 0.0;
  double bleu = 0.0;
  double embed_score = 0.0;
};

struct GenEvalReport {
  double rouge_l = 0.0;
  double bleu = 0.0;
  double embed_score = 0.0;
  std::vector<GenEvalRow> rows;

  Json to_json() const;
  std::string to_tsv() const;
};

GenEvalReport evaluate_generation(std::span<const std::string> predictions, std::span<const GoldPhrase> gold,
                                  const EncoderModel& model);

}  // namespace eqe
