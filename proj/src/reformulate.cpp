#include "eqe/reformulate.hpp"

#include <algorithm>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "eqe/common.hpp"
#include "eqe/jsonl.hpp"

namespace eqe {

namespace {

constexpr std::string_view kPlaceholder = "{kw}";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

// Byte length of the last UTF-8 code point of s (s non-empty).
std::size_t last_code_point_len(std::string_view s) {
  std::size_t k = 1;
  while (k < s.size() && k < 4 && (static_cast<unsigned char>(s[s.size() - k]) & 0xC0) == 0x80) ++k;
  return k;
}

}  // namespace

KeywordTemplate::KeywordTemplate(std::string text) : text_(std::move(text)) {
  const auto first = text_.find(kPlaceholder);
  if (first == std::string::npos || text_.find(kPlaceholder, first + 1) != std::string::npos) {
    throw std::invalid_argument("keyword template must contain exactly one {kw} placeholder");
  }
  prefix_ = text_.substr(0, first);
  suffix_ = text_.substr(first + kPlaceholder.size());
}

std::string KeywordTemplate::render(std::string_view keyword) const {
  return prefix_ + std::string(keyword) + suffix_;
}

std::string extract_keyword(std::string_view headline, const CorpusStats& stats, const TriggerLexicon& lex) {
  const TokenSeq toks = tokenize(headline);
  if (toks.empty()) throw std::invalid_argument("extract_keyword: headline has no tokens");
  const std::vector<double> w = tfidf_weights(toks, stats);
  auto argmax = [&](bool entities_only) -> std::optional<std::size_t> {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (entities_only && !lex.is_entity(toks[i])) continue;
      if (!best || w[i] > w[*best]) best = i;
    }
    return best;
  };
  auto pick = argmax(true);
  if (!pick) pick = argmax(false);
  return toks[*pick];
}

PromptedExample build_prompt(std::string_view headline, std::string_view event, std::string_view keyword,
                             const KeywordTemplate& tmpl) {
  if (keyword.empty()) throw std::invalid_argument("build_prompt: keyword must be non-empty");
  PromptedExample ex;
  ex.headline = std::string(headline);
  ex.event = std::string(event);
  ex.rendered_template = tmpl.render(keyword);
  ex.encoder_input = std::string(kClsMarker) + ex.headline + std::string(kSepMarker);
  ex.decoder_input = std::string(kClsMarker) + ex.rendered_template + " " + ex.event + std::string(kSepMarker);
  return ex;
}

ParsedPrompt parse_prompt(std::string_view encoder_input, std::string_view decoder_input, const KeywordTemplate& tmpl) {
  auto unwrap = [](std::string_view s, const char* which) {
    if (!s.starts_with(kClsMarker) || !s.ends_with(kSepMarker) || s.size() < kClsMarker.size() + kSepMarker.size()) {
      throw DataError(std::string("prompt: malformed ") + which + " input");
    }
    s.remove_prefix(kClsMarker.size());
    s.remove_suffix(kSepMarker.size());
    return s;
  };
  ParsedPrompt out;
  out.headline = std::string(unwrap(encoder_input, "encoder"));
  std::string_view dec = unwrap(decoder_input, "decoder");
  if (!dec.starts_with(tmpl.prefix())) throw DataError("prompt: decoder input does not start with the template");
  dec.remove_prefix(tmpl.prefix().size());
  // Keywords are single tokens, so the first "<suffix> " closes the template.
  const std::string closer = std::string(tmpl.suffix()) + " ";
  const auto at = dec.find(closer);
  if (at == std::string_view::npos) throw DataError("prompt: decoder input is missing the template/event separator");
  out.keyword = std::string(dec.substr(0, at));
  out.event = std::string(dec.substr(at + closer.size()));
  return out;
}

std::string make_positive_pair(std::string_view headline, std::uint64_t seed) {
  TokenSeq toks = tokenize(headline);
  if (toks.size() < 2) throw std::invalid_argument("make_positive_pair: need at least 2 tokens");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> first(0, toks.size() - 1);
  std::uniform_int_distribution<std::size_t> second(0, toks.size() - 2);
  const std::size_t i = first(rng);
  std::size_t j = second(rng);
  if (j >= i) ++j;  // uniform over positions != i
  std::swap(toks[i], toks[j]);
  return join_tokens(toks);
}

std::string_view to_string(PairSource s) {
  return s == PairSource::click_query ? "click_query" : "trigger_extraction";
}

TokenSeq trigger_window(const TokenSeq& tokens, const TriggerLexicon& lex, std::size_t window) {
  const auto hits = extract_triggers(tokens, lex);
  if (hits.empty()) return {};
  const std::size_t first = hits.front().position;
  const std::size_t begin = first == 0 ? 0 : first - 1;
  const std::size_t last = std::min(tokens.size() - 1, first + window);
  return TokenSeq(tokens.begin() + static_cast<std::ptrdiff_t>(begin),
                  tokens.begin() + static_cast<std::ptrdiff_t>(last + 1));
}

PairBuildResult build_training_pairs(std::span<const ClickRecord> clicklog, std::span<const Headline> headlines,
                                     const TriggerLexicon& lex, const PairBuildConfig& config) {
  std::unordered_map<std::string_view, const Headline*> by_id;
  for (const auto& h : headlines) by_id.emplace(h.id, &h);
  PairBuildResult out;
  for (const auto& c : clicklog) {
    const auto it = by_id.find(c.doc_id);
    if (it == by_id.end()) {
      ++out.skipped_clicks;
      continue;
    }
    out.pairs.push_back({it->second->title, c.query, PairSource::click_query, it->second->id});
  }
  for (const auto& h : headlines) {
    const TokenSeq span = trigger_window(tokenize(h.title), lex, config.window);
    if (span.empty()) continue;
    out.pairs.push_back({h.title, join_tokens(span), PairSource::trigger_extraction, h.id});
  }
  return out;
}

bool passes_relevance_gates(const TokenSeq& a, const TokenSeq& b, const EncoderModel& model,
                            const PairFilterThresholds& thresholds) {
  return jaccard_distance(a, b) <= thresholds.max_jaccard && embed_score(model, a, b) >= thresholds.min_embed;
}

std::vector<TrainingPair> filter_pairs(std::span<const TrainingPair> pairs, const EncoderModel& model,
                                       const PairFilterThresholds& thresholds) {
  std::vector<TrainingPair> kept;
  for (const auto& p : pairs) {
    const TokenSeq h = tokenize(p.headline);
    const TokenSeq e = tokenize(p.event);
    if (h.empty() || e.empty()) continue;
    if (passes_relevance_gates(h, e, model, thresholds)) kept.push_back(p);
  }
  return kept;
}

std::string clean_headline(std::string_view headline) {
  std::string_view s = trim(headline);
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& [open, close] : {std::pair<std::string_view, std::string_view>{"\xE3\x80\x90", "\xE3\x80\x91"},
                                      std::pair<std::string_view, std::string_view>{"[", "]"}}) {
      if (s.starts_with(open)) {
        const auto end = s.find(close, open.size());
        if (end != std::string_view::npos) {
          s = trim(s.substr(end + close.size()));
          changed = true;
        }
      }
    }
  }
  std::size_t cut = std::string_view::npos;
  for (const std::string_view delim : {std::string_view("|"), std::string_view("\xE4\xB8\xA8"), std::string_view(" - ")}) {
    const auto at = s.rfind(delim);
    if (at != std::string_view::npos && at > 0 && (cut == std::string_view::npos || at > cut)) cut = at;
  }
  if (cut != std::string_view::npos) s = trim(s.substr(0, cut));
  while (!s.empty()) {
    const std::size_t len = last_code_point_len(s);
    if (!tokenize(s.substr(s.size() - len)).empty()) break;
    s.remove_suffix(len);
  }
  return std::string(s);
}

std::string extractive_reformulate(std::string_view headline, const TriggerLexicon& lex,
                                   const ReformulateConfig& config) {
  const TokenSeq toks = tokenize(clean_headline(headline));
  const auto hits = extract_triggers(toks, lex);
  if (hits.empty()) throw DataError("not reformulatable: " + std::string(headline));
  const std::size_t last = std::min(toks.size() - 1, hits.front().position + config.window);
  return join_tokens(TokenSeq(toks.begin(), toks.begin() + static_cast<std::ptrdiff_t>(last + 1)));
}

std::vector<GoldPhrase> load_title2eventphrase(const std::filesystem::path& path) {
  std::vector<GoldPhrase> out;
  for_each_jsonl(path, [&](const Json& rec, std::size_t line) {
    GoldPhrase g;
    g.title = require_string(rec, "title", line);
    g.event = require_string(rec, "event", line);
    g.topic = rec.contains("topic") && rec["topic"].is_string() ? rec["topic"].get<std::string>() : "";
    out.push_back(std::move(g));
  });
  return out;
}

Json GenEvalReport::to_json() const {
  Json rows_json = Json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"prediction", r.prediction},
                         {"reference", r.reference},
                         {"rouge_l", r.rouge_l},
                         {"bleu", r.bleu},
                         {"embed_score", r.embed_score}});
  }
  return Json{{"rouge_l", rouge_l}, {"bleu", bleu}, {"embed_score", embed_score}, {"n", rows.size()}, {"rows", rows_json}};
}

std::string GenEvalReport::to_tsv() const {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed << "prediction\treference\trouge_l\tbleu\tembed_score\n";
  for (const auto& r : rows) {
    os << r.prediction << '\t' << r.reference << '\t' << r.rouge_l << '\t' << r.bleu << '\t' << r.embed_score << '\n';
  }
  os << "MEAN\t\t" << rouge_l << '\t' << bleu << '\t' << embed_score << '\n';
  return os.str();
}

GenEvalReport evaluate_generation(std::span<const std::string> predictions, std::span<const GoldPhrase> gold,
                                  const EncoderModel& model) {
  if (gold.empty()) throw std::invalid_argument("evaluate_generation: empty gold set");
  if (predictions.size() != gold.size()) {
    throw std::invalid_argument("evaluate_generation: " + std::to_string(predictions.size()) +
                                " predictions for " + std::to_string(gold.size()) + " gold rows");
  }
  GenEvalReport rep;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const TokenSeq cand = tokenize(predictions[i]);
    const TokenSeq ref = tokenize(gold[i].event);
    GenEvalRow row{predictions[i], gold[i].event, rouge_l(cand, ref), bleu(cand, ref), embed_score(model, cand, ref)};
    rep.rouge_l += row.rouge_l;
    rep.bleu += row.bleu;
    rep.embed_score += row.embed_score;
    rep.rows.push_back(std::move(row));
  }
  const double n = static_cast<double>(gold.size());
  rep.rouge_l /= n;
  rep.bleu /= n;
  rep.embed_score /= n;
  return rep;
}

}  // namespace eqe
