#include "eqe/collect.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "eqe/common.hpp"
#include "eqe/jsonl.hpp"

namespace eqe {

namespace {

Headline headline_from_json(const Json& rec, std::size_t line) {
  Headline h;
  h.id = require_string(rec, "id", line);
  h.title = require_string(rec, "title", line);
  h.site = require_string(rec, "site", line);
  h.page_type = require_string(rec, "page_type", line);
  h.publish_ts = require_int(rec, "publish_ts", line);
  if (h.id.empty()) throw DataError("empty field id at line " + std::to_string(line));
  if (h.title.empty()) throw DataError("empty field title at line " + std::to_string(line));
  return h;
}

std::vector<Headline> dedup_headlines(std::vector<Headline> raw) {
  std::vector<Headline> out;
  std::unordered_map<std::string, std::size_t> pos;
  for (auto& h : raw) {
    const auto it = pos.find(h.id);
    if (it == pos.end()) {
      pos.emplace(h.id, out.size());
      out.push_back(std::move(h));
    } else if (h.publish_ts < out[it->second].publish_ts) {
      out[it->second] = std::move(h);
    }
  }
  return out;
}

ClickRecord click_from_json(const Json& rec, std::size_t line) {
  ClickRecord c;
  c.query = require_string(rec, "query", line);
  c.doc_id = require_string(rec, "doc_id", line);
  c.ts = require_int(rec, "ts", line);
  if (c.query.empty()) throw DataError("empty field query at line " + std::to_string(line));
  if (c.doc_id.empty()) throw DataError("empty field doc_id at line " + std::to_string(line));
  return c;
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ull) {
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

bool ends_with_question_mark(std::string_view title) {
  while (!title.empty() && (title.back() == ' ' || title.back() == '\t')) title.remove_suffix(1);
  if (title.ends_with("?")) return true;
  return title.ends_with("\xEF\xBC\x9F");  // full-width question mark
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)), stable in both directions.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

std::vector<Headline> parse_headlines(std::istream& in) {
  std::vector<Headline> raw;
  for_each_jsonl(in, [&](const Json& rec, std::size_t line) { raw.push_back(headline_from_json(rec, line)); });
  return dedup_headlines(std::move(raw));
}

std::vector<Headline> load_headlines(const std::filesystem::path& path) {
  std::vector<Headline> raw;
  for_each_jsonl(path, [&](const Json& rec, std::size_t line) { raw.push_back(headline_from_json(rec, line)); });
  return dedup_headlines(std::move(raw));
}

std::vector<ClickRecord> parse_clicklog(std::istream& in) {
  std::vector<ClickRecord> out;
  for_each_jsonl(in, [&](const Json& rec, std::size_t line) { out.push_back(click_from_json(rec, line)); });
  return out;
}

std::vector<ClickRecord> load_clicklog(const std::filesystem::path& path) {
  std::vector<ClickRecord> out;
  for_each_jsonl(path, [&](const Json& rec, std::size_t line) { out.push_back(click_from_json(rec, line)); });
  return out;
}

std::vector<LabeledTitle> load_labeled(const std::filesystem::path& path) {
  std::vector<LabeledTitle> out;
  for_each_jsonl(path, [&](const Json& rec, std::size_t line) {
    out.push_back({require_string(rec, "title", line), require_bool(rec, "is_event", line)});
  });
  return out;
}

std::set<std::string> load_token_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::set<std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const TokenSeq toks = tokenize(line);
    if (toks.empty()) continue;
    if (toks.size() != 1) {
      throw DataError(path.filename().string() + ": entry is not a single token at line " +
                      std::to_string(lineno));
    }
    out.insert(toks.front());
  }
  if (out.empty()) throw DataError(path.string() + ": lexicon is empty");
  return out;
}

TriggerLexicon TriggerLexicon::load(const std::filesystem::path& dir) {
  TriggerLexicon lex;
  lex.triggers = load_token_list(dir / "triggers.txt");
  lex.interrogatives = load_token_list(dir / "interrogatives.txt");
  lex.entity_lexicon = load_token_list(dir / "entities.txt");
  return lex;
}

void TriggerLexicon::save(const std::filesystem::path& dir) const {
  auto dump = [](const std::set<std::string>& s) {
    std::string out;
    for (const auto& t : s) out += t + "\n";
    return out;
  };
  write_text_file(dir / "triggers.txt", dump(triggers));
  write_text_file(dir / "interrogatives.txt", dump(interrogatives));
  write_text_file(dir / "entities.txt", dump(entity_lexicon));
}

std::vector<TriggerHit> extract_triggers(const TokenSeq& tokens, const TriggerLexicon& lex) {
  std::vector<TriggerHit> hits;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (lex.is_trigger(tokens[i])) hits.push_back({tokens[i], i});
  }
  return hits;
}

std::vector<TriggerHit> extract_triggers(std::string_view title, const TriggerLexicon& lex) {
  return extract_triggers(tokenize(title), lex);
}

std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::non_event: return "non_event";
    case RejectReason::missing_component: return "missing_component";
    case RejectReason::multi_event: return "multi_event";
    case RejectReason::irregular_syntax: return "irregular_syntax";
    case RejectReason::interrogative: return "interrogative";
  }
  return "unknown";
}

RejectReason parse_reject_reason(std::string_view s) {
  for (const RejectReason r : kAllRejectReasons) {
    if (to_string(r) == s) return r;
  }
  throw DataError("unknown reject reason: " + std::string(s));
}

std::size_t count_segment_delimiters(std::string_view title) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < title.size();) {
    if (title[i] == '|') {
      ++n;
      ++i;
    } else if (title.substr(i).starts_with("\xE4\xB8\xA8")) {  // 丨
      ++n;
      i += 3;
    } else if (title.substr(i).starts_with(" - ")) {
      ++n;
      i += 3;
    } else {
      ++i;
    }
  }
  return n;
}

std::optional<RejectReason> coarse_verdict(std::string_view title, const TriggerLexicon& lex,
                                           const CoarseFilterConfig& config) {
  const TokenSeq toks = tokenize(title);
  if (toks.size() < config.min_tokens || toks.size() > config.max_tokens ||
      count_segment_delimiters(title) > config.max_delimiters) {
    return RejectReason::irregular_syntax;
  }
  if (ends_with_question_mark(title) ||
      std::any_of(toks.begin(), toks.end(), [&](const auto& t) { return lex.is_interrogative(t); })) {
    return RejectReason::interrogative;
  }
  const auto hits = extract_triggers(toks, lex);
  if (hits.size() > config.max_triggers) return RejectReason::multi_event;
  if (hits.empty() || hits.front().position == 0) return RejectReason::missing_component;
  return std::nullopt;
}

CoarseReport coarse_filter(std::span<const Headline> headlines, const TriggerLexicon& lex,
                           const CoarseFilterConfig& config) {
  CoarseReport report;
  for (const auto& h : headlines) {
    if (const auto reason = coarse_verdict(h.title, lex, config)) {
      report.rejected.push_back({h, *reason});
    } else {
      report.kept.push_back(h);
    }
  }
  return report;
}

SparseVector featurize_title(std::string_view title, const TriggerLexicon* lex,
                             const FeaturizerConfig& config) {
  const TokenSeq toks = tokenize(title);
  std::map<std::uint32_t, double> acc;
  const std::uint32_t dim = config.hash_dim;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    acc[static_cast<std::uint32_t>(fnv1a(toks[i], fnv1a("u:")) % dim)] += 1.0;
    if (i + 1 < toks.size()) {
      const std::uint64_t h = fnv1a(toks[i + 1], fnv1a("\x1f", fnv1a(toks[i], fnv1a("b:"))));
      acc[static_cast<std::uint32_t>(h % dim)] += 1.0;
    }
  }
  SparseVector out(acc.begin(), acc.end());
  double triggers = 0.0;
  double interrogative = 0.0;
  if (lex != nullptr) {
    triggers = static_cast<double>(extract_triggers(toks, *lex).size());
    const bool q = ends_with_question_mark(title) ||
                   std::any_of(toks.begin(), toks.end(), [&](const auto& t) { return lex->is_interrogative(t); });
    interrogative = q ? 1.0 : 0.0;
  }
  out.emplace_back(dim, static_cast<double>(toks.size()));
  out.emplace_back(dim + 1, triggers);
  out.emplace_back(dim + 2, interrogative);
  return out;
}

double FineFilterModel::score(const SparseVector& x) const {
  double z = bias;
  for (const auto& [i, v] : x) {
    const auto it = weights.find(i);
    if (it != weights.end()) z += it->second * v;
  }
  const double s = sigmoid(z);
  return std::clamp(s, std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
}

double FineFilterModel::score(std::string_view title, const TriggerLexicon* lex) const {
  return score(featurize_title(title, lex, features));
}

void FineFilterModel::save(const std::filesystem::path& path) const {
  Json w = Json::array();
  for (const auto& [i, v] : weights) w.push_back({i, v});
  write_json_file(path, Json{{"format", "eqe-fine-filter"},
                             {"version", 1},
                             {"hash_dim", features.hash_dim},
                             {"bias", bias},
                             {"threshold", threshold},
                             {"weights", w},
                             {"loss_curve", loss_curve}});
}

FineFilterModel FineFilterModel::load(const std::filesystem::path& path) {
  const Json doc = read_json_file(path);
  try {
    if (doc.at("format") != "eqe-fine-filter" || doc.at("version") != 1) {
      throw DataError(path.string() + ": not a fine-filter model (version 1)");
    }
    FineFilterModel m;
    m.features.hash_dim = doc.at("hash_dim").get<std::uint32_t>();
    m.bias = doc.at("bias").get<double>();
    m.threshold = doc.at("threshold").get<double>();
    for (const auto& e : doc.at("weights")) m.weights[e.at(0).get<std::uint32_t>()] = e.at(1).get<double>();
    m.loss_curve = doc.value("loss_curve", std::vector<double>{});
    return m;
  } catch (const Json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

FineFilterModel train_fine_filter(std::span<const LabeledTitle> labeled, const TriggerLexicon* lex,
                                  const FineFilterConfig& config) {
  std::size_t pos = 0;
  for (const auto& l : labeled) pos += l.is_event ? 1 : 0;
  const std::size_t neg = labeled.size() - pos;
  if (pos < 2 || neg < 2) {
    throw std::invalid_argument("train_fine_filter: need >= 2 examples of each class");
  }

  // Compact the feature space to the indices seen in training.
  std::vector<SparseVector> xs;
  std::map<std::uint32_t, std::size_t> slot_of;
  for (const auto& l : labeled) {
    xs.push_back(featurize_title(l.title, lex, config.features));
    for (const auto& [i, v] : xs.back()) slot_of.emplace(i, 0);
  }
  std::vector<std::uint32_t> feature_of;
  for (auto& [i, slot] : slot_of) {
    slot = feature_of.size();
    feature_of.push_back(i);
  }
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
  rows.reserve(xs.size());
  for (const auto& x : xs) {
    std::vector<std::pair<std::size_t, double>> r;
    for (const auto& [i, v] : x) r.emplace_back(slot_of.at(i), v);
    rows.push_back(std::move(r));
  }
  std::vector<double> sign;
  for (const auto& l : labeled) sign.push_back(l.is_event ? 1.0 : -1.0);

  const std::size_t p = feature_of.size();
  const double n = static_cast<double>(rows.size());
  std::vector<double> w(p, 0.0);
  double b = 0.0;

  auto loss_at = [&](const std::vector<double>& ww, double bb) {
    double s = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      double z = bb;
      for (const auto& [j, v] : rows[k]) z += ww[j] * v;
      s += softplus(-sign[k] * z);
    }
    return s / n;
  };

  FineFilterModel model;
  model.threshold = config.threshold;
  model.features = config.features;
  double loss = loss_at(w, b);
  std::vector<double> gw(p), trial(p);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    model.loss_curve.push_back(loss);
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      double z = b;
      for (const auto& [j, v] : rows[k]) z += w[j] * v;
      const double coef = -sign[k] * sigmoid(-sign[k] * z) / n;
      for (const auto& [j, v] : rows[k]) gw[j] += coef * v;
      gb += coef;
    }
    const double gnorm2 = dot(gw, gw) + gb * gb;
    if (gnorm2 == 0.0) continue;
    double step = config.lr;
    for (int attempt = 0; attempt < 60; ++attempt, step *= 0.5) {
      for (std::size_t j = 0; j < p; ++j) trial[j] = w[j] - step * gw[j];
      const double tb = b - step * gb;
      const double tl = loss_at(trial, tb);
      if (tl <= loss - 0.5 * step * gnorm2) {
        w.swap(trial);
        b = tb;
        loss = tl;
        break;
      }
    }
  }
  model.loss_curve.push_back(loss);
  model.bias = b;
  for (std::size_t j = 0; j < p; ++j) {
    if (w[j] != 0.0) model.weights[feature_of[j]] = w[j];
  }
  return model;
}

FineReport fine_filter(std::span<const Headline> candidates, const FineFilterModel& model,
                       const TriggerLexicon* lex, std::int64_t ingest_ts) {
  FineReport report;
  for (const auto& h : candidates) {
    const double s = model.score(h.title, lex);
    if (s >= model.threshold) {
      report.kept.push_back({h, s, ingest_ts});
    } else {
      report.rejected.push_back({h, RejectReason::non_event});
    }
  }
  return report;
}

}  // namespace eqe
