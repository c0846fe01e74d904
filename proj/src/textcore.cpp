#include "eqe/textcore.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_set>

namespace eqe {

namespace {

// Decodes one UTF-8 code point starting at text[i]; advances i. Returns
// 0xFFFFFFFF for an invalid sequence (one byte consumed).
char32_t decode_utf8(std::string_view text, std::size_t& i) {
  constexpr char32_t kInvalid = 0xFFFFFFFF;
  const auto b0 = static_cast<unsigned char>(text[i]);
  std::size_t len = 0;
  char32_t cp = 0;
  if (b0 < 0x80) {
    ++i;
    return b0;
  } else if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return kInvalid;
  }
  if (i + len > text.size()) {
    ++i;
    return kInvalid;
  }
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(text[i + k]);
    if ((b & 0xC0) != 0x80) {
      ++i;
      return kInvalid;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  i += len;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

enum class CharClass { separator, word, single };

bool is_cjk(char32_t cp) {
  return (cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) ||
         (cp >= 0xF900 && cp <= 0xFAFF) || (cp >= 0x20000 && cp <= 0x2FFFF) ||
         (cp >= 0x3040 && cp <= 0x30FF) || (cp >= 0xAC00 && cp <= 0xD7AF);
}

bool is_unicode_separator(char32_t cp) {
  return cp == 0xFFFFFFFF || (cp >= 0x80 && cp <= 0xBF) || cp == 0xD7 || cp == 0xF7 ||
         (cp >= 0x2000 && cp <= 0x206F) || (cp >= 0x3000 && cp <= 0x303F) ||
         (cp >= 0xFF00 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
         (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65) ||
         (cp >= 0x2190 && cp <= 0x2BFF) || cp == 0xFEFF ||
         cp == 0x4E28;  // "丨", used as a headline segment delimiter
}

// Full-width digits and letters fold to ASCII.
char32_t fold(char32_t cp) {
  if (cp >= 0xFF10 && cp <= 0xFF19) return cp - 0xFF10 + U'0';
  if (cp >= 0xFF21 && cp <= 0xFF3A) return cp - 0xFF21 + U'a';
  if (cp >= 0xFF41 && cp <= 0xFF5A) return cp - 0xFF41 + U'a';
  if (cp >= U'A' && cp <= U'Z') return cp - U'A' + U'a';
  return cp;
}

CharClass classify(char32_t cp) {
  if (cp < 0x80) {
    const bool alnum = (cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z') ||
                       (cp >= U'0' && cp <= U'9');
    return alnum ? CharClass::word : CharClass::separator;
  }
  if (is_unicode_separator(cp)) return CharClass::separator;
  if (is_cjk(cp)) return CharClass::single;
  return CharClass::word;
}

}  // namespace

TokenSeq tokenize(std::string_view text) {
  TokenSeq out;
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    const char32_t cp = decode_utf8(text, i);
    switch (classify(cp)) {
      case CharClass::word:
        append_utf8(current, fold(cp));
        break;
      case CharClass::single:
        if (!current.empty()) out.push_back(std::move(current));
        current.clear();
        {
          std::string s;
          append_utf8(s, cp);
          out.push_back(std::move(s));
        }
        break;
      case CharClass::separator:
        if (!current.empty()) out.push_back(std::move(current));
        current.clear();
        break;
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::string join_tokens(const TokenSeq& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

double jaccard_distance(const TokenSeq& a, const TokenSeq& b) {
  const std::unordered_set<std::string> sa(a.begin(), a.end());
  const std::unordered_set<std::string> sb(b.begin(), b.end());
  if (sa.empty() && sb.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& t : sa) inter += sb.count(t);
  const std::size_t uni = sa.size() + sb.size() - inter;
  return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

CorpusStats::CorpusStats(const std::vector<TokenSeq>& docs) {
  for (const auto& d : docs) add_document(d);
}

void CorpusStats::add_document(const TokenSeq& doc) {
  ++doc_count_;
  total_len_ += doc.size();
  std::unordered_set<std::string_view> seen;
  for (const auto& t : doc) {
    if (seen.insert(t).second) ++df_[t];
  }
}

std::size_t CorpusStats::doc_freq(const std::string& token) const {
  const auto it = df_.find(token);
  return it == df_.end() ? 0 : it->second;
}

double CorpusStats::avg_doc_len() const {
  return doc_count_ == 0 ? 0.0 : static_cast<double>(total_len_) / static_cast<double>(doc_count_);
}

double bm25_idf(std::size_t doc_count, std::size_t doc_freq) {
  const double n = static_cast<double>(doc_count);
  const double df = static_cast<double>(doc_freq);
  return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

double bm25_score(const TokenSeq& query, const TokenSeq& doc, const CorpusStats& stats,
                  const BM25Params& params) {
  if (stats.doc_count() == 0) throw std::invalid_argument("bm25_score: corpus stats are empty");
  std::unordered_map<std::string_view, std::size_t> tf;
  for (const auto& t : doc) ++tf[t];
  const double avgdl = stats.avg_doc_len();
  const double len_norm =
      1.0 - params.b + params.b * (avgdl > 0.0 ? static_cast<double>(doc.size()) / avgdl : 0.0);
  double score = 0.0;
  for (const auto& q : query) {
    const auto it = tf.find(q);
    if (it == tf.end()) continue;
    const double f = static_cast<double>(it->second);
    const double idf = bm25_idf(stats.doc_count(), stats.doc_freq(q));
    score += idf * (f * (params.k1 + 1.0)) / (f + params.k1 * len_norm);
  }
  return score;
}

double tfidf_idf(std::size_t doc_count, std::size_t doc_freq) {
  return std::log((static_cast<double>(doc_count) + 1.0) / (static_cast<double>(doc_freq) + 1.0)) +
         1.0;
}

std::vector<double> tfidf_weights(const TokenSeq& doc, const CorpusStats& stats) {
  std::unordered_map<std::string_view, std::size_t> tf;
  for (const auto& t : doc) ++tf[t];
  std::vector<double> w;
  w.reserve(doc.size());
  for (const auto& t : doc) {
    w.push_back(static_cast<double>(tf[t]) * tfidf_idf(stats.doc_count(), stats.doc_freq(t)));
  }
  return w;
}

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const TokenSeq& candidate, const TokenSeq& reference) {
  if (candidate.empty() && reference.empty()) return 1.0;
  const std::size_t lcs = lcs_length(candidate, reference);
  if (lcs == 0) return 0.0;
  const double p = static_cast<double>(lcs) / static_cast<double>(candidate.size());
  const double r = static_cast<double>(lcs) / static_cast<double>(reference.size());
  return 2.0 * p * r / (p + r);
}

double bleu(const TokenSeq& candidate, const TokenSeq& reference, int max_n) {
  if (max_n < 1) throw std::invalid_argument("bleu: max_n must be >= 1");
  if (candidate.empty()) return 0.0;
  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    const auto un = static_cast<std::size_t>(n);
    std::map<std::vector<std::string_view>, std::size_t> ref_counts;
    for (std::size_t i = 0; i + un <= reference.size(); ++i) {
      ++ref_counts[{reference.begin() + i, reference.begin() + i + un}];
    }
    std::map<std::vector<std::string_view>, std::size_t> cand_counts;
    std::size_t total = 0;
    for (std::size_t i = 0; i + un <= candidate.size(); ++i) {
      ++cand_counts[{candidate.begin() + i, candidate.begin() + i + un}];
      ++total;
    }
    std::size_t clipped = 0;
    for (const auto& [gram, c] : cand_counts) {
      const auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) clipped += std::min(c, it->second);
    }
    double p;
    if (n == 1) {
      p = static_cast<double>(clipped) / static_cast<double>(total);
    } else {
      p = (static_cast<double>(clipped) + 1.0) / (static_cast<double>(total) + 1.0);
    }
    if (p <= 0.0) return 0.0;
    log_sum += std::log(p);
  }
  const double ratio = static_cast<double>(reference.size()) / static_cast<double>(candidate.size());
  const double bp = std::exp(std::min(0.0, 1.0 - ratio));
  return bp * std::exp(log_sum / static_cast<double>(max_n));
}

Bm25Index::Bm25Index(std::vector<TokenSeq> docs, BM25Params params)
    : docs_(std::move(docs)), params_(params), stats_(docs_) {
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    std::map<std::string_view, std::size_t> tf;
    for (const auto& t : docs_[d]) ++tf[t];
    for (const auto& [t, f] : tf) postings_[std::string(t)].emplace_back(d, f);
  }
}

double Bm25Index::score(const TokenSeq& query, std::size_t doc) const {
  return bm25_score(query, docs_.at(doc), stats_, params_);
}

std::vector<Bm25Index::Hit> Bm25Index::search(const TokenSeq& query, std::size_t k) const {
  std::vector<Hit> out;
  if (docs_.empty() || k == 0) return out;
  std::unordered_map<std::size_t, double> acc;
  const double avgdl = stats_.avg_doc_len();
  for (const auto& q : query) {
    const auto it = postings_.find(q);
    if (it == postings_.end()) continue;
    const double idf = bm25_idf(stats_.doc_count(), it->second.size());
    for (const auto& [d, f] : it->second) {
      const double len = static_cast<double>(docs_[d].size());
      const double norm = 1.0 - params_.b + params_.b * (avgdl > 0.0 ? len / avgdl : 0.0);
      const double tf = static_cast<double>(f);
      acc[d] += idf * (tf * (params_.k1 + 1.0)) / (tf + params_.k1 * norm);
    }
  }
  out.reserve(acc.size());
  for (const auto& [d, s] : acc) out.push_back({d, s});
  auto by_score = [](const Hit& a, const Hit& b) {
    return a.score != b.score ? a.score > b.score : a.doc < b.doc;
  };
  if (out.size() > k) {
    std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(k), out.end(), by_score);
    out.resize(k);
  } else {
    std::sort(out.begin(), out.end(), by_score);
  }
  // Pad with zero-score documents in positional order.
  for (std::size_t d = 0; d < docs_.size() && out.size() < k; ++d) {
    if (!acc.count(d)) out.push_back({d, 0.0});
  }
  return out;
}

}  // namespace eqe
