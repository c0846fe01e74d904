#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace eqe {

/// Ordered list of lowercased tokens. Never contains empty strings.
using TokenSeq = std::vector<std::string>;

/// Splits on whitespace and punctuation (ASCII and the common CJK /
/// full-width punctuation blocks). ASCII letters are lowercased, full-width
/// alphanumerics fold to ASCII, and every CJK ideograph / kana / hangul
/// syllable becomes its own token. Invalid UTF-8 bytes act as separators.
TokenSeq tokenize(std::string_view text);

/// Joins tokens with single spaces. tokenize(join_tokens(t)) == t for any
/// tokenizer output t.
std::string join_tokens(const TokenSeq& tokens);

/// 1 - |A n B| / |A u B| over token sets; two empty sets have distance 0.
double jaccard_distance(const TokenSeq& a, const TokenSeq& b);

struct BM25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// Document-frequency statistics over an indexed collection.
class CorpusStats {
 public:
  CorpusStats() = default;
  explicit CorpusStats(const std::vector<TokenSeq>& docs);

  void add_document(const TokenSeq& doc);

  std::size_t doc_count() const { return doc_count_; }
  std::size_t doc_freq(const std::string& token) const;
  double avg_doc_len() const;
  const std::unordered_map<std::string, std::size_t>& doc_freqs() const { return df_; }

 private:
  std::size_t doc_count_ = 0;
  std::size_t total_len_ = 0;
  std::unordered_map<std::string, std::size_t> df_;
};

/// ln((N - df + 0.5) / (df + 0.5) + 1); never negative.
double bm25_idf(std::size_t doc_count, std::size_t doc_freq);

/// Okapi BM25 of `doc` for `query`. Repeated query terms count once per
/// occurrence. Throws std::invalid_argument when stats are empty.
double bm25_score(const TokenSeq& query, const TokenSeq& doc, const CorpusStats& stats,
                  const BM25Params& params = {});

/// Smoothed idf used by TF-IDF keyword weighting: ln((N + 1) / (df + 1)) + 1.
double tfidf_idf(std::size_t doc_count, std::size_t doc_freq);

/// TF-IDF weight of each position's token within `doc` (tf counted in doc).
std::vector<double> tfidf_weights(const TokenSeq& doc, const CorpusStats& stats);

/// Longest-common-subsequence length (token level).
std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b);

/// ROUGE-L F1. Both inputs empty is defined as 1.0.
double rouge_l(const TokenSeq& candidate, const TokenSeq& reference);

/// Sentence BLEU: geometric mean of clipped n-gram precisions for
/// n = 1..max_n (add-one smoothing on n >= 2) times the brevity penalty
/// exp(min(0, 1 - |ref| / |cand|)). Empty candidate scores 0.
double bleu(const TokenSeq& candidate, const TokenSeq& reference, int max_n = 4);

/// Inverted BM25 index over a fixed document collection.
class Bm25Index {
 public:
  struct Hit {
    std::size_t doc;  // position in the indexed collection
    double score;
  };

  Bm25Index() = default;
  explicit Bm25Index(std::vector<TokenSeq> docs, BM25Params params = {});

  std::size_t size() const { return docs_.size(); }
  const CorpusStats& stats() const { return stats_; }
  const TokenSeq& doc(std::size_t i) const { return docs_[i]; }

  double score(const TokenSeq& query, std::size_t doc) const;

  /// Top `k` documents by score, ties broken by ascending document
  /// position. Documents not matching any query term score 0 and still fill
  /// the list, so k >= size() returns the whole collection.
  std::vector<Hit> search(const TokenSeq& query, std::size_t k) const;

 private:
  std::vector<TokenSeq> docs_;
  BM25Params params_;
  CorpusStats stats_;
  // token -> (doc, tf)
  std::unordered_map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> postings_;
};

}  // namespace eqe
