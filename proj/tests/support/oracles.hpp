#pragma once

// Brute-force reference implementations. They share no code with the
// library and favour the most literal computation over speed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using Tokens = std::vector<std::string>;
using Dense = std::vector<std::vector<double>>;

inline double bm25(const Tokens& query, std::size_t doc_index, const std::vector<Tokens>& docs, double k1, double b) {
  const double n = static_cast<double>(docs.size());
  double total_len = 0.0;
  for (const auto& d : docs) total_len += static_cast<double>(d.size());
  const double avgdl = total_len / n;
  const Tokens& doc = docs[doc_index];
  double score = 0.0;
  for (const auto& q : query) {
    double df = 0.0;
    for (const auto& d : docs) df += std::count(d.begin(), d.end(), q) > 0 ? 1.0 : 0.0;
    const double tf = static_cast<double>(std::count(doc.begin(), doc.end(), q));
    const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
    score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * static_cast<double>(doc.size()) / avgdl));
  }
  return score;
}

inline double jaccard_distance(const Tokens& a, const Tokens& b) {
  const std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::set<std::string> uni = sa;
  uni.insert(sb.begin(), sb.end());
  if (uni.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& t : sa) inter += sb.count(t);
  return 1.0 - static_cast<double>(inter) / static_cast<double>(uni.size());
}

inline bool is_subsequence(const Tokens& sub, const Tokens& seq) {
  std::size_t j = 0;
  for (std::size_t i = 0; i < seq.size() && j < sub.size(); ++i) {
    if (seq[i] == sub[j]) ++j;
  }
  return j == sub.size();
}

// Longest common subsequence by enumerating every subsequence of `a`.
inline std::size_t lcs_enumerate(const Tokens& a, const Tokens& b) {
  std::size_t best = 0;
  for (unsigned mask = 0; mask < (1u << a.size()); ++mask) {
    Tokens sub;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (mask & (1u << i)) sub.push_back(a[i]);
    }
    if (sub.size() > best && is_subsequence(sub, b)) best = sub.size();
  }
  return best;
}

inline double rouge_l(const Tokens& cand, const Tokens& ref) {
  if (cand.empty() && ref.empty()) return 1.0;
  if (cand.empty() || ref.empty()) return 0.0;
  const double l = static_cast<double>(lcs_enumerate(cand, ref));
  if (l == 0.0) return 0.0;
  const double p = l / static_cast<double>(cand.size());
  const double r = l / static_cast<double>(ref.size());
  return 2.0 * p * r / (p + r);
}

inline std::map<Tokens, int> ngram_counts(const Tokens& t, std::size_t n) {
  std::map<Tokens, int> out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) ++out[Tokens(t.begin() + i, t.begin() + i + n)];
  return out;
}

inline double bleu(const Tokens& cand, const Tokens& ref, int max_n) {
  if (cand.empty()) return 0.0;
  double prod = 1.0;
  for (int n = 1; n <= max_n; ++n) {
    const auto c = ngram_counts(cand, n);
    const auto r = ngram_counts(ref, n);
    double matched = 0.0, total = 0.0;
    for (const auto& [g, cnt] : c) {
      total += cnt;
      const auto it = r.find(g);
      matched += it == r.end() ? 0 : std::min(cnt, it->second);
    }
    const double p = n == 1 ? matched / total : (matched + 1.0) / (total + 1.0);
    prod *= p;
  }
  if (prod == 0.0) return 0.0;
  const double c = static_cast<double>(cand.size()), r = static_cast<double>(ref.size());
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::pow(prod, 1.0 / max_n);
}

struct Candidate {
  double score;
  bool relevant;
};

// 0-based rank under descending score, ties by input position.
inline std::size_t rank_of(const std::vector<Candidate>& list, std::size_t i) {
  std::size_t r = 0;
  for (std::size_t j = 0; j < list.size(); ++j) {
    if (list[j].score > list[i].score || (list[j].score == list[i].score && j < i)) ++r;
  }
  return r;
}

struct Metrics {
  double recall = 0.0, mrr = 0.0, auc = 0.0;
  std::size_t evaluated = 0, auc_evaluated = 0;
};

inline Metrics metrics(const std::vector<std::vector<Candidate>>& lists, std::size_t k) {
  Metrics m;
  double recall = 0.0, mrr = 0.0, auc = 0.0;
  for (const auto& list : lists) {
    std::size_t n_rel = 0, hits = 0, first = list.size();
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (!list[i].relevant) continue;
      ++n_rel;
      const std::size_t r = rank_of(list, i);
      if (r < k) ++hits;
      first = std::min(first, r);
    }
    if (n_rel == 0) continue;
    ++m.evaluated;
    recall += static_cast<double>(hits) / static_cast<double>(n_rel);
    mrr += first < k ? 1.0 / static_cast<double>(first + 1) : 0.0;
    double wins = 0.0, pairs = 0.0;
    for (const auto& p : list) {
      for (const auto& q : list) {
        if (!p.relevant || q.relevant) continue;
        pairs += 1.0;
        wins += p.score > q.score ? 1.0 : (p.score == q.score ? 0.5 : 0.0);
      }
    }
    if (pairs > 0.0) {
      auc += wins / pairs;
      ++m.auc_evaluated;
    }
  }
  if (m.evaluated > 0) {
    m.recall = recall / static_cast<double>(m.evaluated);
    m.mrr = mrr / static_cast<double>(m.evaluated);
  }
  if (m.auc_evaluated > 0) m.auc = auc / static_cast<double>(m.auc_evaluated);
  return m;
}

inline void normalize_rows(Dense& m) {
  for (auto& row : m) {
    double s = 0.0;
    for (double x : row) s += x * x;
    if (s == 0.0) continue;
    const double n = std::sqrt(s);
    for (double& x : row) x /= n;
  }
}

// Q = rownorm(C D); D = rownorm(C^T Q), starting from D = I.
inline std::pair<Dense, Dense> propagate(const Dense& c, std::size_t iters) {
  const std::size_t nq = c.size(), nd = nq == 0 ? 0 : c[0].size();
  Dense d(nd, std::vector<double>(nd, 0.0));
  for (std::size_t j = 0; j < nd; ++j) d[j][j] = 1.0;
  Dense q(nq, std::vector<double>(nd, 0.0));
  for (std::size_t it = 0; it < iters; ++it) {
    for (std::size_t i = 0; i < nq; ++i) {
      for (std::size_t col = 0; col < nd; ++col) {
        double s = 0.0;
        for (std::size_t j = 0; j < nd; ++j) s += c[i][j] * d[j][col];
        q[i][col] = s;
      }
    }
    normalize_rows(q);
    for (std::size_t j = 0; j < nd; ++j) {
      for (std::size_t col = 0; col < nd; ++col) {
        double s = 0.0;
        for (std::size_t i = 0; i < nq; ++i) s += c[i][j] * q[i][col];
        d[j][col] = s;
      }
    }
    normalize_rows(d);
  }
  return {q, d};
}

// Share of truth events whose lag is at most m minutes.
inline std::vector<double> coverage(const std::vector<double>& lags_min, std::size_t n_truth,
                                    const std::vector<double>& checkpoints) {
  std::vector<double> out;
  for (double m : checkpoints) {
    std::size_t c = 0;
    for (double l : lags_min) c += l <= m ? 1 : 0;
    out.push_back(static_cast<double>(c) / static_cast<double>(n_truth));
  }
  return out;
}

}  // namespace oracle
