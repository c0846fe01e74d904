#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "eqe/textcore.hpp"
#include "support/oracles.hpp"
#include "support/random_text.hpp"

using eqe::TokenSeq;
using testing_support::random_tokens;

TEST(Tokenize, EmptyInput) { EXPECT_TRUE(eqe::tokenize("").empty()); }

TEST(Tokenize, LowercasesAndStripsPunctuation) {
  EXPECT_EQ(eqe::tokenize("Acme acquires Beta!"), (TokenSeq{"acme", "acquires", "beta"}));
}

TEST(Tokenize, CjkCharactersAreTokens) {
  EXPECT_EQ(eqe::tokenize("A股大涨"), (TokenSeq{"a", "股", "大", "涨"}));
}

TEST(Tokenize, FullWidthFoldsAndSeparatorSplits) {
  EXPECT_EQ(eqe::tokenize("ＡＢＣ１丨news"), (TokenSeq{"abc1", "news"}));
  EXPECT_EQ(eqe::tokenize("【快讯】acme wins"), (TokenSeq{"快", "讯", "acme", "wins"}));
}

TEST(Tokenize, IdempotentOnRenderedOutput) {
  for (const char* s : {"Hello, World -- 2024!", "上证指数 收涨 1.5%", "a|b丨c  d", "ＸＹＺ corp. wins"}) {
    const TokenSeq t = eqe::tokenize(s);
    EXPECT_EQ(eqe::tokenize(eqe::join_tokens(t)), t) << s;
  }
}

TEST(Jaccard, HandExamples) {
  EXPECT_DOUBLE_EQ(eqe::jaccard_distance({"a", "b"}, {"b", "a"}), 0.0);
  EXPECT_DOUBLE_EQ(eqe::jaccard_distance({"a"}, {"b"}), 1.0);
  EXPECT_NEAR(eqe::jaccard_distance({"a", "b"}, {"b", "c"}), 2.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(eqe::jaccard_distance({}, {}), 0.0);
}

TEST(Jaccard, MatchesOracleSymmetricAndTriangle) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_tokens(rng, 0, 6), b = random_tokens(rng, 0, 6), c = random_tokens(rng, 0, 6);
    const double ab = eqe::jaccard_distance(a, b);
    EXPECT_NEAR(ab, oracle::jaccard_distance(a, b), 1e-12);
    EXPECT_DOUBLE_EQ(ab, eqe::jaccard_distance(b, a));
    EXPECT_LE(ab, eqe::jaccard_distance(a, c) + eqe::jaccard_distance(c, b) + 1e-12);
  }
}

TEST(Bm25, SingleDocumentHandValue) {
  const eqe::CorpusStats stats({{"x"}});
  const double k1 = 1.2, b = 0.75;
  const double expected = std::log(1.0 + 0.5 / 1.5) * (1.0 * (k1 + 1.0)) / (1.0 + k1 * (1.0 - b + b * 1.0));
  EXPECT_NEAR(eqe::bm25_score({"x"}, {"x"}, stats), expected, 1e-12);
}

TEST(Bm25, NoOverlapIsZeroAndEmptyStatsThrow) {
  const eqe::CorpusStats stats({{"x", "y"}, {"z"}});
  EXPECT_EQ(eqe::bm25_score({"q"}, {"x", "y"}, stats), 0.0);
  EXPECT_THROW(eqe::bm25_score({"x"}, {"x"}, eqe::CorpusStats{}), std::invalid_argument);
}

TEST(Bm25, MatchesOracleOnRandomCorpora) {
  std::mt19937_64 rng(11);
  for (int inst = 0; inst < 200; ++inst) {
    std::vector<TokenSeq> docs(std::uniform_int_distribution<int>(1, 6)(rng));
    for (auto& d : docs) d = random_tokens(rng, 1, 8);
    const TokenSeq q = random_tokens(rng, 1, 4);
    const eqe::BM25Params p{std::uniform_real_distribution<double>(0.5, 2.0)(rng),
                            std::uniform_real_distribution<double>(0.0, 1.0)(rng)};
    const eqe::Bm25Index index(docs, p);
    for (std::size_t d = 0; d < docs.size(); ++d) {
      const double want = oracle::bm25(q, d, docs, p.k1, p.b);
      EXPECT_NEAR(eqe::bm25_score(q, docs[d], index.stats(), p), want, 1e-9);
      EXPECT_NEAR(index.score(q, d), want, 1e-9);
    }
  }
}

TEST(Bm25, DoublingTermFrequencyNeverLowersScore) {
  const eqe::CorpusStats stats({{"a", "b"}, {"c"}, {"a", "c", "d"}});
  EXPECT_GE(eqe::bm25_score({"a"}, {"a", "a", "b", "b"}, stats), eqe::bm25_score({"a"}, {"a", "b"}, stats));
}

TEST(Bm25Index, SearchMatchesBruteForceOrdering) {
  std::mt19937_64 rng(5);
  std::vector<TokenSeq> docs(30);
  for (auto& d : docs) d = random_tokens(rng, 1, 10, 10);
  const eqe::Bm25Index index(docs);
  const TokenSeq q{"a", "c"};
  const auto hits = index.search(q, 10);
  ASSERT_EQ(hits.size(), 10u);
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t d = 0; d < docs.size(); ++d) all.push_back({-oracle::bm25(q, d, docs, 1.2, 0.75), d});
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < hits.size(); ++i) {
    EXPECT_EQ(hits[i].doc, all[i].second);
    EXPECT_NEAR(hits[i].score, -all[i].first, 1e-9);
  }
  EXPECT_EQ(index.search(q, 100).size(), docs.size());
}

TEST(TfIdf, SmoothedIdf) {
  EXPECT_NEAR(eqe::tfidf_idf(9, 4), std::log(10.0 / 5.0) + 1.0, 1e-12);
}

TEST(RougeL, HandExamples) {
  EXPECT_DOUBLE_EQ(eqe::rouge_l({"a", "b"}, {"a", "b"}), 1.0);
  EXPECT_DOUBLE_EQ(eqe::rouge_l({"a"}, {"b"}), 0.0);
  EXPECT_NEAR(eqe::rouge_l({"a", "c", "d"}, {"a", "b", "c", "d"}), 2.0 * 0.75 / 1.75, 1e-12);
  EXPECT_DOUBLE_EQ(eqe::rouge_l({}, {}), 1.0);
}

TEST(RougeL, MatchesEnumerationOracle) {
  std::mt19937_64 rng(19);
  for (int i = 0; i < 300; ++i) {
    const auto c = random_tokens(rng, 0, 8), r = random_tokens(rng, 0, 8);
    EXPECT_NEAR(eqe::rouge_l(c, r), oracle::rouge_l(c, r), 1e-12);
    EXPECT_EQ(eqe::lcs_length(c, r), oracle::lcs_enumerate(c, r));
  }
}

TEST(Bleu, HandExamples) {
  EXPECT_NEAR(eqe::bleu({"a", "b", "c", "d"}, {"a", "b", "c", "d"}), 1.0, 1e-12);
  EXPECT_EQ(eqe::bleu({}, {"a"}), 0.0);
  // p1 = 1, p2 = (1+1)/(1+1), p3 = p4 = 1 (no n-grams), BP = e^-1
  EXPECT_NEAR(eqe::bleu({"a", "b"}, {"a", "b", "c", "d"}), std::exp(-1.0), 1e-12);
}

TEST(Bleu, MatchesCountingOracle) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 300; ++i) {
    const auto c = random_tokens(rng, 1, 9, 4), r = random_tokens(rng, 1, 9, 4);
    for (int n : {1, 2, 4}) EXPECT_NEAR(eqe::bleu(c, r, n), oracle::bleu(c, r, n), 1e-9);
  }
}

TEST(Metrics, InvariantUnderTokenRenaming) {
  const TokenSeq c{"x", "y", "z", "x"}, r{"x", "z", "y", "w", "x"};
  const TokenSeq c2{"p", "q", "s", "p"}, r2{"p", "s", "q", "t", "p"};
  EXPECT_DOUBLE_EQ(eqe::rouge_l(c, r), eqe::rouge_l(c2, r2));
  EXPECT_DOUBLE_EQ(eqe::bleu(c, r), eqe::bleu(c2, r2));
}
