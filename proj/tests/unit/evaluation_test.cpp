#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "eqe/common.hpp"
#include "eqe/evaluation.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using eqe::DocumentCorpus;
using eqe::EvalQuery;
using eqe::TimedEvent;

namespace {

DocumentCorpus corpus() {
  return DocumentCorpus({{"d1", "acme acquires beta"},
                         {"d2", "beta merger approved"},
                         {"d3", "gamma wins cup"},
                         {"d4", "acme profits rise"},
                         {"d5", "weather is calm"}});
}

std::set<std::size_t> doc_set(const std::vector<eqe::RetrievedDoc>& docs) {
  std::set<std::size_t> s;
  for (const auto& d : docs) s.insert(d.doc);
  return s;
}

}  // namespace

TEST(ExpandedRetrieval, EmptyAndIdempotentExpansion) {
  const auto c = corpus();
  const auto plain = eqe::expanded_retrieval("acme beta", "", c, 3);
  const auto hits = c.index().search(eqe::tokenize("acme beta"), 3);
  ASSERT_EQ(plain.size(), hits.size());
  for (std::size_t i = 0; i < hits.size(); ++i) {
    EXPECT_EQ(plain[i].doc, hits[i].doc);
    EXPECT_DOUBLE_EQ(plain[i].score, hits[i].score);
  }
  EXPECT_EQ(eqe::expanded_retrieval("acme beta", "acme beta", c, 3), plain);
}

TEST(ExpandedRetrieval, ExpansionOnlyDocEntersUnion) {
  const DocumentCorpus c({{"a", "acme news"}, {"b", "merger approved today"}});
  const auto plain = eqe::expanded_retrieval("acme", "", c, 1);
  ASSERT_EQ(plain.size(), 1u);
  EXPECT_EQ(c.doc(plain[0].doc).doc_id, "a");
  const auto expanded = eqe::expanded_retrieval("acme", "merger approved", c, 2);
  EXPECT_EQ(doc_set(expanded), (std::set<std::size_t>{0, 1}));
  for (const auto& d : expanded) {
    const double want = std::max(c.index().score(eqe::tokenize("acme"), d.doc),
                                 c.index().score(eqe::tokenize("merger approved"), d.doc));
    EXPECT_DOUBLE_EQ(d.score, want);
  }
}

TEST(ExpandedRetrieval, ContainsPlainTopKWhenExpansionEmpty) {
  const auto c = corpus();
  for (const char* q : {"acme", "beta cup", "calm", "nothing"}) {
    for (std::size_t k = 1; k <= 5; ++k) {
      const auto a = doc_set(eqe::expanded_retrieval(q, "", c, k));
      std::set<std::size_t> b;
      for (const auto& h : c.index().search(eqe::tokenize(q), k)) b.insert(h.doc);
      EXPECT_EQ(a, b);
    }
  }
}

TEST(EvalQueries, GroupedAndSorted) {
  const std::vector<eqe::ClickRecord> log{{"b", "d1", 0}, {"a", "d2", 0}, {"b", "d3", 0}, {"b", "d1", 1}};
  const auto qs = eqe::eval_queries_from_clicklog(log);
  ASSERT_EQ(qs.size(), 2u);
  EXPECT_EQ(qs[0].query, "a");
  EXPECT_EQ(qs[1].clicked, (std::set<std::string>{"d1", "d3"}));
}

TEST(RecallAtK, Arithmetic) {
  const auto c = corpus();
  const eqe::ExpandFn none = [](const std::string&) { return std::string(); };
  // "acme" retrieves d1 and d4 first; d3 only enters at k >= 3.
  const std::vector<EvalQuery> qs{{"acme", {"d1", "d3"}}, {"gamma cup", {"d3"}}, {"empty", {}}};
  const auto r = eqe::eval_recall_at_k(qs, none, c, {1, 2, 5});
  EXPECT_EQ(r.evaluated, 2u);
  EXPECT_EQ(r.excluded, 1u);
  EXPECT_EQ(r.expanded, 0u);
  EXPECT_DOUBLE_EQ(r.per_query[1][0], 0.5);
  EXPECT_DOUBLE_EQ(r.per_query[1][1], 1.0);
  EXPECT_DOUBLE_EQ(r.recall[1], 0.75);
  EXPECT_DOUBLE_EQ(r.recall[2], 1.0);

  const eqe::ExpandFn to_gamma = [](const std::string& q) { return q == "acme" ? std::string("gamma cup") : ""; };
  const auto e = eqe::eval_recall_at_k(qs, to_gamma, c, {2});
  EXPECT_EQ(e.expanded, 1u);
  // Fused top-2 for "acme" becomes {d3, d1}.
  EXPECT_DOUBLE_EQ(e.per_query[0][0], 1.0);
  EXPECT_DOUBLE_EQ(r.per_query[1][0], 0.5);

  const std::vector<EvalQuery> bad{{"acme", {"d404"}}};
  EXPECT_THROW(eqe::eval_recall_at_k(bad, none, c, {1}), eqe::DataError);
}

TEST(RecallAtK, ExhaustiveRetrievalIsOne) {
  const auto c = corpus();
  const eqe::ExpandFn none = [](const std::string&) { return std::string(); };
  const std::vector<EvalQuery> qs{{"zzz", {"d1", "d5"}}, {"acme", {"d2", "d3", "d4"}}};
  const auto r = eqe::eval_recall_at_k(qs, none, c, {5, 100});
  EXPECT_DOUBLE_EQ(r.recall[0], 1.0);
  EXPECT_DOUBLE_EQ(r.recall[1], 1.0);
  const auto j = r.to_json();
  EXPECT_TRUE(j.contains("recall"));
}

TEST(Coverage, WorkedExample) {
  std::vector<TimedEvent> truth, found;
  const double lags_sec[] = {30, 180, 420, 1800};
  for (int i = 0; i < 4; ++i) {
    truth.push_back({"e" + std::to_string(i), 1000});
    found.push_back({"e" + std::to_string(i), 1000 + static_cast<std::int64_t>(lags_sec[i])});
  }
  const auto t = eqe::eval_coverage_timeline(truth, found);
  EXPECT_EQ(t.coverage, (std::vector<double>{0.25, 0.25, 0.5, 0.75, 0.75, 0.75}));
  EXPECT_EQ(t.checkpoints_min, (std::vector<double>{1, 2, 5, 10, 15, 20}));
}

TEST(Coverage, InstantNoneAndEarliestDiscovery) {
  const std::vector<TimedEvent> truth{{"a", 10}, {"b", 20}};
  EXPECT_EQ(eqe::eval_coverage_timeline(truth, truth).coverage, std::vector<double>(6, 1.0));
  EXPECT_EQ(eqe::eval_coverage_timeline(truth, {}).coverage, std::vector<double>(6, 0.0));
  const std::vector<TimedEvent> found{{"a", 10 + 3000}, {"a", 10 + 30}, {"stray", 0}};
  EXPECT_EQ(eqe::eval_coverage_timeline(truth, found).coverage, std::vector<double>(6, 0.5));
  EXPECT_THROW(eqe::eval_coverage_timeline({}, found), std::invalid_argument);
}

TEST(Coverage, MonotoneAndMatchesOracle) {
  std::mt19937_64 rng(10);
  std::exponential_distribution<double> lag(1.0 / 300.0);
  for (int s = 0; s < 1000; ++s) {
    const std::size_t n = 1 + rng() % 12;
    std::vector<TimedEvent> truth, found;
    std::vector<double> lags_min;
    for (std::size_t i = 0; i < n; ++i) {
      truth.push_back({"e" + std::to_string(i), 5000});
      if (rng() % 4 == 0) continue;
      const auto l = static_cast<std::int64_t>(lag(rng));
      found.push_back({"e" + std::to_string(i), 5000 + l});
      lags_min.push_back(static_cast<double>(l) / 60.0);
    }
    const auto t = eqe::eval_coverage_timeline(truth, found);
    for (std::size_t i = 1; i < t.coverage.size(); ++i) ASSERT_LE(t.coverage[i - 1], t.coverage[i]);
    ASSERT_EQ(t.coverage, oracle::coverage(lags_min, n, t.checkpoints_min));
  }
}

TEST(Coverage, FilesRoundTrip) {
  testing_support::TempDir dir;
  eqe::write_jsonl(dir.path() / "t.jsonl", {eqe::Json{{"event_id", "a"}, {"first_publish_ts", 5}}});
  eqe::write_jsonl(dir.path() / "d.jsonl", {eqe::Json{{"event_id", "a"}, {"discovered_ts", 65}}});
  const auto truth = eqe::load_coverage_truth(dir.path() / "t.jsonl");
  const auto found = eqe::load_coverage_discoveries(dir.path() / "d.jsonl");
  ASSERT_EQ(truth.size(), 1u);
  EXPECT_EQ(truth[0].ts, 5);
  EXPECT_EQ(found[0].ts, 65);
}
