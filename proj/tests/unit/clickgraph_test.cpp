#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "eqe/clickgraph.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using eqe::ClickGraph;
using eqe::ClickRecord;
using eqe::Document;

namespace {

constexpr std::int64_t kDay = 86400;

eqe::DocumentCorpus toy_corpus() {
  return eqe::DocumentCorpus({{"d1", "acme acquires beta in big deal"},
                              {"d2", "gamma wins the cup final"},
                              {"d3", "weather report for the weekend"},
                              {"d4", "acme shares rise"}});
}

ClickGraph graph_from_dense(const oracle::Dense& c) {
  ClickGraph g;
  for (std::size_t i = 0; i < c.size(); ++i) g.queries.push_back("q" + std::to_string(i));
  for (std::size_t j = 0; j < (c.empty() ? 0 : c[0].size()); ++j) g.docs.push_back("d" + std::to_string(j));
  for (const auto& row : c) {
    eqe::SparseRow r;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j] != 0.0) r.emplace_back(j, row[j]);
    }
    g.rows.push_back(r);
  }
  for (const auto& q : g.queries) g.query_freq[q] = 1.0;
  return g;
}

void expect_matches(const std::vector<eqe::SparseRow>& got, const oracle::Dense& want, std::size_t cols) {
  const eqe::Matrix dense = eqe::to_dense(got, cols);
  ASSERT_EQ(dense.rows(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) EXPECT_NEAR(dense(i, j), want[i][j], 1e-9) << i << "," << j;
  }
}

}  // namespace

TEST(Adjacency, EdgeWeightFormula) {
  const auto corpus = toy_corpus();
  const std::vector<ClickRecord> log{{"acme deal", "d1", 10 * kDay}, {"zzz", "d3", 10 * kDay}};
  const auto g = eqe::build_adjacency(log, corpus);
  ASSERT_EQ(g.queries, (std::vector<std::string>{"acme deal", "zzz"}));
  std::vector<oracle::Tokens> docs;
  for (const auto& d : corpus.docs()) docs.push_back(eqe::tokenize(d.text));
  const double bm = oracle::bm25({"acme", "deal"}, 0, docs, 1.2, 0.75);
  const std::size_t d1 = std::find(g.docs.begin(), g.docs.end(), "d1") - g.docs.begin();
  const std::size_t d3 = std::find(g.docs.begin(), g.docs.end(), "d3") - g.docs.begin();
  EXPECT_NEAR(g.weight(0, d1), 0.2 * bm + 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(g.weight(1, d3), 1.0);
  EXPECT_DOUBLE_EQ(g.weight(0, d3), 0.0);
  EXPECT_EQ(g.edge_count(), 2u);
}

TEST(Adjacency, WindowUnknownDocsAndMultiplicity) {
  const auto corpus = toy_corpus();
  const std::vector<ClickRecord> log{{"acme", "d1", 10 * kDay},
                                     {"acme", "d1", 10 * kDay - 5},
                                     {"old", "d2", 6 * kDay},
                                     {"edge", "d2", 7 * kDay},
                                     {"ghost", "d404", 10 * kDay}};
  const auto g = eqe::build_adjacency(log, corpus);
  EXPECT_EQ(g.dropped_outside_window, 1u);
  EXPECT_EQ(g.dropped_unknown_doc, 1u);
  EXPECT_EQ(g.query_freq.at("acme"), 2.0);
  const auto qi = std::find(g.queries.begin(), g.queries.end(), "acme") - g.queries.begin();
  const auto one = g.rows[qi][0].second;

  eqe::ClickGraphConfig multi;
  multi.count_multiplicity = true;
  const auto gm = eqe::build_adjacency(log, corpus, multi);
  EXPECT_DOUBLE_EQ(gm.rows[qi][0].second, 2.0 * one);

  EXPECT_EQ(eqe::build_adjacency(std::vector<ClickRecord>{}, corpus).edge_count(), 0u);

  auto reversed = log;
  std::reverse(reversed.begin(), reversed.end());
  const auto gr = eqe::build_adjacency(reversed, corpus);
  EXPECT_EQ(gr.queries, g.queries);
  EXPECT_EQ(gr.rows, g.rows);
}

TEST(Propagate, SingleEdgeAndSharedDoc) {
  auto s = eqe::propagate(graph_from_dense({{3.7}}), 1);
  ASSERT_EQ(s.Q[0].size(), 1u);
  EXPECT_DOUBLE_EQ(s.Q[0][0].second, 1.0);
  s = eqe::propagate(graph_from_dense({{2.0, 0.0}, {5.0, 0.0}, {0.0, 0.0}}), 1);
  EXPECT_EQ(s.Q[0], s.Q[1]);
  EXPECT_TRUE(s.query_is_zero(2));
  EXPECT_TRUE(s.doc_is_zero(1));
  EXPECT_EQ(s.iteration, 1u);
  EXPECT_THROW(eqe::propagate(graph_from_dense({{1.0}}), 0), std::invalid_argument);
}

TEST(Propagate, HandComputedThreeByThree) {
  // C = [[1,1,0],[0,1,0],[0,0,2]]. Q1 rows: (1,1,0)/sqrt2, (0,1,0), (0,0,1).
  const oracle::Dense c{{1, 1, 0}, {0, 1, 0}, {0, 0, 2}};
  const auto s = eqe::propagate(graph_from_dense(c), 1);
  const double r = 1.0 / std::sqrt(2.0);
  expect_matches(s.Q, {{r, r, 0}, {0, 1, 0}, {0, 0, 1}}, 3);
  // D1 col 1 = Q0 + Q1 = (r, 1 + r, 0), normalised.
  const double n = std::sqrt(r * r + (1 + r) * (1 + r));
  expect_matches(s.D, {{r, r, 0}, {r / n, (1 + r) / n, 0}, {0, 0, 1}}, 3);
}

TEST(Propagate, MatchesDenseOracleOnRandomGraphs) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> w(1.0, 4.0);
  for (int g = 0; g < 50; ++g) {
    const std::size_t nq = 1 + rng() % 5, nd = 1 + rng() % (8 - nq);
    oracle::Dense c(nq, std::vector<double>(nd, 0.0));
    for (auto& row : c) {
      for (auto& x : row) x = rng() % 3 == 0 ? w(rng) : 0.0;
    }
    const auto graph = graph_from_dense(c);
    for (std::size_t iters = 1; iters <= 3; ++iters) {
      const auto got = eqe::propagate(graph, iters);
      const auto [q, d] = oracle::propagate(c, iters);
      expect_matches(got.Q, q, nd);
      expect_matches(got.D, d, nd);
      for (const auto& rows : {got.Q, got.D}) {
        for (const auto& row : rows) {
          if (row.empty()) continue;
          EXPECT_NEAR(std::sqrt(eqe::sparse_dot(row, row)), 1.0, 1e-9);
        }
      }
    }
  }
}

TEST(Propagate, ScalingInvariance) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> w(1.0, 4.0);
  oracle::Dense c(6, std::vector<double>(5, 0.0));
  for (auto& row : c) {
    for (auto& x : row) x = rng() % 2 ? w(rng) : 0.0;
  }
  oracle::Dense scaled = c;
  for (auto& row : scaled) {
    for (auto& x : row) x *= 7.5;
  }
  const auto a = eqe::propagate(graph_from_dense(c), 3);
  const auto b = eqe::propagate(graph_from_dense(scaled), 3);
  const auto qa = eqe::to_dense(a.Q, 5), qb = eqe::to_dense(b.Q, 5);
  const auto da = eqe::to_dense(a.D, 5), db = eqe::to_dense(b.D, 5);
  for (std::size_t i = 0; i < qa.data().size(); ++i) EXPECT_NEAR(qa.data()[i], qb.data()[i], 1e-12);
  for (std::size_t i = 0; i < da.data().size(); ++i) EXPECT_NEAR(da.data()[i], db.data()[i], 1e-12);
}

TEST(ClusterQueries, IdenticalOrthogonalAndShared) {
  auto g = graph_from_dense({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, 0, 0}});
  auto clusters = eqe::cluster_queries(g, eqe::propagate(g, 1));
  EXPECT_EQ(clusters.size(), 3u);

  g = graph_from_dense({{2, 3}, {2, 3}, {2, 3}});
  clusters = eqe::cluster_queries(g, eqe::propagate(g, 3), 0.999);
  ASSERT_EQ(clusters.size(), 1u);
  EXPECT_EQ(clusters[0].members, (std::vector<std::string>{"q0", "q1", "q2"}));
  EXPECT_EQ(clusters[0].representative, "q0");
}

TEST(ClusterQueries, RepresentativeIsMostFrequent) {
  auto g = graph_from_dense({{1, 1}, {1, 1}, {0, 0}});
  g.query_freq["q0"] = 3;
  g.query_freq["q1"] = 10;
  const auto clusters = eqe::cluster_queries(g, eqe::propagate(g, 3));
  ASSERT_EQ(clusters.size(), 1u);
  EXPECT_EQ(clusters[0].representative, "q1");
  EXPECT_EQ(eqe::baseline_expansion("q0", clusters), std::optional<std::string>("q1"));
  EXPECT_EQ(eqe::baseline_expansion("q1", clusters), std::nullopt);
  EXPECT_EQ(eqe::baseline_expansion("q2", clusters), std::nullopt);
  const eqe::BaselineExpander ex(clusters);
  EXPECT_EQ(ex.expand("q0"), std::optional<std::string>("q1"));
  EXPECT_EQ(ex.expand("nope"), std::nullopt);
}

TEST(ClusterQueries, SingletonHasNoExpansion) {
  const std::vector<eqe::QueryCluster> clusters{{{"solo"}, "solo"}};
  EXPECT_EQ(eqe::baseline_expansion("solo", clusters), std::nullopt);
}

TEST(ClusterQueries, ClickOrderDoesNotMatter) {
  const auto corpus = toy_corpus();
  std::vector<ClickRecord> log{{"acme deal", "d1", 100}, {"acme buys beta", "d1", 100}, {"acme", "d4", 100},
                               {"acme", "d1", 100},      {"cup final", "d2", 100},      {"gamma cup", "d2", 100},
                               {"weekend", "d3", 100}};
  const auto run = [&](const std::vector<ClickRecord>& l) {
    const auto g = eqe::build_adjacency(l, corpus);
    return eqe::cluster_queries(g, eqe::propagate(g, 3), 0.9);
  };
  const auto base = run(log);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 10; ++i) {
    std::shuffle(log.begin(), log.end(), rng);
    EXPECT_EQ(run(log), base);
  }
  const auto it = std::find_if(base.begin(), base.end(), [](const auto& c) {
    return std::find(c.members.begin(), c.members.end(), "cup final") != c.members.end();
  });
  ASSERT_NE(it, base.end());
  EXPECT_EQ(it->members, (std::vector<std::string>{"cup final", "gamma cup"}));
}

TEST(QueryClustersFile, RoundTrip) {
  testing_support::TempDir dir;
  const std::vector<eqe::QueryCluster> clusters{{{"a", "b"}, "b"}, {{"c"}, "c"}};
  eqe::save_query_clusters(dir.path() / "c.jsonl", clusters);
  EXPECT_EQ(eqe::load_query_clusters(dir.path() / "c.jsonl"), clusters);
}
