#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "eqe/embedding.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"

using eqe::CLBatch;
using eqe::EncoderModel;
using eqe::TokenSeq;
using eqe::Vec;
using testing_support::tiny_model;

namespace {

CLBatch random_batch(std::mt19937_64& rng, std::size_t n, double tau, std::size_t extra = 0) {
  std::uniform_int_distribution<int> tok(0, 9), len(1, 4);
  auto seq = [&] {
    TokenSeq t(len(rng));
    for (auto& x : t) x = "t" + std::to_string(tok(rng));  // t9 is out of vocabulary
    return t;
  };
  CLBatch b;
  b.tau = tau;
  for (std::size_t i = 0; i < n; ++i) {
    b.anchors.push_back(seq());
    b.positives.push_back(seq());
  }
  if (extra > 0) {
    b.extra_negatives.resize(n);
    for (auto& list : b.extra_negatives) {
      for (std::size_t k = 0; k < extra; ++k) list.push_back(seq());
    }
  }
  return b;
}

}  // namespace

TEST(Encoder, UnitNormAndOrderFree) {
  const auto m = tiny_model(1);
  for (const TokenSeq& t : {TokenSeq{}, TokenSeq{"t1"}, TokenSeq{"t1", "t2", "zz"}}) {
    const Vec e = m.encode(t);
    EXPECT_NEAR(eqe::l2_norm(e), 1.0, 1e-9);
  }
  EXPECT_EQ(m.encode(TokenSeq{"t1", "t2", "t3"}), m.encode(TokenSeq{"t3", "t1", "t2"}));
}

TEST(Encoder, SingleTokenIsProjectedRow) {
  const auto m = tiny_model(2);
  const std::size_t r = m.row_of("t4");
  Vec want(m.dim(), 0.0);
  for (std::size_t i = 0; i < m.dim(); ++i) {
    for (std::size_t k = 0; k < m.dim(); ++k) want[i] += m.proj()(i, k) * m.emb()(r, k);
  }
  eqe::normalize_inplace(want);
  const Vec got = m.encode(TokenSeq{"t4"});
  for (std::size_t i = 0; i < m.dim(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  EXPECT_EQ(m.row_of("never-seen"), EncoderModel::kUnkRow);
}

TEST(Encoder, OrderBucketsSeparateSwappedSequences) {
  const auto m = tiny_model(3, 8);
  EXPECT_NE(m.encode(TokenSeq{"t1", "t2", "t3"}), m.encode(TokenSeq{"t3", "t2", "t1"}));
}

TEST(Encoder, JsonRoundTrip) {
  testing_support::TempDir dir;
  const auto m = tiny_model(4, 4);
  m.save(dir.path() / "enc.json");
  EXPECT_EQ(EncoderModel::load(dir.path() / "enc.json"), m);
}

TEST(InfoNce, SinglePairIsZero) {
  const auto m = tiny_model(5);
  CLBatch b;
  b.anchors = {{"t1", "t2"}};
  b.positives = {{"t7"}};
  EXPECT_EQ(eqe::info_nce_loss(m, b), 0.0);
}

TEST(InfoNce, OrthogonalPairHandValue) {
  const std::vector<Vec> a{{1.0, 0.0}, {0.0, 1.0}};
  EXPECT_NEAR(eqe::info_nce_from_embeddings(a, a, 1.0), 2.0 * std::log(1.0 + std::exp(-1.0)), 1e-12);
}

TEST(InfoNce, SmallTemperatureLimit) {
  const std::vector<Vec> a{{1.0, 0.0}, {0.0, 1.0}};
  const std::vector<Vec> p{{0.8, 0.6}, {0.6, 0.8}};
  EXPECT_LT(eqe::info_nce_from_embeddings(a, p, 1e-3), 1e-12);
  EXPECT_GT(eqe::info_nce_from_embeddings(a, p, 1.0), 0.1);
}

TEST(InfoNce, NonNegative) {
  std::mt19937_64 rng(9);
  const auto m = tiny_model(6);
  for (int i = 0; i < 20; ++i) EXPECT_GE(eqe::info_nce_loss(m, random_batch(rng, 4, 0.1)), 0.0);
}

TEST(InfoNceBackward, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    const auto m = tiny_model(seed);
    const CLBatch b = random_batch(rng, 3, 0.5);
    const auto g = eqe::info_nce_backward(m, b);
    const auto r = testing_support::finite_difference_check(
        m, g, [&](const EncoderModel& x) { return eqe::info_nce_loss(x, b); });
    EXPECT_LT(r.max_rel_error, 1e-4) << "seed " << seed;
  }
}

TEST(InfoNceBackward, TwoTowersWithExtraNegatives) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed + 50);
    const auto anchor = tiny_model(seed, 4), key = tiny_model(seed + 100, 4);
    CLBatch b = random_batch(rng, 3, 0.3, 2);
    b.in_batch_negatives = seed % 2 == 0;
    auto ga = anchor.zero_gradients(), gk = key.zero_gradients();
    eqe::contrastive_loss_and_grad(anchor, key, b, &ga, &gk);
    auto loss_anchor = [&](const EncoderModel& x) { return eqe::contrastive_loss_and_grad(x, key, b, nullptr, nullptr); };
    auto loss_key = [&](const EncoderModel& x) { return eqe::contrastive_loss_and_grad(anchor, x, b, nullptr, nullptr); };
    EXPECT_LT(testing_support::finite_difference_check(anchor, ga, loss_anchor).max_rel_error, 1e-4);
    EXPECT_LT(testing_support::finite_difference_check(key, gk, loss_key).max_rel_error, 1e-4);
  }
}

TEST(InfoNceBackward, AbsentTokensGetNoGradient) {
  const auto m = tiny_model(7);
  CLBatch b;
  b.anchors = {{"t1"}, {"t2"}};
  b.positives = {{"t3"}, {"t4"}};
  b.tau = 0.5;
  const auto g = eqe::info_nce_backward(m, b);
  for (const char* absent : {"t0", "t5", "t6", "t7", "t8"}) EXPECT_EQ(g.emb_rows.count(m.row_of(absent)), 0u);
  EXPECT_EQ(g.emb_rows.count(EncoderModel::kUnkRow), 0u);
}

TEST(InfoNceBackward, SymmetricSaddleHasZeroGradient) {
  auto m = tiny_model(8);
  for (std::size_t r = 0; r < m.emb().rows(); ++r) {
    for (std::size_t c = 0; c < m.dim(); ++c) m.emb()(r, c) = m.emb()(1, c);
  }
  CLBatch b;
  b.anchors = {{"t1"}, {"t2"}};
  b.positives = {{"t3"}, {"t4"}};
  const auto g = eqe::info_nce_backward(m, b);
  for (const auto& [row, v] : g.emb_rows) {
    for (double x : v) EXPECT_NEAR(x, 0.0, 1e-12);
  }
}

TEST(InfoNce, DuplicatedBatchKeepsPerAnchorLoss) {
  const std::vector<Vec> a{{1.0, 0.0}, {0.6, 0.8}};
  const std::vector<Vec> p{{0.8, 0.6}, {0.0, 1.0}};
  // Duplicating every pair doubles each denominator term, adding ln 2 per anchor.
  std::vector<Vec> a2 = a, p2 = p;
  a2.insert(a2.end(), a.begin(), a.end());
  p2.insert(p2.end(), p.begin(), p.end());
  const double single = eqe::info_nce_from_embeddings(a, p, 0.5);
  const double doubled = eqe::info_nce_from_embeddings(a2, p2, 0.5);
  EXPECT_NEAR(doubled, 2.0 * (single + 2.0 * std::log(2.0)), 1e-12);
}

TEST(TrainContrastive, ZeroLearningRateKeepsParameters) {
  std::mt19937_64 rng(10);
  const auto m = tiny_model(9);
  std::vector<eqe::TokenPair> pairs;
  for (int i = 0; i < 8; ++i) {
    const auto b = random_batch(rng, 1, 0.1);
    pairs.emplace_back(b.anchors[0], b.positives[0]);
  }
  eqe::TrainConfig cfg;
  cfg.lr = 0.0;
  cfg.epochs = 3;
  EXPECT_EQ(eqe::train_contrastive(m, pairs, cfg).model, m);
}

TEST(TrainContrastive, LossFallsAndRunIsDeterministic) {
  std::vector<TokenSeq> corpus;
  std::vector<eqe::TokenPair> pairs;
  for (int i = 0; i < 50; ++i) {
    TokenSeq a{"w" + std::to_string(i), "x" + std::to_string(i % 7), "y" + std::to_string(i % 5)};
    TokenSeq p{"w" + std::to_string(i), "z" + std::to_string(i % 3)};
    corpus.push_back(a);
    corpus.push_back(p);
    pairs.emplace_back(a, p);
  }
  const auto m = EncoderModel::build(corpus, {16, 0, 1.0, 3});
  eqe::TrainConfig cfg;
  cfg.epochs = 20;
  cfg.batch_size = 10;
  const auto r1 = eqe::train_contrastive(m, pairs, cfg);
  const auto r2 = eqe::train_contrastive(m, pairs, cfg);
  ASSERT_EQ(r1.loss_curve.size(), 20u);
  EXPECT_LT(r1.loss_curve.back(), r1.loss_curve.front());
  EXPECT_EQ(r1.model, r2.model);
  EXPECT_EQ(r1.loss_curve, r2.loss_curve);
}

TEST(AlignUniform, HandCases) {
  const std::vector<std::pair<Vec, Vec>> same{{{1.0, 0.0}, {1.0, 0.0}}};
  EXPECT_DOUBLE_EQ(eqe::alignment_and_uniformity(same, {{1.0, 0.0}, {-1.0, 0.0}}).alignment, 0.0);
  EXPECT_NEAR(eqe::alignment_and_uniformity(same, {{1.0, 0.0}, {-1.0, 0.0}}).uniformity, -8.0, 1e-12);
  EXPECT_NEAR(eqe::alignment_and_uniformity(same, {{0.6, 0.8}, {0.6, 0.8}, {0.6, 0.8}}).uniformity, 0.0, 1e-12);
  EXPECT_THROW(eqe::alignment_and_uniformity(same, {{1.0, 0.0}}), std::invalid_argument);
}

TEST(Pca, PlanarDataKeepsDistances) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0.0, 1.0);
  Vec u{1, 1, 0, 0, 1}, v{1, -1, 1, 0, 0};
  eqe::normalize_inplace(u);
  // Orthogonalise v against u.
  const double uv = eqe::dot(u, v);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= uv * u[i];
  eqe::normalize_inplace(v);
  std::vector<Vec> pts;
  for (int i = 0; i < 30; ++i) {
    const double a = 3.0 * n(rng), b = n(rng);
    Vec p(5);
    for (std::size_t k = 0; k < 5; ++k) p[k] = a * u[k] + b * v[k] + 2.0;
    pts.push_back(p);
  }
  const auto proj = eqe::pca_project_2d(pts);
  double var0 = 0.0, var1 = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    var0 += proj[i][0] * proj[i][0];
    var1 += proj[i][1] * proj[i][1];
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const double d_hi = std::sqrt(eqe::squared_distance(pts[i], pts[j]));
      const double d_lo = std::hypot(proj[i][0] - proj[j][0], proj[i][1] - proj[j][1]);
      EXPECT_NEAR(d_hi, d_lo, 1e-6);
    }
  }
  EXPECT_GE(var0, var1);
  for (const auto& p : eqe::pca_project_2d({{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}})) {
    EXPECT_EQ(p[0], 0.0);
    EXPECT_EQ(p[1], 0.0);
  }
}

TEST(EmbedScore, SelfSymmetricAndDirect) {
  const auto m = tiny_model(13);
  const TokenSeq a{"t1", "t2"}, b{"t5", "t6", "t1"};
  EXPECT_NEAR(eqe::embed_score(m, a, a), 1.0, 1e-9);
  EXPECT_DOUBLE_EQ(eqe::embed_score(m, a, b), eqe::embed_score(m, b, a));
  EXPECT_NEAR(eqe::embed_score(m, a, b), eqe::dot(m.encode(a), m.encode(b)), 1e-12);
}
