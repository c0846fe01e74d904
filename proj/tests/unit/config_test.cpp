#include <gtest/gtest.h>

#include <fstream>

#include "eqe/common.hpp"
#include "eqe/config.hpp"
#include "support/fixtures.hpp"

using eqe::EqeConfig;
using eqe::Json;

TEST(Config, DefaultsRoundTrip) {
  const EqeConfig d;
  const Json j = d.to_json();
  EXPECT_EQ(EqeConfig::from_json(j).to_json(), j);
  EXPECT_EQ(j["bm25"]["k1"], 1.2);
  EXPECT_EQ(j["baseline"]["alpha"], 0.2);
  EXPECT_EQ(j["hard_negatives"]["lower_pct"], 60.0);
  EXPECT_EQ(j["hard_negatives"]["upper_pct"], 95.0);
  EXPECT_EQ(j["stage2"]["max_hard"], 4);
  EXPECT_EQ(j["expander"]["candidate_k"], 50);
  EXPECT_EQ(j["cache"]["soft_ttl"], 300.0);
  EXPECT_EQ(j["cache"]["hard_ttl"], 3600.0);
  EXPECT_EQ(j["gbdt"]["n_trees"], 100);
  EXPECT_EQ(j["keyword_template"], "keyword: {kw}");
}

TEST(Config, PartialOverride) {
  const auto c = EqeConfig::from_json(Json::parse(R"({"bm25":{"k1":2.0},"expander":{"mode":"ivf","min_rank_score":null}})"));
  EXPECT_EQ(c.bm25.k1, 2.0);
  EXPECT_EQ(c.bm25.b, 0.75);
  EXPECT_EQ(c.expander.mode, eqe::SearchMode::ivf);
  EXPECT_TRUE(std::isinf(c.expander.min_rank_score));
  const auto back = EqeConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
}

TEST(Config, Errors) {
  EXPECT_THROW(EqeConfig::from_json(Json::parse(R"({"bm25":{"k3":1}})")), eqe::DataError);
  EXPECT_THROW(EqeConfig::from_json(Json::parse(R"({"gbdt":{"n_trees":-1}})")), eqe::DataError);
  EXPECT_THROW(EqeConfig::from_json(Json::parse(R"({"seed":"x"})")), eqe::DataError);
  EXPECT_THROW(EqeConfig::from_json(Json::parse(R"({"expander":{"mode":"fast"}})")), eqe::DataError);
  EXPECT_THROW(EqeConfig::from_json(Json::parse(R"({"cache":{"soft_ttl":10,"hard_ttl":5}})")), eqe::DataError);
  EXPECT_THROW(EqeConfig::from_json(Json::parse("[1]")), eqe::DataError);
  testing_support::TempDir dir;
  std::ofstream(dir.path() / "bad.json") << "{oops";
  EXPECT_THROW(EqeConfig::load(dir.path() / "bad.json"), eqe::DataError);
}

TEST(Config, ReseedTouchesEveryComponent) {
  EqeConfig a, b;
  a.reseed(1);
  b.reseed(2);
  EXPECT_NE(a.fine.seed, b.fine.seed);
  EXPECT_NE(a.encoder.seed, b.encoder.seed);
  EXPECT_NE(a.stage1.seed, b.stage1.seed);
  EXPECT_NE(a.stage2.train.seed, b.stage2.train.seed);
  EXPECT_NE(a.ivf.seed, b.ivf.seed);
}

TEST(Config, ShippedDefaultFileMatches) {
  const auto path = std::filesystem::path(EQE_SOURCE_DIR) / "config" / "default.json";
  ASSERT_TRUE(std::filesystem::exists(path)) << path;
  EXPECT_EQ(EqeConfig::load(path).to_json(), EqeConfig{}.to_json());
  EXPECT_EQ(eqe::read_json_file(path), EqeConfig{}.to_json());
}
