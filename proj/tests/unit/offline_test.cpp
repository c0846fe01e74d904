#include <gtest/gtest.h>

#include <fstream>
#include <iterator>
#include <set>

#include "eqe/common.hpp"
#include "eqe/offline.hpp"
#include "eqe/synth.hpp"
#include "eqe/workflow.hpp"
#include "support/fixtures.hpp"

namespace fs = std::filesystem;

namespace {

eqe::synth::WorldConfig small_world() {
  eqe::synth::WorldConfig w;
  w.n_docs = 1500;
  w.n_fresh_events = 15;
  w.n_old_events = 60;
  w.n_eval_queries = 40;
  w.n_noise_headlines = 100;
  w.n_labeled = 200;
  return w;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::map<std::string, std::string> artifact_bytes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir / "artifacts")) out[e.path().filename().string()] = slurp(e.path());
  return out;
}

}  // namespace

TEST(Offline, EmptyHeadlinesWriteNothing) {
  testing_support::TempDir dir;
  std::ofstream(dir.path() / "headlines.jsonl");
  const auto rep = eqe::run_offline_pipeline({}, dir.path());
  ASSERT_EQ(rep.stages.size(), 4u);
  for (const auto& s : rep.stages) {
    EXPECT_EQ(s.input, 0u);
    EXPECT_EQ(s.kept, 0u);
    EXPECT_EQ(s.rejected, 0u);
  }
  EXPECT_FALSE(fs::exists(dir.path() / "artifacts"));
}

TEST(Offline, ConservationDeterminismAndResume) {
  testing_support::TempDir a, b;
  const auto world = eqe::synth::make_world(small_world());
  eqe::synth::write_world(world, a.path());
  eqe::synth::write_world(world, b.path());
  const eqe::EqeConfig cfg;
  const auto ra = eqe::run_offline_pipeline(cfg, a.path());
  const auto rb = eqe::run_offline_pipeline(cfg, b.path());

  const auto& collect = ra.stage("collect");
  EXPECT_EQ(collect.input, world.headlines.size());
  EXPECT_EQ(collect.kept + collect.rejected, collect.input);
  std::size_t by_reason = 0;
  const std::set<std::string> allowed{"irregular_syntax", "interrogative", "multi_event", "missing_component",
                                      "non_event"};
  for (const auto& [reason, n] : collect.reasons) {
    EXPECT_TRUE(allowed.count(reason)) << reason;
    by_reason += n;
  }
  EXPECT_EQ(by_reason, collect.rejected);
  const auto& reform = ra.stage("reformulate");
  EXPECT_EQ(reform.input, collect.kept);
  EXPECT_EQ(reform.kept + reform.rejected, reform.input);
  EXPECT_EQ(ra.stage("index").kept, reform.kept);
  EXPECT_GT(reform.kept, 0u);

  EXPECT_EQ(ra.to_json(), rb.to_json());
  EXPECT_EQ(artifact_bytes(a.path()), artifact_bytes(b.path()));

  const auto before = artifact_bytes(a.path());
  const auto resumed = eqe::run_offline_pipeline(cfg, a.path(), {true});
  for (const auto& s : resumed.stages) EXPECT_TRUE(s.resumed) << s.name;
  EXPECT_EQ(resumed.stage("collect").kept, collect.kept);

  fs::remove(a.path() / "artifacts" / "events.jsonl");
  const auto partial = eqe::run_offline_pipeline(cfg, a.path(), {true});
  EXPECT_TRUE(partial.stage("collect").resumed);
  EXPECT_FALSE(partial.stage("reformulate").resumed);
  const auto after = artifact_bytes(a.path());
  EXPECT_EQ(after.at("events.jsonl"), before.at("events.jsonl"));
}

TEST(Offline, StageErrorsNameTheStage) {
  testing_support::TempDir dir;
  std::ofstream(dir.path() / "headlines.jsonl")
      << R"({"id":"a","title":"acme acquires beta corp","site":"s","page_type":"news","publish_ts":1})" << "\n";
  try {
    eqe::run_offline_pipeline({}, dir.path());
    FAIL() << "expected DataError";
  } catch (const eqe::DataError& e) {
    EXPECT_NE(std::string(e.what()).find("stage collect"), std::string::npos) << e.what();
  }
}

TEST(Workflow, ClickJoinedRetrievalPairs) {
  const std::vector<eqe::ClickRecord> clicks{{"q1", "h1", 0}, {"q1", "h1", 5}, {"q2", "h9", 0}, {"q3", "h2", 0}};
  const std::vector<eqe::EventRecord> events{{"ev-h1", "acme acquires beta", "h1", 0}, {"ev-h2", "gamma wins", "h2", 0}};
  const auto pairs = eqe::retrieval_pairs_from_clicks(clicks, events);
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0].query, "q1");
  EXPECT_EQ(pairs[0].event, "acme acquires beta");
  EXPECT_EQ(pairs[1].query, "q3");
  EXPECT_EQ(eqe::event_id_for_headline("h7"), "ev-h7");
}

TEST(Synthetic, ParaphraseBenchmarkShape) {
  const auto bench = eqe::synth::make_paraphrase_benchmark();
  EXPECT_EQ(bench.events.size(), 2000u);
  EXPECT_EQ(bench.test.size(), 200u);
  EXPECT_EQ(bench.family_of_event.size(), bench.events.size());
  std::set<std::string> ids;
  for (const auto& e : bench.events) ids.insert(e.event_id);
  EXPECT_EQ(ids.size(), bench.events.size());
  const auto again = eqe::synth::make_paraphrase_benchmark();
  EXPECT_EQ(again.events, bench.events);
}

TEST(Synthetic, WordFactoryNeverRepeats) {
  eqe::synth::WordFactory f(3);
  const auto words = f.take(2000);
  EXPECT_EQ(std::set<std::string>(words.begin(), words.end()).size(), words.size());
  for (const auto& t : eqe::synth::trigger_words()) EXPECT_EQ(std::count(words.begin(), words.end(), t), 0);
}
