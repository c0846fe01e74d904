#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include "eqe/jsonl.hpp"
#include "support/fixtures.hpp"

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(EQE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("no-such-command"), 1);
  EXPECT_EQ(run_cli("train-retriever --stage 3"), 1);
  EXPECT_EQ(run_cli("--config /definitely/missing.json collect"), 1);
}

TEST(Cli, DataErrors) {
  testing_support::TempDir dir;
  const std::string d = dir.path().string();
  EXPECT_EQ(run_cli("--data-dir " + d + " collect"), 2);
  std::ofstream(dir.path() / "bad.json") << R"({"unknown_key": 1})";
  EXPECT_EQ(run_cli("--config " + (dir.path() / "bad.json").string() + " --data-dir " + d + " collect"), 2);
  std::ofstream(dir.path() / "headlines.jsonl") << "{not json\n";
  EXPECT_EQ(run_cli("--data-dir " + d + " ingest"), 2);
}

TEST(Cli, SyntheticRunProducesArtifacts) {
  testing_support::TempDir dir;
  const std::string d = " --data-dir " + dir.path().string();
  ASSERT_EQ(run_cli(d + " ingest --synthetic"), 0);
  ASSERT_EQ(run_cli(d + " collect"), 0);
  ASSERT_EQ(run_cli(d + " reformulate"), 0);
  ASSERT_EQ(run_cli(d + " build-index"), 0);
  ASSERT_EQ(run_cli(d + " cluster-events"), 0);
  ASSERT_EQ(run_cli(d + " train-ranker"), 0);
  ASSERT_EQ(run_cli(d + " eval-coverage"), 0);
  const auto artifacts = dir.path() / "artifacts";
  for (const char* f : {"candidates.jsonl", "events.jsonl", "index.bin", "event_clusters.jsonl", "ranker.json"}) {
    EXPECT_TRUE(std::filesystem::exists(artifacts / f)) << f;
  }
  EXPECT_EQ(run_cli(d + " train-retriever --stage 2"), 2);
}
