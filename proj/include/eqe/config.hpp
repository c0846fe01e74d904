#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "eqe/cache.hpp"
#include "eqe/clickgraph.hpp"
#include "eqe/collect.hpp"
#include "eqe/embedding.hpp"
#include "eqe/evaluation.hpp"
#include "eqe/rank.hpp"
#include "eqe/reformulate.hpp"
#include "eqe/retrieve.hpp"
#include "eqe/textcore.hpp"

namespace eqe {

struct ClickBaselineConfig {
  ClickGraphConfig graph;
  std::size_t n_iters = 3;
  double theta = 0.9;
};

struct EvalConfig {
  std::vector<std::size_t> k_list{100, 150, 200};
  std::size_t retrieval_k = 10;
  std::vector<double> coverage_checkpoints_min{1, 2, 5, 10, 15, 20};
};

struct ServeConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
};

/// Every tunable of the system. JSON form: see to_json(); config/default.json
/// is EqeConfig{}.to_json().
struct EqeConfig {
  std::uint64_t seed = 42;
  BM25Params bm25;
  CoarseFilterConfig coarse;
  FineFilterConfig fine;
  PairBuildConfig pairs;
  PairFilterThresholds pair_filter;
  ReformulateConfig reformulate;
  std::string keyword_template = "keyword: {kw}";
  EncoderConfig encoder;
  TrainConfig stage1;
  Stage2Config stage2;
  HardNegConfig hard_negatives;
  IvfConfig ivf;
  double event_cluster_theta = 0.85;
  GBDTConfig gbdt;
  ClickBaselineConfig baseline;
  CacheConfig cache;
  EqeExpanderConfig expander{50, SearchMode::exact, 0.5};
  EvalConfig eval;
  ServeConfig serve;

  Json to_json() const;
  /// Keys absent from `doc` keep their defaults; unknown keys or wrong
  /// types throw DataError naming the key.
  static EqeConfig from_json(const Json& doc);
  static EqeConfig load(const std::filesystem::path& path);

  /// Derives every component seed from one value.
  void reseed(std::uint64_t s);
};

}  // namespace eqe
