#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "eqe/collect.hpp"
#include "eqe/common.hpp"
#include "eqe/corpus.hpp"

namespace eqe {

/// (column, value) pairs sorted by column.
using SparseRow = std::vector<std::pair<std::size_t, double>>;

struct ClickGraphConfig {
  double alpha = 0.2;
  double window_days = 3.0;
  // Multiply the edge weight by the number of clicks on the pair.
  bool count_multiplicity = false;
  // Window end; defaults to the latest click timestamp.
  std::optional<std::int64_t> now_ts;
};

/// Query-document click adjacency. Queries and docs are sorted, so the
/// graph does not depend on click-log order.
struct ClickGraph {
  std::vector<std::string> queries;
  std::vector<std::string> docs;
  std::vector<SparseRow> rows;  // per query: (doc column, C weight)
  std::map<std::string, double> query_freq;
  std::size_t dropped_outside_window = 0;
  std::size_t dropped_unknown_doc = 0;

  double weight(std::size_t q, std::size_t d) const;
  std::size_t edge_count() const;
};

/// C = alpha * BM25(query, doc) + 1 on every clicked pair inside the
/// trailing window, 0 elsewhere. Clicks on ids absent from the corpus are
/// dropped and counted.
ClickGraph build_adjacency(std::span<const ClickRecord> clicklog, const DocumentCorpus& corpus,
                           const ClickGraphConfig& config = {});

struct PropagationState {
  std::vector<SparseRow> Q;  // |queries| rows over doc columns
  std::vector<SparseRow> D;  // |docs| rows over doc columns
  std::size_t iteration = 0;

  bool query_is_zero(std::size_t i) const { return Q[i].empty(); }
  bool doc_is_zero(std::size_t j) const { return D[j].empty(); }
};

/// D starts as one-hot rows. Each iteration first recomputes every Q row
/// from D, then every D row from the new Q; rows are L2-normalised and rows
/// without edges stay empty. Throws std::invalid_argument when n_iters < 1.
PropagationState propagate(const ClickGraph& graph, std::size_t n_iters = 3);

Matrix to_dense(const std::vector<SparseRow>& rows, std::size_t cols);
double sparse_dot(const SparseRow& a, const SparseRow& b);

struct QueryCluster {
  std::vector<std::string> members;  // sorted
  std::string representative;

  bool operator==(const QueryCluster&) const = default;
};

/// Single-link components over cosine >= theta among nonzero query rows;
/// zero rows belong to no cluster. Representative = highest query_freq,
/// ties to the lexicographically smallest. Clusters are ordered by their
/// first member.
std::vector<QueryCluster> cluster_queries(const ClickGraph& graph, const PropagationState& state, double theta = 0.9);

/// Representative of the query's cluster, or nullopt when the query is
/// unclustered, alone, or the representative itself.
std::optional<std::string> baseline_expansion(std::string_view query, std::span<const QueryCluster> clusters);

/// Constant-time lookup of baseline_expansion.
class BaselineExpander {
 public:
  BaselineExpander() = default;
  explicit BaselineExpander(std::span<const QueryCluster> clusters);
  std::optional<std::string> expand(std::string_view query) const;
  std::size_t size() const { return rep_.size(); }

 private:
  std::unordered_map<std::string, std::string> rep_;
};

/// clusters.jsonl: {"representative","members":[...]}.
void save_query_clusters(const std::filesystem::path& path, std::span<const QueryCluster> clusters);
std::vector<QueryCluster> load_query_clusters(const std::filesystem::path& path);

}  // namespace eqe
