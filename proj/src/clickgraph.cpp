#include "eqe/clickgraph.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

#include "eqe/jsonl.hpp"

namespace eqe {

namespace {

// Scatter-gather accumulator over a fixed number of columns.
class RowAccumulator {
 public:
  explicit RowAccumulator(std::size_t cols) : dense_(cols, 0.0), seen_(cols, false) {}

  void add(std::size_t col, double v) {
    if (!seen_[col]) {
      seen_[col] = true;
      touched_.push_back(col);
    }
    dense_[col] += v;
  }

  // Returns the normalised row and resets the accumulator.
  SparseRow take_normalized() {
    std::sort(touched_.begin(), touched_.end());
    SparseRow row;
    double sq = 0.0;
    for (const std::size_t c : touched_) {
      if (dense_[c] != 0.0) {
        row.emplace_back(c, dense_[c]);
        sq += dense_[c] * dense_[c];
      }
      dense_[c] = 0.0;
      seen_[c] = false;
    }
    touched_.clear();
    const double n = std::sqrt(sq);
    if (n > 0.0) {
      for (auto& [c, v] : row) v /= n;
    }
    return row;
  }

 private:
  std::vector<double> dense_;
  std::vector<bool> seen_;
  std::vector<std::size_t> touched_;
};

}  // namespace

double ClickGraph::weight(std::size_t q, std::size_t d) const {
  const auto& row = rows.at(q);
  const auto it = std::lower_bound(row.begin(), row.end(), std::make_pair(d, -1.0),
                                   [](const auto& a, const auto& b) { return a.first < b.first; });
  return it != row.end() && it->first == d ? it->second : 0.0;
}

std::size_t ClickGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& r : rows) n += r.size();
  return n;
}

ClickGraph build_adjacency(std::span<const ClickRecord> clicklog, const DocumentCorpus& corpus,
                           const ClickGraphConfig& config) {
  if (!(config.alpha >= 0.0) || !(config.window_days >= 0.0)) {
    throw std::invalid_argument("build_adjacency: alpha and window_days must be non-negative");
  }
  ClickGraph g;
  if (clicklog.empty()) return g;
  std::int64_t end = config.now_ts.value_or(clicklog.front().ts);
  if (!config.now_ts) {
    for (const auto& c : clicklog) end = std::max(end, c.ts);
  }
  const auto start = end - static_cast<std::int64_t>(config.window_days * 86400.0);

  std::map<std::pair<std::string, std::string>, std::size_t> clicks;
  for (const auto& c : clicklog) {
    if (c.ts < start || c.ts > end) {
      ++g.dropped_outside_window;
      continue;
    }
    if (!corpus.position(c.doc_id)) {
      ++g.dropped_unknown_doc;
      continue;
    }
    ++clicks[{c.query, c.doc_id}];
    g.query_freq[c.query] += 1.0;
  }
  std::set<std::string> qs, ds;
  for (const auto& [key, n] : clicks) {
    qs.insert(key.first);
    ds.insert(key.second);
  }
  g.queries.assign(qs.begin(), qs.end());
  g.docs.assign(ds.begin(), ds.end());
  std::unordered_map<std::string, std::size_t> dcol;
  for (std::size_t j = 0; j < g.docs.size(); ++j) dcol.emplace(g.docs[j], j);
  g.rows.resize(g.queries.size());
  std::size_t qi = 0;
  TokenSeq qtok;
  for (const auto& [key, n] : clicks) {
    // map order groups each query's edges together, queries ascending
    while (g.queries[qi] != key.first) ++qi;
    if (g.rows[qi].empty()) qtok = tokenize(key.first);
    const double bm25 = corpus.index().score(qtok, *corpus.position(key.second));
    double w = config.alpha * bm25 + 1.0;
    if (config.count_multiplicity) w *= static_cast<double>(n);
    g.rows[qi].emplace_back(dcol.at(key.second), w);
  }
  for (auto& r : g.rows) std::sort(r.begin(), r.end());
  return g;
}

PropagationState propagate(const ClickGraph& graph, std::size_t n_iters) {
  if (n_iters < 1) throw std::invalid_argument("propagate: n_iters must be >= 1");
  const std::size_t nd = graph.docs.size();
  // Column view: doc -> (query, C)
  std::vector<std::vector<std::pair<std::size_t, double>>> cols(nd);
  for (std::size_t i = 0; i < graph.rows.size(); ++i) {
    for (const auto& [j, c] : graph.rows[i]) cols[j].emplace_back(i, c);
  }
  PropagationState st;
  st.D.resize(nd);
  for (std::size_t j = 0; j < nd; ++j) st.D[j] = {{j, 1.0}};
  st.Q.resize(graph.rows.size());
  RowAccumulator acc(nd);
  for (std::size_t it = 0; it < n_iters; ++it) {
    for (std::size_t i = 0; i < graph.rows.size(); ++i) {
      for (const auto& [j, c] : graph.rows[i]) {
        for (const auto& [col, v] : st.D[j]) acc.add(col, c * v);
      }
      st.Q[i] = acc.take_normalized();
    }
    for (std::size_t j = 0; j < nd; ++j) {
      for (const auto& [i, c] : cols[j]) {
        for (const auto& [col, v] : st.Q[i]) acc.add(col, c * v);
      }
      st.D[j] = acc.take_normalized();
    }
    st.iteration = it + 1;
  }
  return st;
}

Matrix to_dense(const std::vector<SparseRow>& rows, std::size_t cols) {
  Matrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const auto& [c, v] : rows[r]) m(r, c) = v;
  }
  return m;
}

double sparse_dot(const SparseRow& a, const SparseRow& b) {
  double s = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].first < b[j].first) {
      ++i;
    } else if (b[j].first < a[i].first) {
      ++j;
    } else {
      s += a[i++].second * b[j++].second;
    }
  }
  return s;
}

std::vector<QueryCluster> cluster_queries(const ClickGraph& graph, const PropagationState& state, double theta) {
  const std::size_t n = state.Q.size();
  if (n != graph.queries.size()) throw std::invalid_argument("cluster_queries: state does not match graph");
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  // Candidate pairs share at least one nonzero column.
  std::vector<std::vector<std::pair<std::size_t, double>>> postings(graph.docs.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [c, v] : state.Q[i]) postings[c].emplace_back(i, v);
  }
  std::vector<double> acc(n, 0.0);
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> touched;
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [c, v] : state.Q[i]) {
      for (const auto& [j, w] : postings[c]) {
        if (j <= i) continue;
        if (!seen[j]) {
          seen[j] = true;
          touched.push_back(j);
        }
        acc[j] += v * w;
      }
    }
    for (const std::size_t j : touched) {
      if (acc[j] >= theta - 1e-12) {
        const std::size_t a = find(i), b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
      acc[j] = 0.0;
      seen[j] = false;
    }
    touched.clear();
  }
  std::map<std::size_t, QueryCluster> by_root;
  for (std::size_t i = 0; i < n; ++i) {
    if (state.query_is_zero(i)) continue;
    by_root[find(i)].members.push_back(graph.queries[i]);
  }
  std::vector<QueryCluster> out;
  for (auto& [root, cl] : by_root) {
    std::sort(cl.members.begin(), cl.members.end());
    double best = -1.0;
    for (const auto& q : cl.members) {
      const auto it = graph.query_freq.find(q);
      const double f = it == graph.query_freq.end() ? 0.0 : it->second;
      if (f > best) {
        best = f;
        cl.representative = q;
      }
    }
    out.push_back(std::move(cl));
  }
  std::sort(out.begin(), out.end(), [](const QueryCluster& a, const QueryCluster& b) { return a.members[0] < b.members[0]; });
  return out;
}

std::optional<std::string> baseline_expansion(std::string_view query, std::span<const QueryCluster> clusters) {
  for (const auto& c : clusters) {
    if (!std::binary_search(c.members.begin(), c.members.end(), query)) continue;
    if (c.representative == query) return std::nullopt;
    return c.representative;
  }
  return std::nullopt;
}

BaselineExpander::BaselineExpander(std::span<const QueryCluster> clusters) {
  for (const auto& c : clusters) {
    for (const auto& m : c.members) {
      if (m != c.representative) rep_.emplace(m, c.representative);
    }
  }
}

std::optional<std::string> BaselineExpander::expand(std::string_view query) const {
  const auto it = rep_.find(std::string(query));
  if (it == rep_.end()) return std::nullopt;
  return it->second;
}

void save_query_clusters(const std::filesystem::path& path, std::span<const QueryCluster> clusters) {
  std::vector<Json> recs;
  for (const auto& c : clusters) recs.push_back({{"representative", c.representative}, {"members", c.members}});
  write_jsonl(path, recs);
}

std::vector<QueryCluster> load_query_clusters(const std::filesystem::path& path) {
  std::vector<QueryCluster> out;
  for_each_jsonl(path, [&](const Json& rec, std::size_t line) {
    QueryCluster c;
    c.representative = require_string(rec, "representative", line);
    if (!rec.contains("members") || !rec["members"].is_array()) {
      throw DataError("missing field members at line " + std::to_string(line));
    }
    for (const auto& m : rec["members"]) {
      if (!m.is_string()) throw DataError("members must be strings at line " + std::to_string(line));
      c.members.push_back(m.get<std::string>());
    }
    std::sort(c.members.begin(), c.members.end());
    if (!std::binary_search(c.members.begin(), c.members.end(), c.representative)) {
      throw DataError("representative is not a member at line " + std::to_string(line));
    }
    out.push_back(std::move(c));
  });
  return out;
}

}  // namespace eqe
