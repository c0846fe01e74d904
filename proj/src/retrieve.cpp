#include "eqe/retrieve.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "eqe/jsonl.hpp"

namespace eqe {

static_assert(std::endian::native == std::endian::little, "index files are written little-endian");

namespace {

constexpr char kIndexMagic[8] = {'E', 'Q', 'E', 'I', 'D', 'X', '\0', '\0'};
constexpr std::uint32_t kIndexVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw DataError("index file truncated");
  return v;
}

void put_doubles(std::ostream& os, const std::vector<double>& v) {
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void get_doubles(std::istream& is, std::vector<double>& v) {
  if (!is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)))) {
    throw DataError("index file truncated");
  }
}

bool hit_before(const SearchHit& a, const SearchHit& b) { return a.score != b.score ? a.score > b.score : a.id < b.id; }

std::vector<TokenPair> tokenize_pairs(std::span<const RetrievalPair> pairs) {
  std::vector<TokenPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.emplace_back(tokenize(p.query), tokenize(p.event));
  return out;
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

void DualTower::save(const std::filesystem::path& path) const {
  Json doc{{"format", "eqe-dual-tower"}, {"version", 1}, {"shared", shared()}, {"query", query_.to_json()}};
  if (event_) doc["event"] = event_->to_json();
  write_text_file(path, doc.dump() + "\n");
}

DualTower DualTower::load(const std::filesystem::path& path) {
  const Json doc = read_json_file(path);
  if (doc.value("format", "") != "eqe-dual-tower" || doc.value("version", 0) != 1) {
    throw DataError(path.string() + ": not a dual-tower model (version 1)");
  }
  EncoderModel q = EncoderModel::from_json(doc.at("query"));
  if (doc.value("shared", true)) return DualTower(std::move(q));
  return DualTower(std::move(q), EncoderModel::from_json(doc.at("event")));
}

TowerTrainResult train_stage1(DualTower tower, std::span<const RetrievalPair> pairs, const TrainConfig& config) {
  if (pairs.size() < 2) throw std::invalid_argument("train_stage1: need >= 2 pairs for in-batch negatives");
  const auto tp = tokenize_pairs(pairs);
  EncoderModel* key = tower.shared() ? nullptr : &tower.event_tower();
  auto curve = run_contrastive_training(tower.query_tower(), key, tp, config);
  return {std::move(tower), std::move(curve)};
}

std::vector<EventRecord> load_events(const std::filesystem::path& path) {
  std::vector<EventRecord> out;
  for_each_jsonl(path, [&](const Json& rec, std::size_t line) {
    EventRecord e;
    e.event_id = require_string(rec, "event_id", line);
    e.text = require_string(rec, "text", line);
    e.source_headline_id = require_string(rec, "source_headline_id", line);
    e.found_ts = require_int(rec, "found_ts", line);
    out.push_back(std::move(e));
  });
  return out;
}

void save_events(const std::filesystem::path& path, std::span<const EventRecord> events) {
  std::vector<Json> recs;
  for (const auto& e : events) {
    recs.push_back({{"event_id", e.event_id}, {"text", e.text}, {"source_headline_id", e.source_headline_id}, {"found_ts", e.found_ts}});
  }
  write_jsonl(path, recs);
}

EventIndex::EventIndex(std::vector<std::string> ids, Matrix vectors, const IvfConfig& ivf)
    : ids_(std::move(ids)), vectors_(std::move(vectors)), nprobe_(ivf.nprobe) {
  if (ids_.empty()) throw std::invalid_argument("EventIndex: empty event list");
  if (ids_.size() != vectors_.rows()) throw std::invalid_argument("EventIndex: ids and vectors differ in length");
  for (std::size_t r = 0; r < vectors_.rows(); ++r) normalize_inplace(vectors_.row(r));
  if (ivf.enabled) build_ivf(ivf);
}

EventIndex EventIndex::build(const DualTower& tower, std::span<const EventRecord> events, const IvfConfig& ivf) {
  if (events.empty()) throw std::invalid_argument("build_index: empty event list");
  const std::size_t d = tower.event_tower().dim();
  Matrix m(events.size(), d);
  std::vector<std::string> ids;
  ids.reserve(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Vec v = tower.encode_event(tokenize(events[i].text));
    std::copy(v.begin(), v.end(), m.row(i).begin());
    ids.push_back(events[i].event_id);
  }
  return EventIndex(std::move(ids), std::move(m), ivf);
}

void EventIndex::build_ivf(const IvfConfig& ivf) {
  const std::size_t n = size();
  const std::size_t d = dim();
  std::size_t k = ivf.n_lists > 0 ? ivf.n_lists
                                  : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  k = std::clamp<std::size_t>(k, 1, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(ivf.seed);
  std::shuffle(order.begin(), order.end(), rng);
  centroids_ = Matrix(k, d);
  for (std::size_t c = 0; c < k; ++c) {
    const auto src = vectors_.row(order[c]);
    std::copy(src.begin(), src.end(), centroids_.row(c).begin());
  }
  std::vector<std::size_t> assign(n, 0);
  auto assign_all = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double s = dot(vectors_.row(i), centroids_.row(c));
        if (s > best) {
          best = s;
          assign[i] = c;
        }
      }
    }
  };
  for (std::size_t it = 0; it < ivf.kmeans_iters; ++it) {
    assign_all();
    Matrix sums(k, d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[assign[i]];
      auto row = sums.row(assign[i]);
      const auto v = vectors_.row(i);
      for (std::size_t j = 0; j < d; ++j) row[j] += v[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // empty list keeps its centroid
      auto row = sums.row(c);
      if (normalize_inplace(row) == 0.0) continue;
      std::copy(row.begin(), row.end(), centroids_.row(c).begin());
    }
  }
  assign_all();
  lists_.assign(k, {});
  for (std::size_t i = 0; i < n; ++i) lists_[assign[i]].push_back(i);
}

std::vector<SearchHit> EventIndex::search(std::span<const double> query, std::size_t k, SearchMode mode,
                                          std::size_t nprobe) const {
  if (k == 0) throw std::invalid_argument("search: k must be >= 1");
  if (query.size() != dim()) throw std::invalid_argument("search: query dimension mismatch");
  std::vector<SearchHit> hits;
  auto consider = [&](std::size_t row) { hits.push_back({row, ids_[row], dot(query, vectors_.row(row))}); };
  if (mode == SearchMode::ivf && has_ivf()) {
    const std::size_t probes = std::min(nprobe > 0 ? nprobe : nprobe_, lists_.size());
    std::vector<std::pair<double, std::size_t>> cents;
    for (std::size_t c = 0; c < lists_.size(); ++c) cents.emplace_back(dot(query, centroids_.row(c)), c);
    std::partial_sort(cents.begin(), cents.begin() + static_cast<std::ptrdiff_t>(probes), cents.end(),
                      [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
    for (std::size_t p = 0; p < probes; ++p) {
      for (const std::size_t row : lists_[cents[p].second]) consider(row);
    }
  } else {
    hits.reserve(size());
    for (std::size_t r = 0; r < size(); ++r) consider(r);
  }
  const std::size_t kk = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(kk), hits.end(), hit_before);
  hits.resize(kk);
  return hits;
}

std::vector<SearchHit> search_topk(const EventIndex& index, std::span<const double> query, std::size_t k, SearchMode mode) {
  return index.search(query, k, mode);
}

void EventIndex::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os.write(kIndexMagic, sizeof(kIndexMagic));
  put<std::uint32_t>(os, kIndexVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(dim()));
  put<std::uint64_t>(os, size());
  put<std::uint32_t>(os, has_ivf() ? 1u : 0u);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(nprobe_));
  for (const auto& id : ids_) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(id.size()));
    os.write(id.data(), static_cast<std::streamsize>(id.size()));
  }
  put_doubles(os, vectors_.data());
  if (has_ivf()) {
    put<std::uint64_t>(os, lists_.size());
    put_doubles(os, centroids_.data());
    for (const auto& l : lists_) {
      put<std::uint64_t>(os, l.size());
      for (const std::size_t r : l) put<std::uint64_t>(os, r);
    }
  }
}

EventIndex EventIndex::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string());
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kIndexMagic, sizeof(magic)) != 0) {
    throw DataError(path.string() + ": not an event index file");
  }
  if (get<std::uint32_t>(is) != kIndexVersion) throw DataError(path.string() + ": unsupported index version");
  EventIndex idx;
  const auto d = get<std::uint32_t>(is);
  const auto n = get<std::uint64_t>(is);
  const auto flags = get<std::uint32_t>(is);
  idx.nprobe_ = get<std::uint32_t>(is);
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto len = get<std::uint32_t>(is);
    std::string id(len, '\0');
    if (!is.read(id.data(), len)) throw DataError("index file truncated");
    idx.ids_.push_back(std::move(id));
  }
  idx.vectors_ = Matrix(n, d);
  get_doubles(is, idx.vectors_.data());
  if (flags & 1u) {
    const auto k = get<std::uint64_t>(is);
    idx.centroids_ = Matrix(k, d);
    get_doubles(is, idx.centroids_.data());
    idx.lists_.resize(k);
    for (auto& l : idx.lists_) {
      const auto sz = get<std::uint64_t>(is);
      for (std::uint64_t j = 0; j < sz; ++j) {
        const auto r = get<std::uint64_t>(is);
        if (r >= n) throw DataError("index file: posting entry out of range");
        l.push_back(r);
      }
    }
  }
  return idx;
}

double nearest_rank_percentile(std::span<const double> sorted_ascending, double pct) {
  if (sorted_ascending.empty()) throw std::invalid_argument("percentile of an empty sample");
  const double n = static_cast<double>(sorted_ascending.size());
  auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted_ascending.size());
  return sorted_ascending[rank - 1];
}

std::map<std::string, std::vector<HardNegative>> mine_hard_negatives(const EventIndex& index,
                                                                     std::span<const EventRecord> events,
                                                                     const DualTower& tower,
                                                                     std::span<const RetrievalPair> pairs,
                                                                     const HardNegConfig& config) {
  const auto& band = config.band;
  if (!(band.lower_pct >= 0.0 && band.lower_pct < band.upper_pct && band.upper_pct <= 100.0)) {
    throw std::invalid_argument("HardNegBand: need 0 <= lower < upper <= 100");
  }
  std::unordered_map<std::string_view, const EventRecord*> by_id;
  for (const auto& e : events) by_id.emplace(e.event_id, &e);
  std::vector<const EventRecord*> row_event(index.size());
  std::vector<TokenSeq> row_tokens(index.size());
  for (std::size_t r = 0; r < index.size(); ++r) {
    const auto it = by_id.find(index.ids()[r]);
    if (it == by_id.end()) throw std::invalid_argument("mine_hard_negatives: index id missing from events: " + index.ids()[r]);
    row_event[r] = it->second;
    if (config.exclude_relevant) row_tokens[r] = tokenize(it->second->text);
  }

  std::map<std::string, std::set<std::string>> positives;
  for (const auto& p : pairs) positives[p.query].insert(p.event);

  std::map<std::string, std::vector<HardNegative>> out;
  for (const auto& [query, pos] : positives) {
    const TokenSeq qt = tokenize(query);
    const Vec qv = tower.encode_query(qt);
    std::vector<HardNegative> cands;
    for (std::size_t r = 0; r < index.size(); ++r) {
      const EventRecord& e = *row_event[r];
      if (pos.count(e.text)) continue;
      if (config.exclude_relevant &&
          passes_relevance_gates(qt, row_tokens[r], tower.query_tower(), *config.exclude_relevant)) {
        continue;
      }
      cands.push_back({e.event_id, e.text, dot(qv, index.vector(r))});
    }
    auto& dest = out[query];
    if (cands.empty()) continue;
    std::sort(cands.begin(), cands.end(), [](const HardNegative& a, const HardNegative& b) {
      return a.score != b.score ? a.score > b.score : a.event_id < b.event_id;
    });
    if (config.pool_k > 0 && cands.size() > config.pool_k) cands.resize(config.pool_k);
    std::vector<double> asc;
    asc.reserve(cands.size());
    for (const auto& c : cands) asc.push_back(c.score);
    std::sort(asc.begin(), asc.end());
    const double lo = nearest_rank_percentile(asc, band.lower_pct);
    const double hi = nearest_rank_percentile(asc, band.upper_pct);
    for (auto& c : cands) {
      if (c.score >= lo && c.score <= hi) dest.push_back(std::move(c));
    }
  }
  return out;
}

TowerTrainResult train_stage2(DualTower stage1, std::span<const RetrievalPair> pairs,
                              const std::map<std::string, std::vector<HardNegative>>& hard_negs,
                              const Stage2Config& config) {
  if (pairs.empty()) throw std::invalid_argument("train_stage2: need at least one pair");
  const auto tp = tokenize_pairs(pairs);
  std::vector<std::vector<TokenSeq>> negs(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto it = hard_negs.find(pairs[i].query);
    if (it == hard_negs.end()) continue;
    for (const auto& h : it->second) negs[i].push_back(tokenize(h.text));
  }
  NegativeSampler sampler = [&](std::size_t i, std::mt19937_64& rng) {
    const auto& pool = negs[i];
    if (pool.size() <= config.max_hard) return pool;
    if (!config.sample_hard) return std::vector<TokenSeq>(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(config.max_hard));
    std::vector<TokenSeq> pick;
    std::sample(pool.begin(), pool.end(), std::back_inserter(pick), config.max_hard, rng);
    return pick;
  };
  EncoderModel* key = stage1.shared() ? nullptr : &stage1.event_tower();
  auto curve = run_contrastive_training(stage1.query_tower(), key, tp, config.train, sampler, config.keep_in_batch);
  return {std::move(stage1), std::move(curve)};
}

RetrievalMetricsReport retrieval_metrics(const std::vector<std::vector<ScoredCandidate>>& lists, std::size_t k) {
  if (k == 0) throw std::invalid_argument("retrieval_metrics: k must be >= 1");
  RetrievalMetricsReport rep;
  rep.k = k;
  double recall = 0.0, mrr = 0.0, auc = 0.0;
  for (const auto& list : lists) {
    std::vector<std::size_t> order(list.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return list[a].score > list[b].score; });
    std::size_t n_rel = 0;
    for (const auto& c : list) n_rel += c.relevant ? 1 : 0;
    if (list.empty() || n_rel == 0) {
      ++rep.excluded;
      continue;
    }
    ++rep.evaluated;
    std::size_t hits = 0;
    double rr = 0.0;
    for (std::size_t r = 0; r < std::min(k, order.size()); ++r) {
      if (!list[order[r]].relevant) continue;
      ++hits;
      if (rr == 0.0) rr = 1.0 / static_cast<double>(r + 1);
    }
    recall += static_cast<double>(hits) / static_cast<double>(n_rel);
    mrr += rr;

    std::vector<double> neg;
    for (const auto& c : list) {
      if (!c.relevant) neg.push_back(c.score);
    }
    if (neg.empty()) continue;
    std::sort(neg.begin(), neg.end());
    double wins = 0.0;
    for (const auto& c : list) {
      if (!c.relevant) continue;
      const auto lo = std::lower_bound(neg.begin(), neg.end(), c.score);
      const auto hi = std::upper_bound(neg.begin(), neg.end(), c.score);
      wins += static_cast<double>(lo - neg.begin()) + 0.5 * static_cast<double>(hi - lo);
    }
    auc += wins / (static_cast<double>(n_rel) * static_cast<double>(neg.size()));
    ++rep.auc_evaluated;
  }
  if (rep.evaluated > 0) {
    rep.recall_at_k = recall / static_cast<double>(rep.evaluated);
    rep.mrr_at_k = mrr / static_cast<double>(rep.evaluated);
  }
  if (rep.auc_evaluated > 0) rep.auc = auc / static_cast<double>(rep.auc_evaluated);
  return rep;
}

EventClusters cluster_events(const EventIndex& index, double theta) {
  if (!(theta > -1.0 && theta <= 1.0)) throw std::invalid_argument("cluster_events: theta must be in (-1, 1]");
  const std::size_t n = index.size();
  UnionFind uf(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (uf.find(i) == uf.find(j)) continue;
      // Tolerance keeps identical vectors together despite rounding.
      if (dot(index.vector(i), index.vector(j)) >= theta - 1e-12) uf.unite(i, j);
    }
  }
  EventClusters out;
  out.cluster_of.assign(n, 0);
  std::unordered_map<std::size_t, std::size_t> label;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = uf.find(i);
    auto [it, inserted] = label.try_emplace(root, out.sizes.size());
    if (inserted) out.sizes.push_back(0);
    out.cluster_of[i] = it->second;
    ++out.sizes[it->second];
  }
  return out;
}

}  // namespace eqe
