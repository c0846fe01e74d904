#include "eqe/rank.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>
#include <stdexcept>

#include "eqe/reformulate.hpp"

namespace eqe {

namespace {

struct QuerySide {
  TokenSeq tokens;
  std::set<std::string> entities;
  std::string keyword;
  double max_tfidf = 0.0;
  double freq = 0.0;
};

QuerySide query_side(std::string_view query, const RankingContext& ctx) {
  QuerySide q;
  q.tokens = tokenize(query);
  for (const auto& t : q.tokens) {
    if (ctx.lexicon->is_entity(t)) q.entities.insert(t);
  }
  if (!q.tokens.empty()) {
    q.keyword = extract_keyword(query, *ctx.corpus_stats, *ctx.lexicon);
    const auto w = tfidf_weights(q.tokens, *ctx.corpus_stats);
    q.max_tfidf = *std::max_element(w.begin(), w.end());
  }
  if (const auto it = ctx.query_freq.find(std::string(query)); it != ctx.query_freq.end()) q.freq = it->second;
  return q;
}

FeatureVector features_for(const QuerySide& q, const Vec& qvec, const EventRecord& event, const RankingContext& ctx) {
  FeatureVector fv;
  const TokenSeq et = tokenize(event.text);
  fv[kCosineSim] = dot(qvec, ctx.encoder->encode(et));
  fv[kBm25] = ctx.corpus_stats->doc_count() > 0 ? bm25_score(q.tokens, et, *ctx.corpus_stats, ctx.bm25) : 0.0;
  fv[kJaccardSim] = 1.0 - jaccard_distance(q.tokens, et);
  const std::set<std::string> ev_tokens(et.begin(), et.end());
  std::size_t shared = 0;
  for (const auto& e : q.entities) shared += ev_tokens.count(e);
  fv[kEntityOverlap] = static_cast<double>(shared) / static_cast<double>(std::max<std::size_t>(1, q.entities.size()));
  fv[kKeywordInEvent] = !q.keyword.empty() && ev_tokens.count(q.keyword) ? 1.0 : 0.0;
  fv[kQueryTokenCount] = static_cast<double>(q.tokens.size());
  fv[kQueryMaxTfidf] = q.max_tfidf;
  fv[kQueryFreq] = q.freq;
  fv[kEventRecencyHours] = static_cast<double>(ctx.now_ts - event.found_ts) / 3600.0;
  if (const auto it = ctx.popularity.find(event.event_id); it != ctx.popularity.end()) fv[kEventPopularity] = it->second;
  return fv;
}

void check_context(const RankingContext& ctx) {
  if (!ctx.encoder || !ctx.corpus_stats || !ctx.lexicon) {
    throw std::invalid_argument("RankingContext: encoder, corpus_stats and lexicon are required");
  }
}

struct TreeBuilder {
  const std::vector<const std::vector<double>*>& x;
  const std::vector<double>& residual;
  const GBDTConfig& cfg;
  std::size_t n_features;
  RegressionTree tree;

  int build(std::vector<std::size_t> rows, std::size_t depth) {
    double sum = 0.0;
    for (const std::size_t r : rows) sum += residual[r];
    const double n = static_cast<double>(rows.size());
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{-1, 0.0, sum / n, -1, -1});
    if (depth >= cfg.max_depth || rows.size() < 2 * cfg.min_leaf) return id;

    double best_gain = 1e-12;
    int best_f = -1;
    double best_thr = 0.0;
    const double parent = sum * sum / n;
    std::vector<std::size_t> order = rows;
    for (std::size_t f = 0; f < n_features; ++f) {
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return (*x[a])[f] < (*x[b])[f]; });
      double left = 0.0;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        left += residual[order[i]];
        const double a = (*x[order[i]])[f];
        const double b = (*x[order[i + 1]])[f];
        if (!(a < b)) continue;
        const std::size_t nl = i + 1;
        const std::size_t nr = order.size() - nl;
        if (nl < cfg.min_leaf || nr < cfg.min_leaf) continue;
        const double right = sum - left;
        const double gain = left * left / static_cast<double>(nl) + right * right / static_cast<double>(nr) - parent;
        if (gain > best_gain) {
          best_gain = gain;
          best_f = static_cast<int>(f);
          best_thr = a + (b - a) / 2.0;
          if (!(best_thr > a)) best_thr = b;
        }
      }
    }
    if (best_f < 0) return id;
    std::vector<std::size_t> lrows, rrows;
    for (const std::size_t r : rows) ((*x[r])[static_cast<std::size_t>(best_f)] < best_thr ? lrows : rrows).push_back(r);
    tree.nodes[static_cast<std::size_t>(id)].feature = best_f;
    tree.nodes[static_cast<std::size_t>(id)].threshold = best_thr;
    const int l = build(std::move(lrows), depth + 1);
    const int r = build(std::move(rrows), depth + 1);
    tree.nodes[static_cast<std::size_t>(id)].left = l;
    tree.nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }
};

double mean_squared_error(std::span<const GBDTSample> samples, const std::vector<double>& pred) {
  double s = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double d = samples[i].label - pred[i];
    s += d * d;
  }
  return s / static_cast<double>(samples.size());
}

}  // namespace

std::unordered_map<std::string, double> popularity_table(const EventIndex& index, const EventClusters& clusters) {
  if (clusters.cluster_of.size() != index.size()) throw std::invalid_argument("popularity_table: cluster/index size mismatch");
  std::unordered_map<std::string, double> out;
  for (std::size_t r = 0; r < index.size(); ++r) out[index.ids()[r]] = static_cast<double>(clusters.size_of_row(r));
  return out;
}

FeatureVector extract_features(std::string_view query, const EventRecord& event, const RankingContext& ctx) {
  check_context(ctx);
  const QuerySide q = query_side(query, ctx);
  return features_for(q, ctx.encoder->encode(q.tokens), event, ctx);
}

double RegressionTree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(nodes[i].feature)] < nodes[i].threshold ? nodes[i].left
                                                                                                      : nodes[i].right);
  }
  return nodes[i].value;
}

std::size_t RegressionTree::depth() const {
  std::function<std::size_t(int)> rec = [&](int i) -> std::size_t {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    return n.is_leaf() ? 0 : 1 + std::max(rec(n.left), rec(n.right));
  };
  return nodes.empty() ? 0 : rec(0);
}

GBDTModel gbdt_train(std::span<const GBDTSample> samples, const GBDTConfig& config) {
  if (samples.empty()) throw std::invalid_argument("gbdt_train: empty sample list");
  if (config.max_depth == 0 || config.min_leaf == 0 || !(config.lr > 0.0)) {
    throw std::invalid_argument("gbdt_train: max_depth, min_leaf and lr must be positive");
  }
  GBDTModel model;
  model.registry = samples.front().features.registry;
  model.n_features = samples.front().features.values.size();
  model.lr = config.lr;
  std::vector<const std::vector<double>*> x;
  for (const auto& s : samples) {
    if (s.features.registry != model.registry || s.features.values.size() != model.n_features) {
      throw std::invalid_argument("gbdt_train: samples disagree on the feature registry");
    }
    x.push_back(&s.features.values);
  }
  double sum = 0.0;
  for (const auto& s : samples) sum += s.label;
  model.base = sum / static_cast<double>(samples.size());
  std::vector<double> pred(samples.size(), model.base);
  model.train_mse.push_back(mean_squared_error(samples, pred));
  std::vector<std::size_t> all(samples.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<double> residual(samples.size());
  for (std::size_t t = 0; t < config.n_trees; ++t) {
    for (std::size_t i = 0; i < samples.size(); ++i) residual[i] = samples[i].label - pred[i];
    TreeBuilder b{x, residual, config, model.n_features, {}};
    b.build(all, 0);
    for (std::size_t i = 0; i < samples.size(); ++i) pred[i] += config.lr * b.tree.predict(*x[i]);
    model.trees.push_back(std::move(b.tree));
    model.train_mse.push_back(mean_squared_error(samples, pred));
  }
  return model;
}

double gbdt_predict(const GBDTModel& model, const FeatureVector& fv) {
  if (fv.registry != model.registry || fv.values.size() != model.n_features) {
    throw std::invalid_argument("gbdt_predict: feature registry mismatch (model " + model.registry + ", input " +
                                fv.registry + ")");
  }
  double s = 0.0;
  for (const auto& t : model.trees) s += t.predict(fv.values);
  return model.base + model.lr * s;
}

Json GBDTModel::to_json() const {
  Json trees_json = Json::array();
  for (const auto& t : trees) {
    Json nodes = Json::array();
    for (const auto& n : t.nodes) {
      nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"value", n.value}, {"left", n.left}, {"right", n.right}});
    }
    trees_json.push_back(std::move(nodes));
  }
  return Json{{"format", "eqe-gbdt"}, {"version", 1}, {"registry", registry}, {"n_features", n_features},
              {"base", base},         {"lr", lr},     {"trees", trees_json}};
}

GBDTModel GBDTModel::from_json(const Json& doc) {
  if (doc.value("format", "") != "eqe-gbdt" || doc.value("version", 0) != 1) throw DataError("not a GBDT model (version 1)");
  GBDTModel m;
  m.registry = doc.at("registry").get<std::string>();
  m.n_features = doc.at("n_features").get<std::size_t>();
  m.base = doc.at("base").get<double>();
  m.lr = doc.at("lr").get<double>();
  for (const auto& tj : doc.at("trees")) {
    RegressionTree t;
    for (const auto& nj : tj) {
      t.nodes.push_back({nj.at("feature").get<int>(), nj.at("threshold").get<double>(), nj.at("value").get<double>(),
                         nj.at("left").get<int>(), nj.at("right").get<int>()});
    }
    const int n = static_cast<int>(t.nodes.size());
    for (const auto& node : t.nodes) {
      if (!node.is_leaf() && (node.feature >= static_cast<int>(m.n_features) || node.left <= 0 || node.left >= n ||
                              node.right <= 0 || node.right >= n)) {
        throw DataError("GBDT model: malformed tree node");
      }
    }
    if (t.nodes.empty()) throw DataError("GBDT model: empty tree");
    m.trees.push_back(std::move(t));
  }
  return m;
}

void GBDTModel::save(const std::filesystem::path& path) const { write_json_file(path, to_json()); }

GBDTModel GBDTModel::load(const std::filesystem::path& path) {
  try {
    return from_json(read_json_file(path));
  } catch (const Json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::vector<RankedEvent> rank_candidates(std::string_view query, std::span<const EventRecord> events,
                                         const GBDTModel& model, const RankingContext& ctx) {
  if (events.empty()) throw std::invalid_argument("no expansion");
  check_context(ctx);
  const QuerySide q = query_side(query, ctx);
  const Vec qvec = ctx.encoder->encode(q.tokens);
  std::vector<RankedEvent> out;
  out.reserve(events.size());
  for (const auto& e : events) {
    RankedEvent r{e, 0.0, features_for(q, qvec, e, ctx)};
    r.score = gbdt_predict(model, r.features);
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(), [](const RankedEvent& a, const RankedEvent& b) {
    return a.score != b.score ? a.score > b.score : a.event.event_id < b.event.event_id;
  });
  return out;
}

RankedEvent top1(std::string_view query, std::span<const EventRecord> events, const GBDTModel& model,
                 const RankingContext& ctx) {
  return rank_candidates(query, events, model, ctx).front();
}

std::vector<RankSample> load_rank_samples(const std::filesystem::path& path) {
  std::vector<RankSample> out;
  for_each_jsonl(path, [&](const Json& rec, std::size_t line) {
    RankSample s;
    s.query = require_string(rec, "query", line);
    s.event_id = require_string(rec, "event_id", line);
    const auto label = require_int(rec, "label", line);
    if (label != 0 && label != 1) throw DataError("label must be 0 or 1 at line " + std::to_string(line));
    s.label = static_cast<int>(label);
    s.ts = require_int(rec, "ts", line);
    out.push_back(std::move(s));
  });
  return out;
}

std::vector<GBDTSample> build_rank_training_set(std::span<const RankSample> samples,
                                                std::span<const EventRecord> events, RankingContext ctx) {
  std::unordered_map<std::string_view, const EventRecord*> by_id;
  for (const auto& e : events) by_id.emplace(e.event_id, &e);
  std::vector<GBDTSample> out;
  out.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto it = by_id.find(samples[i].event_id);
    if (it == by_id.end()) {
      throw DataError("rank sample " + std::to_string(i + 1) + ": unknown event_id " + samples[i].event_id);
    }
    ctx.now_ts = samples[i].ts;
    out.push_back({extract_features(samples[i].query, *it->second, ctx), static_cast<double>(samples[i].label)});
  }
  return out;
}

}  // namespace eqe
