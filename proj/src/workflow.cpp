#include "eqe/workflow.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include "eqe/jsonl.hpp"
#include "eqe/reformulate.hpp"

namespace eqe {

namespace fs = std::filesystem;

namespace {

std::vector<ClickRecord> load_clicks_if_present(const fs::path& path) {
  return fs::exists(path) ? load_clicklog(path) : std::vector<ClickRecord>{};
}

std::unordered_map<std::string, double> query_frequencies(std::span<const ClickRecord> clicks) {
  std::unordered_map<std::string, double> out;
  for (const auto& c : clicks) out[c.query] += 1.0;
  return out;
}

std::vector<RetrievalPair> required_pairs(const DataPaths& paths, const std::vector<EventRecord>& events) {
  const auto clicks = load_clicklog(paths.clicklog());
  auto pairs = retrieval_pairs_from_clicks(clicks, events);
  if (pairs.size() < 2) throw DataError("fewer than 2 click-joined retrieval pairs");
  return pairs;
}

void save_hard_negatives(const fs::path& path, const std::map<std::string, std::vector<HardNegative>>& negs) {
  std::vector<Json> recs;
  for (const auto& [query, list] : negs) {
    Json arr = Json::array();
    for (const auto& n : list) arr.push_back({{"event_id", n.event_id}, {"text", n.text}, {"score", n.score}});
    recs.push_back({{"query", query}, {"negatives", arr}});
  }
  write_jsonl(path, recs);
}

std::map<std::string, std::vector<HardNegative>> load_hard_negatives(const fs::path& path) {
  std::map<std::string, std::vector<HardNegative>> out;
  for_each_jsonl(path, [&](const Json& rec, std::size_t line) {
    auto& list = out[require_string(rec, "query", line)];
    if (!rec.contains("negatives") || !rec["negatives"].is_array()) {
      throw DataError("line " + std::to_string(line) + ": negatives must be an array");
    }
    for (const auto& n : rec["negatives"]) {
      list.push_back({require_string(n, "event_id", line), require_string(n, "text", line), require_number(n, "score", line)});
    }
  });
  return out;
}

fs::path stage1_retriever(const DataPaths& p) { return p.artifacts() / "retriever_stage1.json"; }

Json loss_summary(const std::vector<double>& curve) {
  return Json{{"epochs", curve.size()}, {"first_loss", curve.empty() ? 0.0 : curve.front()},
              {"last_loss", curve.empty() ? 0.0 : curve.back()}};
}

}  // namespace

std::vector<RetrievalPair> retrieval_pairs_from_clicks(std::span<const ClickRecord> clicklog,
                                                       std::span<const EventRecord> events) {
  std::unordered_map<std::string, const EventRecord*> by_headline;
  for (const auto& e : events) by_headline.emplace(e.source_headline_id, &e);
  std::set<std::pair<std::string, std::string>> seen;
  std::vector<RetrievalPair> out;
  for (const auto& c : clicklog) {
    const auto it = by_headline.find(c.doc_id);
    if (it == by_headline.end()) continue;
    if (seen.emplace(c.query, it->second->text).second) out.push_back({c.query, it->second->text});
  }
  return out;
}

Json train_encoder_step(const EqeConfig& config, const DataPaths& paths) {
  const auto headlines = load_headlines(paths.headlines());
  const auto clicks = load_clicks_if_present(paths.clicklog());
  const auto lex = TriggerLexicon::load(paths.lexicon());
  const PairBuildResult built = build_training_pairs(clicks, headlines, lex, config.pairs);
  std::vector<TokenSeq> vocab;
  for (const auto& p : built.pairs) {
    vocab.push_back(tokenize(p.headline));
    vocab.push_back(tokenize(p.event));
  }
  const EncoderModel initial = EncoderModel::build(vocab, config.encoder);
  const auto kept = filter_pairs(built.pairs, initial, config.pair_filter);
  if (kept.size() < 2) throw DataError("fewer than 2 training pairs after relevance filtering");
  std::vector<TokenPair> pairs;
  pairs.reserve(kept.size());
  for (const auto& p : kept) pairs.emplace_back(tokenize(p.headline), tokenize(p.event));
  TrainResult trained = train_contrastive(initial, pairs, config.stage1);
  fs::create_directories(paths.artifacts());
  trained.model.save(paths.encoder());
  return Json{{"pairs", built.pairs.size()},
              {"skipped_clicks", built.skipped_clicks},
              {"kept", kept.size()},
              {"training", loss_summary(trained.loss_curve)}};
}

Json train_retriever_step(const EqeConfig& config, const DataPaths& paths, int stage) {
  const auto events = load_events(paths.events());
  const auto pairs = required_pairs(paths, events);
  fs::create_directories(paths.artifacts());
  if (stage == 1) {
    const auto clicks = load_clicklog(paths.clicklog());
    TowerTrainResult r = train_stage1(untrained_tower(events, clicks, config.encoder), pairs, config.stage1);
    r.tower.save(stage1_retriever(paths));
    r.tower.save(paths.retriever());
    return Json{{"stage", 1}, {"pairs", pairs.size()}, {"training", loss_summary(r.loss_curve)}};
  }
  if (stage != 2) throw std::invalid_argument("stage must be 1 or 2");
  if (!fs::exists(stage1_retriever(paths))) throw DataError("stage 2 needs a stage-1 retriever; run --stage 1 first");
  const auto negs = load_hard_negatives(paths.hard_negatives());
  TowerTrainResult r = train_stage2(DualTower::load(stage1_retriever(paths)), pairs, negs, config.stage2);
  r.tower.save(paths.retriever());
  return Json{{"stage", 2}, {"pairs", pairs.size()}, {"queries_with_negatives", negs.size()},
              {"training", loss_summary(r.loss_curve)}};
}

Json mine_negatives_step(const EqeConfig& config, const DataPaths& paths) {
  const auto events = load_events(paths.events());
  const auto pairs = required_pairs(paths, events);
  const DualTower tower = DualTower::load(paths.retriever());
  const EventIndex index = EventIndex::build(tower, events);
  const auto negs = mine_hard_negatives(index, events, tower, pairs, config.hard_negatives);
  save_hard_negatives(paths.hard_negatives(), negs);
  std::size_t total = 0;
  for (const auto& [q, list] : negs) total += list.size();
  return Json{{"queries", negs.size()}, {"negatives", total}};
}

Json train_ranker_step(const EqeConfig& config, const DataPaths& paths) {
  const auto events = load_events(paths.events());
  const auto samples = load_rank_samples(paths.rank_samples());
  std::unordered_set<std::string> known;
  for (const auto& e : events) known.insert(e.event_id);
  std::vector<RankSample> usable;
  for (const auto& s : samples) {
    if (known.count(s.event_id)) usable.push_back(s);
  }
  if (usable.empty()) throw DataError("no rank sample names a collected event");
  const DualTower tower = DualTower::load(paths.retriever());
  const DocumentCorpus corpus(load_documents(paths.corpus()), config.bm25);
  const auto lex = TriggerLexicon::load(paths.lexicon());
  RankingContext ctx;
  ctx.encoder = &tower.query_tower();
  ctx.corpus_stats = &corpus.stats();
  ctx.lexicon = &lex;
  ctx.bm25 = config.bm25;
  if (fs::exists(paths.event_clusters())) ctx.popularity = load_event_popularity(paths.event_clusters());
  ctx.query_freq = query_frequencies(load_clicks_if_present(paths.clicklog()));
  const auto train = build_rank_training_set(usable, events, ctx);
  const GBDTModel model = gbdt_train(train, config.gbdt);
  fs::create_directories(paths.artifacts());
  model.save(paths.ranker());
  return Json{{"samples", samples.size()},
              {"used", usable.size()},
              {"skipped_unknown_event", samples.size() - usable.size()},
              {"trees", model.trees.size()},
              {"train_mse", model.train_mse.empty() ? 0.0 : model.train_mse.back()}};
}

Json baseline_step(const EqeConfig& config, const DataPaths& paths) {
  const DocumentCorpus corpus(load_documents(paths.corpus()), config.bm25);
  const auto clicks = load_clicklog(paths.clicklog());
  const ClickGraph graph = build_adjacency(clicks, corpus, config.baseline.graph);
  const PropagationState state = propagate(graph, config.baseline.n_iters);
  const auto clusters = cluster_queries(graph, state, config.baseline.theta);
  fs::create_directories(paths.artifacts());
  save_query_clusters(paths.query_clusters(), clusters);
  return Json{{"queries", graph.queries.size()},
              {"docs", graph.docs.size()},
              {"edges", graph.edge_count()},
              {"dropped_outside_window", graph.dropped_outside_window},
              {"dropped_unknown_doc", graph.dropped_unknown_doc},
              {"clusters", clusters.size()}};
}

Json eval_gen_step(const EqeConfig& config, const DataPaths& paths, const std::optional<fs::path>& predictions) {
  const auto gold = load_title2eventphrase(paths.gold());
  std::vector<std::string> preds;
  if (predictions) {
    std::ifstream in(*predictions);
    if (!in) throw DataError("cannot open " + predictions->string());
    for (std::string line; std::getline(in, line);) preds.push_back(line);
  } else {
    const auto lex = TriggerLexicon::load(paths.lexicon());
    for (const auto& g : gold) {
      try {
        preds.push_back(extractive_reformulate(g.title, lex, config.reformulate));
      } catch (const DataError&) {
        preds.emplace_back();
      }
    }
  }
  const EncoderModel model = fs::exists(paths.encoder()) ? EncoderModel::load(paths.encoder())
                                                         : DualTower::load(paths.retriever()).query_tower();
  const GenEvalReport r = evaluate_generation(preds, gold, model);
  Json out = r.to_json();
  out.erase("rows");
  out["n"] = r.rows.size();
  return out;
}

Json eval_retrieval_step(const EqeConfig& config, const DataPaths& paths) {
  const auto events = load_events(paths.events());
  const auto pairs = required_pairs(paths, events);
  const DualTower tower = DualTower::load(paths.retriever());
  const EventIndex index = EventIndex::build(tower, events);
  std::map<std::string, std::set<std::string>> relevant;
  for (const auto& p : pairs) relevant[p.query].insert(p.event);
  std::unordered_map<std::string, const EventRecord*> by_id;
  for (const auto& e : events) by_id.emplace(e.event_id, &e);
  std::vector<std::vector<ScoredCandidate>> lists;
  for (const auto& [query, texts] : relevant) {
    const Vec qv = tower.encode_query(tokenize(query));
    std::vector<ScoredCandidate> list;
    list.reserve(index.size());
    for (std::size_t r = 0; r < index.size(); ++r) {
      list.push_back({dot(qv, index.vector(r)), texts.count(by_id.at(index.ids()[r])->text) > 0});
    }
    lists.push_back(std::move(list));
  }
  const auto m = retrieval_metrics(lists, config.eval.retrieval_k);
  return Json{{"k", m.k}, {"recall_at_k", m.recall_at_k}, {"mrr_at_k", m.mrr_at_k}, {"auc", m.auc},
              {"evaluated", m.evaluated}, {"excluded", m.excluded}};
}

Json eval_coverage_step(const EqeConfig& config, const DataPaths& paths) {
  const auto truth = load_coverage_truth(paths.coverage_truth());
  const auto disc = load_coverage_discoveries(paths.coverage_discoveries());
  if (truth.empty()) throw DataError("coverage truth is empty");
  return eval_coverage_timeline(truth, disc, config.eval.coverage_checkpoints_min).to_json();
}

std::unique_ptr<ServingBundle> load_serving_bundle(const EqeConfig& config, const DataPaths& paths, std::int64_t now_ts) {
  auto b = std::make_unique<ServingBundle>();
  b->tower = DualTower::load(paths.retriever());
  b->index = EventIndex::load(paths.index());
  b->events = load_events(paths.events());
  b->ranker = GBDTModel::load(paths.ranker());
  b->corpus = DocumentCorpus(load_documents(paths.corpus()), config.bm25);
  b->lexicon = TriggerLexicon::load(paths.lexicon());
  RankingContext ctx;
  ctx.encoder = &b->tower.query_tower();
  ctx.corpus_stats = &b->corpus.stats();
  ctx.lexicon = &b->lexicon;
  ctx.bm25 = config.bm25;
  if (fs::exists(paths.event_clusters())) ctx.popularity = load_event_popularity(paths.event_clusters());
  ctx.query_freq = query_frequencies(load_clicks_if_present(paths.clicklog()));
  ctx.now_ts = now_ts;
  b->expander = std::make_unique<EqeExpander>(b->tower, b->index, b->events, b->ranker, std::move(ctx), config.expander);
  return b;
}

Json E2EReport::to_json() const {
  return Json{{"k_list", eqe.k_list}, {"none", none.to_json()}, {"baseline", baseline.to_json()}, {"eqe", eqe.to_json()}};
}

E2EReport eval_e2e_step(const EqeConfig& config, const DataPaths& paths) {
  const auto eval_clicks = load_clicklog(paths.eval_clicklog());
  if (eval_clicks.empty()) throw DataError("evaluation click log is empty");
  std::int64_t now = eval_clicks.front().ts;
  for (const auto& c : eval_clicks) now = std::max(now, c.ts);
  const auto bundle = load_serving_bundle(config, paths, now);
  const auto queries = eval_queries_from_clicklog(eval_clicks);
  const BaselineExpander baseline(load_query_clusters(paths.query_clusters()));
  const auto& k = config.eval.k_list;
  E2EReport r;
  r.none = eval_recall_at_k(queries, [](const std::string&) { return std::string(); }, bundle->corpus, k);
  r.baseline = eval_recall_at_k(
      queries, [&](const std::string& q) { return baseline.expand(q).value_or(std::string()); }, bundle->corpus, k);
  r.eqe = eval_recall_at_k(queries, bundle->expander->as_fn(), bundle->corpus, k);
  return r;
}

}  // namespace eqe
