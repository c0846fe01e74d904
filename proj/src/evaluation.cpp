#include "eqe/evaluation.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "eqe/jsonl.hpp"

namespace eqe {

std::vector<RetrievedDoc> expanded_retrieval(const std::string& query, const std::string& expansion,
                                             const DocumentCorpus& corpus, std::size_t k) {
  const Bm25Index& idx = corpus.index();
  const TokenSeq qt = tokenize(query);
  std::vector<RetrievedDoc> out;
  if (expansion.empty()) {
    for (const auto& h : idx.search(qt, k)) out.push_back({h.doc, h.score});
    return out;
  }
  const TokenSeq et = tokenize(expansion);
  std::unordered_set<std::size_t> seen;
  for (const auto* toks : {&qt, &et}) {
    for (const auto& h : idx.search(*toks, k)) {
      if (seen.insert(h.doc).second) out.push_back({h.doc, std::max(idx.score(qt, h.doc), idx.score(et, h.doc))});
    }
  }
  auto before = [](const RetrievedDoc& a, const RetrievedDoc& b) {
    return a.score != b.score ? a.score > b.score : a.doc < b.doc;
  };
  std::sort(out.begin(), out.end(), before);
  if (out.size() > k) out.resize(k);
  return out;
}

std::vector<EvalQuery> eval_queries_from_clicklog(std::span<const ClickRecord> clicklog) {
  std::map<std::string, std::set<std::string>> grouped;
  for (const auto& c : clicklog) grouped[c.query].insert(c.doc_id);
  std::vector<EvalQuery> out;
  for (auto& [q, docs] : grouped) out.push_back({q, std::move(docs)});
  return out;
}

Json RecallReport::to_json() const {
  Json per_k = Json::object();
  for (std::size_t i = 0; i < k_list.size(); ++i) per_k[std::to_string(k_list[i])] = recall[i];
  return Json{{"recall", per_k}, {"evaluated", evaluated}, {"excluded", excluded}, {"expanded", expanded}};
}

RecallReport eval_recall_at_k(std::span<const EvalQuery> queries, const ExpandFn& expander,
                              const DocumentCorpus& corpus, const std::vector<std::size_t>& k_list) {
  if (k_list.empty()) throw std::invalid_argument("eval_recall_at_k: empty k list");
  RecallReport rep;
  rep.k_list = k_list;
  rep.recall.assign(k_list.size(), 0.0);
  rep.per_query.resize(k_list.size());
  for (const auto& q : queries) {
    if (q.clicked.empty()) {
      ++rep.excluded;
      continue;
    }
    std::unordered_set<std::size_t> truth;
    for (const auto& d : q.clicked) {
      const auto pos = corpus.position(d);
      if (!pos) throw DataError("clicked doc " + d + " for query '" + q.query + "' is not in the corpus");
      truth.insert(*pos);
    }
    const std::string expansion = expander ? expander(q.query) : std::string();
    if (!expansion.empty()) ++rep.expanded;
    ++rep.evaluated;
    for (std::size_t i = 0; i < k_list.size(); ++i) {
      std::size_t hit = 0;
      for (const auto& r : expanded_retrieval(q.query, expansion, corpus, k_list[i])) hit += truth.count(r.doc);
      const double recall = static_cast<double>(hit) / static_cast<double>(truth.size());
      rep.per_query[i].push_back(recall);
      rep.recall[i] += recall;
    }
  }
  if (rep.evaluated > 0) {
    for (double& r : rep.recall) r /= static_cast<double>(rep.evaluated);
  }
  return rep;
}

Json CoverageTimeline::to_json() const { return Json{{"checkpoints_min", checkpoints_min}, {"coverage", coverage}}; }

CoverageTimeline eval_coverage_timeline(std::span<const TimedEvent> truth, std::span<const TimedEvent> discoveries,
                                        std::vector<double> checkpoints_min) {
  if (truth.empty()) throw std::invalid_argument("eval_coverage_timeline: empty truth set");
  if (!std::is_sorted(checkpoints_min.begin(), checkpoints_min.end())) {
    throw std::invalid_argument("eval_coverage_timeline: checkpoints must be ascending");
  }
  std::unordered_map<std::string, std::int64_t> first_seen;
  for (const auto& d : discoveries) {
    const auto [it, inserted] = first_seen.try_emplace(d.event_id, d.ts);
    if (!inserted) it->second = std::min(it->second, d.ts);
  }
  std::vector<std::int64_t> lags;  // seconds
  for (const auto& t : truth) {
    const auto it = first_seen.find(t.event_id);
    if (it != first_seen.end()) lags.push_back(it->second - t.ts);
  }
  CoverageTimeline out;
  out.checkpoints_min = std::move(checkpoints_min);
  for (const double m : out.checkpoints_min) {
    const double limit = m * 60.0;
    const auto n = std::count_if(lags.begin(), lags.end(), [&](std::int64_t l) { return static_cast<double>(l) <= limit; });
    out.coverage.push_back(static_cast<double>(n) / static_cast<double>(truth.size()));
  }
  return out;
}

namespace {

std::vector<TimedEvent> load_timed(const std::filesystem::path& path, const char* ts_field) {
  std::vector<TimedEvent> out;
  for_each_jsonl(path, [&](const Json& rec, std::size_t line) {
    out.push_back({require_string(rec, "event_id", line), require_int(rec, ts_field, line)});
  });
  return out;
}

}  // namespace

std::vector<TimedEvent> load_coverage_truth(const std::filesystem::path& path) {
  return load_timed(path, "first_publish_ts");
}

std::vector<TimedEvent> load_coverage_discoveries(const std::filesystem::path& path) {
  return load_timed(path, "discovered_ts");
}

EqeExpander::EqeExpander(const DualTower& tower, const EventIndex& index, std::span<const EventRecord> events,
                         const GBDTModel& model, RankingContext ctx, EqeExpanderConfig config)
    : tower_(tower), index_(index), model_(model), ctx_(std::move(ctx)), config_(config) {
  std::unordered_map<std::string_view, const EventRecord*> by_id;
  for (const auto& e : events) by_id.emplace(e.event_id, &e);
  row_event_.reserve(index.size());
  for (const auto& id : index.ids()) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw std::invalid_argument("EqeExpander: index id missing from events: " + id);
    row_event_.push_back(it->second);
  }
  if (config_.candidate_k == 0) throw std::invalid_argument("EqeExpander: candidate_k must be >= 1");
}

std::string EqeExpander::expand(const std::string& query) const {
  const TokenSeq qt = tokenize(query);
  if (qt.empty()) return {};
  ++retrievals_;
  const Vec qv = tower_.encode_query(qt);
  const auto hits = index_.search(qv, config_.candidate_k, config_.mode);
  if (hits.empty()) return {};
  std::vector<EventRecord> cands;
  cands.reserve(hits.size());
  for (const auto& h : hits) cands.push_back(*row_event_[h.row]);
  ++rankings_;
  const RankedEvent best = top1(query, cands, model_, ctx_);
  if (best.score < config_.min_rank_score) return {};
  return best.event.text;
}

}  // namespace eqe
