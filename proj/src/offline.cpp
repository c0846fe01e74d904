#include "eqe/offline.hpp"

#include <stdexcept>

#include "eqe/collect.hpp"
#include "eqe/reformulate.hpp"
#include "eqe/retrieve.hpp"

namespace eqe {

namespace fs = std::filesystem;

namespace {

fs::path stage_record(const DataPaths& p, const std::string& name) { return p.artifacts() / ("stage_" + name + ".json"); }

StageReport stage_from_json(const Json& j) {
  StageReport r;
  r.name = j.at("name").get<std::string>();
  r.input = j.at("input").get<std::size_t>();
  r.kept = j.at("kept").get<std::size_t>();
  r.rejected = j.at("rejected").get<std::size_t>();
  r.reasons = j.at("reasons").get<std::map<std::string, std::size_t>>();
  r.info = j.at("info").get<std::map<std::string, std::size_t>>();
  return r;
}

// Returns the recorded report when resuming and every output exists.
std::optional<StageReport> resumed(const DataPaths& p, const std::string& name, bool resume,
                                   std::initializer_list<fs::path> outputs) {
  if (!resume || !fs::exists(stage_record(p, name))) return std::nullopt;
  for (const auto& o : outputs) {
    if (!fs::exists(o)) return std::nullopt;
  }
  StageReport r = stage_from_json(read_json_file(stage_record(p, name)));
  r.resumed = true;
  return r;
}

StageReport finish(const DataPaths& p, StageReport r) {
  write_json_file(stage_record(p, r.name), r.to_json());
  return r;
}

template <typename F>
StageReport guarded(const std::string& name, F&& body) {
  try {
    return body();
  } catch (const DataError& e) {
    throw DataError("stage " + name + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError("stage " + name + ": " + e.what());
  } catch (const Json::exception& e) {
    throw DataError("stage " + name + ": " + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error("stage " + name + ": " + e.what());
  }
}

}  // namespace

Json StageReport::to_json() const {
  return Json{{"name", name}, {"input", input}, {"kept", kept}, {"rejected", rejected},
              {"reasons", reasons}, {"info", info}, {"resumed", resumed}};
}

const StageReport& OfflineReport::stage(const std::string& name) const {
  for (const auto& s : stages) {
    if (s.name == name) return s;
  }
  throw std::out_of_range("no stage " + name);
}

Json OfflineReport::to_json() const {
  Json arr = Json::array();
  for (const auto& s : stages) arr.push_back(s.to_json());
  return Json{{"stages", arr}};
}

std::vector<EventCandidate> load_candidates(const fs::path& path) {
  std::vector<EventCandidate> out;
  for_each_jsonl(path, [&](const Json& rec, std::size_t line) {
    EventCandidate c;
    c.headline.id = require_string(rec, "id", line);
    c.headline.title = require_string(rec, "title", line);
    c.headline.site = require_string(rec, "site", line);
    c.headline.page_type = require_string(rec, "page_type", line);
    c.headline.publish_ts = require_int(rec, "publish_ts", line);
    c.score = require_number(rec, "score", line);
    c.found_ts = require_int(rec, "found_ts", line);
    out.push_back(std::move(c));
  });
  return out;
}

void save_candidates(const fs::path& path, const std::vector<EventCandidate>& cands) {
  std::vector<Json> recs;
  for (const auto& c : cands) {
    recs.push_back({{"id", c.headline.id},
                    {"title", c.headline.title},
                    {"site", c.headline.site},
                    {"page_type", c.headline.page_type},
                    {"publish_ts", c.headline.publish_ts},
                    {"score", c.score},
                    {"found_ts", c.found_ts}});
  }
  write_jsonl(path, recs);
}

void save_event_clusters(const fs::path& path, const EventIndex& index, const EventClusters& clusters) {
  std::vector<Json> recs;
  for (std::size_t r = 0; r < index.size(); ++r) {
    recs.push_back({{"event_id", index.ids()[r]}, {"cluster", clusters.cluster_of[r]}, {"size", clusters.size_of_row(r)}});
  }
  write_jsonl(path, recs);
}

std::unordered_map<std::string, double> load_event_popularity(const fs::path& path) {
  std::unordered_map<std::string, double> out;
  for_each_jsonl(path, [&](const Json& rec, std::size_t line) {
    out[require_string(rec, "event_id", line)] = static_cast<double>(require_int(rec, "size", line));
  });
  return out;
}

DualTower untrained_tower(const std::vector<EventRecord>& events, const std::vector<ClickRecord>& clicks,
                          const EncoderConfig& config) {
  std::vector<TokenSeq> corpus;
  corpus.reserve(events.size() + clicks.size());
  for (const auto& e : events) corpus.push_back(tokenize(e.text));
  for (const auto& c : clicks) corpus.push_back(tokenize(c.query));
  return DualTower(EncoderModel::build(corpus, config));
}

StageReport run_collect_stage(const EqeConfig& config, const DataPaths& p, bool resume) {
  return guarded("collect", [&] {
    if (auto r = resumed(p, "collect", resume, {p.candidates(), p.rejections(), p.fine_model()})) return *r;
    const auto headlines = load_headlines(p.headlines());
    const auto lex = TriggerLexicon::load(p.lexicon());
    StageReport rep;
    rep.name = "collect";
    rep.input = headlines.size();
    const CoarseReport coarse = coarse_filter(headlines, lex, config.coarse);
    FineFilterConfig fcfg = config.fine;
    const FineFilterModel model = train_fine_filter(load_labeled(p.labeled()), &lex, fcfg);
    FineReport fine = fine_filter(coarse.kept, model, &lex, 0);
    for (auto& c : fine.kept) c.found_ts = c.headline.publish_ts;
    std::vector<Json> rej;
    const std::vector<Rejection>* lists[] = {&coarse.rejected, &fine.rejected};
    for (const auto* list : lists) {
      for (const auto& r : *list) {
        ++rep.reasons[std::string(to_string(r.reason))];
        rej.push_back({{"id", r.headline.id}, {"reason", std::string(to_string(r.reason))}});
      }
    }
    rep.kept = fine.kept.size();
    rep.rejected = rej.size();
    rep.info["coarse_kept"] = coarse.kept.size();
    model.save(p.fine_model());
    save_candidates(p.candidates(), fine.kept);
    write_jsonl(p.rejections(), rej);
    return finish(p, rep);
  });
}

StageReport run_reformulate_stage(const EqeConfig& config, const DataPaths& p, bool resume) {
  return guarded("reformulate", [&] {
    if (auto r = resumed(p, "reformulate", resume, {p.events()})) return *r;
    const auto cands = load_candidates(p.candidates());
    const auto lex = TriggerLexicon::load(p.lexicon());
    StageReport rep;
    rep.name = "reformulate";
    rep.input = cands.size();
    std::vector<EventRecord> events;
    for (const auto& c : cands) {
      std::string text;
      try {
        text = extractive_reformulate(c.headline.title, lex, config.reformulate);
      } catch (const DataError&) {
        ++rep.reasons["not_reformulatable"];
        ++rep.rejected;
        continue;
      }
      events.push_back({event_id_for_headline(c.headline.id), std::move(text), c.headline.id, c.found_ts});
    }
    rep.kept = events.size();
    save_events(p.events(), events);
    return finish(p, rep);
  });
}

StageReport run_index_stage(const EqeConfig& config, const DataPaths& p, bool resume) {
  return guarded("index", [&] {
    if (auto r = resumed(p, "index", resume, {p.index(), p.retriever()})) return *r;
    const auto events = load_events(p.events());
    StageReport rep;
    rep.name = "index";
    rep.input = events.size();
    if (events.empty()) return finish(p, rep);
    DualTower tower;
    if (fs::exists(p.retriever())) {
      tower = DualTower::load(p.retriever());
    } else {
      const auto clicks = fs::exists(p.clicklog()) ? load_clicklog(p.clicklog()) : std::vector<ClickRecord>{};
      tower = untrained_tower(events, clicks, config.encoder);
      tower.save(p.retriever());
    }
    const EventIndex index = EventIndex::build(tower, events, config.ivf);
    index.save(p.index());
    rep.kept = index.size();
    rep.info["dim"] = index.dim();
    rep.info["ivf_lists"] = index.lists().size();
    return finish(p, rep);
  });
}

StageReport run_cluster_stage(const EqeConfig& config, const DataPaths& p, bool resume) {
  return guarded("cluster", [&] {
    if (auto r = resumed(p, "cluster", resume, {p.event_clusters()})) return *r;
    StageReport rep;
    rep.name = "cluster";
    if (!fs::exists(p.index())) return finish(p, rep);
    const EventIndex index = EventIndex::load(p.index());
    const EventClusters clusters = cluster_events(index, config.event_cluster_theta);
    save_event_clusters(p.event_clusters(), index, clusters);
    rep.input = index.size();
    rep.kept = index.size();
    rep.info["clusters"] = clusters.sizes.size();
    return finish(p, rep);
  });
}

OfflineReport run_offline_pipeline(const EqeConfig& config, const fs::path& data_dir, const OfflineOptions& options) {
  const DataPaths p{data_dir};
  OfflineReport report;
  const bool empty = guarded("collect", [&] {
                       StageReport r;
                       r.input = load_headlines(p.headlines()).size();
                       return r;
                     }).input == 0;
  if (empty) {
    for (const char* name : {"collect", "reformulate", "index", "cluster"}) {
      StageReport r;
      r.name = name;
      report.stages.push_back(r);
    }
    return report;
  }
  fs::create_directories(p.artifacts());
  report.stages.push_back(run_collect_stage(config, p, options.resume));
  report.stages.push_back(run_reformulate_stage(config, p, options.resume));
  report.stages.push_back(run_index_stage(config, p, options.resume));
  report.stages.push_back(run_cluster_stage(config, p, options.resume));
  write_json_file(p.report(), report.to_json());
  return report;
}

}  // namespace eqe
