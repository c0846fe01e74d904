#include "eqe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include "eqe/jsonl.hpp"
#include "eqe/offline.hpp"

namespace eqe::synth {

namespace {

constexpr const char* kConsonants = "bdfgklmnprstvz";
constexpr const char* kVowels = "aeiou";

const std::vector<std::string>& non_event_cues() {
  static const std::vector<std::string> cues = {"guide", "review", "tips", "photos", "opinion", "explained", "ranking", "recipe"};
  return cues;
}

template <typename T>
const T& pick(std::mt19937_64& rng, const std::vector<T>& v) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

std::int64_t uniform_ts(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

bool coin(std::mt19937_64& rng, double p) { return std::bernoulli_distribution(p)(rng); }

std::size_t uniform(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

std::string padded(const char* prefix, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%06zu", prefix, n);
  return buf;
}

}  // namespace

WordFactory::WordFactory(std::uint64_t seed) : state_(seed * 0x9E3779B97F4A7C15ull + 0x632BE59BD9B4E019ull) {}

std::string WordFactory::next() {
  static const std::unordered_set<std::string> reserved = [] {
    std::unordered_set<std::string> r(trigger_words().begin(), trigger_words().end());
    r.insert(interrogative_words().begin(), interrogative_words().end());
    r.insert(non_event_cues().begin(), non_event_cues().end());
    return r;
  }();
  for (;;) {
    // splitmix64 step
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    z ^= z >> 31;
    std::string w;
    const std::size_t syllables = 3;
    for (std::size_t s = 0; s < syllables; ++s) {
      w += kConsonants[z % 14];
      z /= 14;
      w += kVowels[z % 5];
      z /= 5;
    }
    if (z % 2 == 1) w += kConsonants[(z / 2) % 14];
    if (reserved.count(w) || !issued_.insert(w).second) continue;
    return w;
  }
}

std::vector<std::string> WordFactory::take(std::size_t n) {
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(next());
  return out;
}

const std::vector<std::string>& trigger_words() {
  static const std::vector<std::string> w = {"acquires", "launches", "resigns", "wins",    "recalls",  "announces",
                                             "bans",     "merges",   "sues",    "raises",  "cuts",     "opens",
                                             "closes",   "signs",    "loses",   "unveils", "suspends", "approves",
                                             "rejects",  "hires"};
  return w;
}

const std::vector<std::string>& interrogative_words() {
  static const std::vector<std::string> w = {"how", "why", "what", "when", "who", "which"};
  return w;
}

std::vector<TokenSeq> ParaphraseBenchmark::vocabulary_corpus() const {
  std::vector<TokenSeq> out;
  for (const auto& e : events) out.push_back(tokenize(e.text));
  for (const auto& p : train_pairs) out.push_back(tokenize(p.query));
  for (const auto& q : test) out.push_back(tokenize(q.query));
  return out;
}

ParaphraseBenchmark make_paraphrase_benchmark(const ParaphraseConfig& c) {
  if (c.train_families + 1 > c.n_entities * c.n_actions) {
    throw std::invalid_argument("paraphrase benchmark: no families left for testing");
  }
  std::mt19937_64 rng(c.seed);
  WordFactory wf(c.seed);
  const auto entities = wf.take(c.n_entities);
  std::vector<std::vector<std::string>> ev_syn(c.n_actions), q_syn(c.n_actions);
  for (std::size_t a = 0; a < c.n_actions; ++a) {
    ev_syn[a] = wf.take(c.synonyms);
    q_syn[a] = wf.take(c.synonyms);
  }
  const auto fillers = wf.take(c.n_fillers);
  std::vector<std::vector<std::string>> context(c.n_entities);
  for (auto& ctx : context) ctx = wf.take(c.entity_context);

  ParaphraseBenchmark b;
  const std::size_t n_families = c.n_entities * c.n_actions;
  std::vector<std::vector<std::size_t>> family_events(n_families);
  for (std::size_t f = 0; f < n_families; ++f) {
    const std::size_t e = f / c.n_actions;
    const std::size_t a = f % c.n_actions;
    for (std::size_t v = 0; v < c.variants; ++v) {
      TokenSeq t{entities[e], ev_syn[a][v % c.synonyms]};
      for (std::size_t k = 0; k < c.event_context && !context[e].empty(); ++k) t.push_back(pick(rng, context[e]));
      for (std::size_t k = 0; k < c.event_fillers; ++k) t.push_back(pick(rng, fillers));
      family_events[f].push_back(b.events.size());
      b.events.push_back({padded("p", b.events.size()), join_tokens(t), "", 0});
      b.family_of_event.push_back(f);
    }
  }
  std::vector<std::size_t> order(n_families);
  for (std::size_t f = 0; f < n_families; ++f) order[f] = f;
  std::shuffle(order.begin(), order.end(), rng);
  auto query_for = [&](std::size_t f) {
    return entities[f / c.n_actions] + " " + pick(rng, q_syn[f % c.n_actions]);
  };
  for (std::size_t i = 0; i < c.train_families; ++i) {
    const std::size_t f = order[i];
    for (std::size_t q = 0; q < c.train_queries_per_family; ++q) {
      const std::string query = query_for(f);
      for (const std::size_t ev : family_events[f]) b.train_pairs.push_back({query, b.events[ev].text});
    }
  }
  const std::size_t n_test_families = n_families - c.train_families;
  for (std::size_t i = 0; i < c.test_queries; ++i) {
    const std::size_t f = order[c.train_families + i % n_test_families];
    b.test.push_back({query_for(f), f});
  }
  return b;
}

double paraphrase_recall_at_k(const DualTower& tower, const ParaphraseBenchmark& bench, std::size_t k) {
  const EventIndex index = EventIndex::build(tower, bench.events);
  std::vector<std::vector<ScoredCandidate>> lists;
  lists.reserve(bench.test.size());
  for (const auto& q : bench.test) {
    const Vec qv = tower.encode_query(tokenize(q.query));
    std::vector<ScoredCandidate> list;
    list.reserve(index.size());
    for (std::size_t r = 0; r < index.size(); ++r) {
      list.push_back({dot(qv, index.vector(r)), bench.family_of_event[r] == q.family});
    }
    lists.push_back(std::move(list));
  }
  return retrieval_metrics(lists, k).recall_at_k;
}

SwapCorpus make_swap_corpus(std::size_t n_train, std::size_t n_heldout, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  WordFactory wf(seed + 1000);
  const auto entities = wf.take(60);
  const auto objects = wf.take(300);
  const auto fillers = wf.take(30);
  std::set<std::string> seen;
  std::vector<std::string> all;
  while (all.size() < n_train + n_heldout) {
    TokenSeq t{pick(rng, entities), pick(rng, trigger_words())};
    const std::size_t n_obj = uniform(rng, 2, 4);
    for (std::size_t i = 0; i < n_obj; ++i) t.push_back(pick(rng, objects));
    const std::size_t n_fill = uniform(rng, 0, 2);
    for (std::size_t i = 0; i < n_fill; ++i) t.push_back(pick(rng, fillers));
    std::string s = join_tokens(t);
    if (seen.insert(s).second) all.push_back(std::move(s));
  }
  SwapCorpus out;
  out.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.heldout.assign(all.begin() + static_cast<std::ptrdiff_t>(n_train), all.end());
  return out;
}

namespace {

struct Story {
  std::string entity;
  std::size_t topic = 0;
  std::string trigger;
  std::vector<std::string> objs;
  std::vector<std::string> details;
  std::int64_t start = 0;
  bool fresh = false;
  std::vector<std::size_t> outlets;  // headline positions
  std::vector<std::string> doc_ids;
};

class WorldBuilder {
 public:
  explicit WorldBuilder(const WorldConfig& c) : c_(c), rng_(c.seed), wf_(c.seed * 31 + 7) {}

  World build() {
    w_.config = c_;
    make_vocabulary();
    make_stories();
    make_story_headlines();
    make_noise_headlines();
    make_documents();
    corpus_ = DocumentCorpus(w_.documents);
    make_historical_clicks();
    make_eval_clicks();
    make_rank_samples();
    make_labeled();
    make_coverage();
    return std::move(w_);
  }

 private:
  std::string next_headline_id() { return padded("h", headline_counter_++); }
  std::string next_doc_id() { return padded("d", doc_counter_++); }

  void make_vocabulary() {
    for (std::size_t t = 0; t < c_.n_topics; ++t) topics_.push_back(wf_.take(c_.topic_words));
    common_ = wf_.take(c_.common_words);
    for (std::size_t t = 0; t < c_.n_topics; ++t) {
      topic_entities_.push_back(wf_.take(c_.entities_per_topic));
      for (const auto& e : topic_entities_.back()) {
        entities_.push_back(e);
        entity_topic_[e] = t;
      }
    }
    fillers_ = wf_.take(12);
    sites_ = {"site1", "site2", "site3", "site4", "site5", "site6", "site7", "site8"};
    w_.lexicon.triggers.insert(trigger_words().begin(), trigger_words().end());
    w_.lexicon.interrogatives.insert(interrogative_words().begin(), interrogative_words().end());
    w_.lexicon.entity_lexicon.insert(entities_.begin(), entities_.end());
  }

  Story new_story(const std::string& entity, bool fresh) {
    Story s;
    s.entity = entity;
    s.topic = entity_topic_.at(entity);
    s.trigger = pick(rng_, trigger_words());
    s.objs = wf_.take(2);
    s.details = wf_.take(3);
    s.fresh = fresh;
    s.start = fresh ? c_.now_ts - uniform_ts(rng_, 20 * 60, 3 * 3600) : c_.now_ts - uniform_ts(rng_, 86400, 30 * 86400);
    return s;
  }

  void make_stories() {
    if (c_.n_fresh_events > entities_.size()) throw std::invalid_argument("world: more fresh events than entities");
    std::vector<std::string> shuffled = entities_;
    std::shuffle(shuffled.begin(), shuffled.end(), rng_);
    fresh_entities_.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(c_.n_fresh_events));
    for (const auto& e : fresh_entities_) stories_.push_back(new_story(e, true));
    for (std::size_t i = 0; i < c_.n_old_events; ++i) {
      // every entity gets an old story before any gets a second one
      const std::string& e = i < shuffled.size() ? shuffled[i] : pick(rng_, entities_);
      stories_.push_back(new_story(e, false));
    }
  }

  TokenSeq story_core(const Story& s) const { return {s.entity, s.trigger, s.objs[0], s.objs[1]}; }

  void make_story_headlines() {
    for (std::size_t si = 0; si < stories_.size(); ++si) {
      Story& s = stories_[si];
      const std::size_t n_out = uniform(rng_, c_.outlets_min, c_.outlets_max);
      for (std::size_t o = 0; o < n_out; ++o) {
        TokenSeq t = story_core(s);
        if (o > 0 && coin(rng_, 0.5)) t.push_back(pick(rng_, fillers_));
        std::string title = join_tokens(t);
        if (o % 3 == 1) title = "\xE3\x80\x90" + pick(rng_, fillers_) + "\xE3\x80\x91" + title;
        const std::string site = pick(rng_, sites_);
        if (o % 2 == 0) title += " | " + site;
        Headline h{next_headline_id(), title, site, "news", o == 0 ? s.start : s.start + uniform_ts(rng_, 0, 1800)};
        s.outlets.push_back(w_.headlines.size());
        if (s.fresh) w_.gold.push_back({h.title, join_tokens(story_core(s)), "topic" + std::to_string(s.topic)});
        w_.headlines.push_back(std::move(h));
      }
    }
  }

  void make_noise_headlines() {
    const std::size_t per_kind = c_.n_noise_headlines / 5;
    for (std::size_t i = 0; i < c_.n_noise_headlines; ++i) {
      const std::string e = pick(rng_, entities_);
      const std::size_t t = entity_topic_.at(e);
      const std::string tw1 = pick(rng_, topics_[t]);
      const std::string tw2 = pick(rng_, topics_[t]);
      std::string title;
      switch (std::min<std::size_t>(i / std::max<std::size_t>(1, per_kind), 4)) {
        case 0:  // interrogative
          title = coin(rng_, 0.5) ? pick(rng_, interrogative_words()) + " " + e + " " + pick(rng_, trigger_words()) + " " + tw1
                                  : e + " " + pick(rng_, trigger_words()) + " " + tw1 + " " + tw2 + "?";
          break;
        case 1:  // multi-event
          title = e + " " + trigger_words()[i % 20] + " " + tw1 + " " + trigger_words()[(i + 3) % 20] + " " + tw2 + " " +
                  trigger_words()[(i + 7) % 20] + " " + pick(rng_, common_);
          break;
        case 2:  // irregular
          title = coin(rng_, 0.5) ? e + " " + pick(rng_, trigger_words())
                                  : e + " " + pick(rng_, trigger_words()) + " " + tw1 + " | a | b | " + tw2;
          break;
        case 3:  // missing component
          title = coin(rng_, 0.5) ? pick(rng_, trigger_words()) + " " + e + " " + tw1 + " " + tw2
                                  : e + " " + tw1 + " " + tw2 + " " + pick(rng_, common_);
          break;
        default:  // passes the rules but is not an event
          title = e + " " + pick(rng_, trigger_words()) + " " + pick(rng_, non_event_cues()) + " " +
                  pick(rng_, non_event_cues()) + " " + tw1 + " " + tw2;
          break;
      }
      w_.headlines.push_back({next_headline_id(), title, pick(rng_, sites_), "news",
                              c_.now_ts - uniform_ts(rng_, 600, 30 * 86400)});
    }
  }

  std::vector<std::string> body(std::size_t topic, std::size_t len) {
    std::vector<std::string> b;
    for (std::size_t i = 0; i < len; ++i) b.push_back(coin(rng_, 0.55) ? pick(rng_, topics_[topic]) : pick(rng_, common_));
    return b;
  }

  void insert_at_random(std::vector<std::string>& toks, const std::string& w) {
    toks.insert(toks.begin() + static_cast<std::ptrdiff_t>(uniform(rng_, 0, toks.size())), w);
  }

  void make_documents() {
    std::vector<Document> docs;
    for (auto& s : stories_) {
      const std::size_t n = s.fresh ? c_.fresh_docs_per_event : c_.old_docs_per_event;
      for (std::size_t d = 0; d < n; ++d) {
        // Old stories reuse outlet headline ids so historical clicks map to headlines.
        const bool on_headline = !s.fresh && d < s.outlets.size();
        const std::string id = on_headline ? w_.headlines[s.outlets[d]].id : next_doc_id();
        auto toks = body(s.topic, uniform(rng_, 20, 40));
        for (const auto& x : s.details) {
          const std::size_t reps = uniform(rng_, 1, 3);
          for (std::size_t r = 0; r < reps; ++r) insert_at_random(toks, x);
        }
        insert_at_random(toks, s.trigger);
        insert_at_random(toks, s.objs[0]);
        insert_at_random(toks, s.objs[1]);
        if (on_headline || !s.fresh || coin(rng_, 0.5)) insert_at_random(toks, s.entity);
        s.doc_ids.push_back(id);
        docs.push_back({id, join_tokens(toks)});
      }
    }
    while (docs.size() < c_.n_docs) {
      const std::size_t t = uniform(rng_, 0, c_.n_topics - 1);
      auto toks = body(t, uniform(rng_, 25, 50));
      for (const auto& e : topic_entities_[t]) {
        if (coin(rng_, 0.9)) insert_at_random(toks, e);
      }
      if (coin(rng_, 0.4)) insert_at_random(toks, pick(rng_, entities_));
      docs.push_back({next_doc_id(), join_tokens(toks)});
    }
    std::shuffle(docs.begin(), docs.end(), rng_);
    w_.documents = std::move(docs);
  }

  // Doc ids among the plain BM25 top `depth` for `query`, `n` of them at random.
  std::vector<std::string> top_docs(const std::string& query, std::size_t depth, std::size_t n) {
    auto hits = corpus_.index().search(tokenize(query), depth);
    std::vector<std::string> ids;
    for (const auto& h : hits) {
      if (h.score > 0.0) ids.push_back(corpus_.doc(h.doc).doc_id);
    }
    std::shuffle(ids.begin(), ids.end(), rng_);
    if (ids.size() > n) ids.resize(n);
    return ids;
  }

  void make_historical_clicks() {
    const std::int64_t end = c_.now_ts - 3 * 3600;
    const std::int64_t begin = end - 3 * 86400;
    for (const auto& s : stories_) {
      if (s.fresh) continue;
      for (const auto& d : s.doc_ids) {
        const std::int64_t ts = std::min(end, s.start + uniform_ts(rng_, 0, 6 * 3600));
        w_.clicklog.push_back({s.entity, d, ts});
      }
    }
    for (const auto& e : entities_) {
      const std::size_t t = entity_topic_.at(e);
      for (std::size_t k = 0; k < 3; ++k) {
        for (const auto& d : top_docs(e, 20, 2)) w_.clicklog.push_back({e, d, uniform_ts(rng_, begin, end)});
        const std::string q = e + " " + pick(rng_, topics_[t]);
        for (const auto& d : top_docs(q, 10, 2)) w_.clicklog.push_back({q, d, uniform_ts(rng_, begin, end)});
      }
    }
    for (std::size_t t = 0; t < c_.n_topics; ++t) {
      for (std::size_t k = 0; k < 5; ++k) {
        const std::string q = pick(rng_, topics_[t]) + " " + pick(rng_, topics_[t]);
        for (const auto& d : top_docs(q, 10, 2)) w_.clicklog.push_back({q, d, uniform_ts(rng_, begin, end)});
      }
    }
  }

  void make_eval_clicks() {
    const auto n_event = static_cast<std::size_t>(std::llround(c_.event_query_share * static_cast<double>(c_.n_eval_queries)));
    std::set<std::string> used;
    for (const auto& s : stories_) {
      if (!s.fresh || w_.event_queries.size() >= n_event) continue;
      used.insert(s.entity);
      w_.event_queries.push_back(s.entity);
      for (const auto& d : s.doc_ids) w_.eval_clicklog.push_back({s.entity, d, c_.now_ts});
    }
    const std::set<std::string> fresh(fresh_entities_.begin(), fresh_entities_.end());
    std::vector<std::string> calm;
    for (const auto& e : entities_) {
      if (!fresh.count(e)) calm.push_back(e);
    }
    std::size_t remaining = c_.n_eval_queries - w_.event_queries.size();
    std::size_t kind = 0;
    for (std::size_t guard = 0; remaining > 0 && guard < 100000; ++guard, ++kind) {
      std::string q;
      if (kind % 3 == 0 && !calm.empty()) {
        q = pick(rng_, calm);
      } else if (kind % 3 == 1) {
        const std::string e = pick(rng_, entities_);
        q = e + " " + pick(rng_, topics_[entity_topic_.at(e)]);
      } else {
        const std::size_t t = uniform(rng_, 0, c_.n_topics - 1);
        q = pick(rng_, topics_[t]) + " " + pick(rng_, topics_[t]);
      }
      if (!used.insert(q).second) continue;
      const auto docs = top_docs(q, 30, 5);
      if (docs.empty()) continue;
      for (const auto& d : docs) w_.eval_clicklog.push_back({q, d, c_.now_ts});
      --remaining;
    }
  }

  void make_rank_samples() {
    std::map<std::string, std::vector<const Story*>> by_entity;
    for (const auto& s : stories_) by_entity[s.entity].push_back(&s);
    auto event_ids = [&](const Story& s) {
      std::vector<std::string> ids;
      for (const std::size_t o : s.outlets) ids.push_back(event_id_for_headline(w_.headlines[o].id));
      return ids;
    };
    std::vector<const Story*> old;
    for (const auto& s : stories_) {
      if (!s.fresh) old.push_back(&s);
    }
    for (const Story* s : old) {
      const std::int64_t ts = s->start + uniform_ts(rng_, 600, 4 * 3600);
      for (const auto& id : event_ids(*s)) w_.rank_samples.push_back({s->entity, id, 1, ts});
      for (const Story* other : by_entity[s->entity]) {
        if (other == s || other->start >= ts) continue;
        w_.rank_samples.push_back({s->entity, event_ids(*other).front(), 0, ts});
      }
      for (std::size_t k = 0; k < 3; ++k) {
        const Story* r = pick(rng_, old);
        if (r->entity != s->entity && r->start < ts) w_.rank_samples.push_back({s->entity, event_ids(*r).front(), 0, ts});
      }
      // The same story days later no longer deserves an expansion.
      const std::int64_t stale = s->start + uniform_ts(rng_, 2 * 86400, 8 * 86400);
      if (stale <= c_.now_ts) w_.rank_samples.push_back({s->entity, event_ids(*s).front(), 0, stale});
      // Topical queries with the entity are not event searches.
      const std::string tq = s->entity + " " + pick(rng_, topics_[s->topic]);
      w_.rank_samples.push_back({tq, event_ids(*s).front(), 0, ts});
      const std::string pq = pick(rng_, topics_[s->topic]) + " " + pick(rng_, topics_[s->topic]);
      w_.rank_samples.push_back({pq, event_ids(*s).front(), 0, ts});
    }
  }

  void make_labeled() {
    const auto objs = wf_.take(200);
    for (std::size_t i = 0; i < c_.n_labeled; ++i) {
      const std::string e = pick(rng_, entities_);
      const std::size_t t = entity_topic_.at(e);
      if (i % 2 == 0) {
        TokenSeq toks{e, pick(rng_, trigger_words()), pick(rng_, objs), pick(rng_, objs)};
        if (coin(rng_, 0.5)) toks.push_back(pick(rng_, fillers_));
        w_.labeled.push_back({join_tokens(toks), true});
      } else {
        TokenSeq toks{e, pick(rng_, trigger_words()), pick(rng_, non_event_cues()), pick(rng_, topics_[t])};
        if (coin(rng_, 0.5)) toks.push_back(pick(rng_, non_event_cues()));
        toks.push_back(pick(rng_, topics_[t]));
        w_.labeled.push_back({join_tokens(toks), false});
      }
    }
  }

  void make_coverage() {
    std::exponential_distribution<double> lag(1.0 / 240.0);
    std::size_t k = 0;
    for (const auto& s : stories_) {
      if (!s.fresh) continue;
      const std::string id = "story" + std::to_string(k++);
      std::int64_t first = w_.headlines[s.outlets.front()].publish_ts;
      for (const std::size_t o : s.outlets) first = std::min(first, w_.headlines[o].publish_ts);
      w_.coverage_truth.push_back({id, first});
      if (coin(rng_, 0.1)) continue;  // never discovered
      for (const std::size_t o : s.outlets) {
        const auto delay = static_cast<std::int64_t>(20.0 + lag(rng_));
        w_.coverage_discoveries.push_back({id, w_.headlines[o].publish_ts + delay});
      }
    }
  }

  WorldConfig c_;
  std::mt19937_64 rng_;
  WordFactory wf_;
  World w_;
  DocumentCorpus corpus_;
  std::vector<std::vector<std::string>> topics_;
  std::vector<std::string> common_;
  std::vector<std::vector<std::string>> topic_entities_;
  std::vector<std::string> entities_;
  std::map<std::string, std::size_t> entity_topic_;
  std::vector<std::string> fillers_;
  std::vector<std::string> sites_;
  std::vector<std::string> fresh_entities_;
  std::vector<Story> stories_;
  std::size_t headline_counter_ = 0;
  std::size_t doc_counter_ = 0;
};

}  // namespace

World make_world(const WorldConfig& config) { return WorldBuilder(config).build(); }

void write_world(const World& w, const std::filesystem::path& dir) {
  std::vector<Json> recs;
  for (const auto& h : w.headlines) {
    recs.push_back({{"id", h.id}, {"title", h.title}, {"site", h.site}, {"page_type", h.page_type}, {"publish_ts", h.publish_ts}});
  }
  write_jsonl(dir / "headlines.jsonl", recs);
  auto write_clicks = [&](const std::vector<ClickRecord>& clicks, const char* name) {
    std::vector<Json> r;
    for (const auto& c : clicks) r.push_back({{"query", c.query}, {"doc_id", c.doc_id}, {"ts", c.ts}});
    write_jsonl(dir / name, r);
  };
  write_clicks(w.clicklog, "clicklog.jsonl");
  write_clicks(w.eval_clicklog, "eval_clicklog.jsonl");
  recs.clear();
  for (const auto& l : w.labeled) recs.push_back({{"title", l.title}, {"is_event", l.is_event}});
  write_jsonl(dir / "labeled.jsonl", recs);
  save_documents(dir / "corpus.jsonl", w.documents);
  recs.clear();
  for (const auto& s : w.rank_samples) {
    recs.push_back({{"query", s.query}, {"event_id", s.event_id}, {"label", s.label}, {"ts", s.ts}});
  }
  write_jsonl(dir / "ranksamples.jsonl", recs);
  recs.clear();
  for (const auto& g : w.gold) recs.push_back({{"title", g.title}, {"event", g.event}, {"topic", g.topic}});
  write_jsonl(dir / "title2eventphrase.jsonl", recs);
  recs.clear();
  for (const auto& t : w.coverage_truth) recs.push_back({{"event_id", t.event_id}, {"first_publish_ts", t.ts}});
  write_jsonl(dir / "coverage_truth.jsonl", recs);
  recs.clear();
  for (const auto& d : w.coverage_discoveries) recs.push_back({{"event_id", d.event_id}, {"discovered_ts", d.ts}});
  write_jsonl(dir / "coverage_discoveries.jsonl", recs);
  w.lexicon.save(dir / "lexicon");
}

}  // namespace eqe::synth
