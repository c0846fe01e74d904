#include "eqe/config.hpp"

#include <cmath>
#include <limits>
#include <type_traits>

#include "eqe/jsonl.hpp"

namespace eqe {

namespace {

// One list of (JSON pointer, field) bindings drives both directions.
template <typename Visitor>
void visit_fields(EqeConfig& c, Visitor&& v) {
  v("/seed", c.seed);
  v("/bm25/k1", c.bm25.k1);
  v("/bm25/b", c.bm25.b);
  v("/coarse/min_tokens", c.coarse.min_tokens);
  v("/coarse/max_tokens", c.coarse.max_tokens);
  v("/coarse/max_delimiters", c.coarse.max_delimiters);
  v("/coarse/max_triggers", c.coarse.max_triggers);
  v("/fine/epochs", c.fine.epochs);
  v("/fine/lr", c.fine.lr);
  v("/fine/threshold", c.fine.threshold);
  v("/fine/seed", c.fine.seed);
  v("/fine/hash_dim", c.fine.features.hash_dim);
  v("/pairs/window", c.pairs.window);
  v("/pair_filter/max_jaccard", c.pair_filter.max_jaccard);
  v("/pair_filter/min_embed", c.pair_filter.min_embed);
  v("/reformulate/window", c.reformulate.window);
  v("/keyword_template", c.keyword_template);
  v("/encoder/dim", c.encoder.dim);
  v("/encoder/order_buckets", c.encoder.order_buckets);
  v("/encoder/init_scale", c.encoder.init_scale);
  v("/encoder/seed", c.encoder.seed);
  v("/stage1/lr", c.stage1.lr);
  v("/stage1/epochs", c.stage1.epochs);
  v("/stage1/batch_size", c.stage1.batch_size);
  v("/stage1/tau", c.stage1.tau);
  v("/stage1/seed", c.stage1.seed);
  v("/stage1/shuffle", c.stage1.shuffle);
  v("/stage2/lr", c.stage2.train.lr);
  v("/stage2/epochs", c.stage2.train.epochs);
  v("/stage2/batch_size", c.stage2.train.batch_size);
  v("/stage2/tau", c.stage2.train.tau);
  v("/stage2/seed", c.stage2.train.seed);
  v("/stage2/shuffle", c.stage2.train.shuffle);
  v("/stage2/max_hard", c.stage2.max_hard);
  v("/stage2/keep_in_batch", c.stage2.keep_in_batch);
  v("/stage2/sample_hard", c.stage2.sample_hard);
  v("/hard_negatives/lower_pct", c.hard_negatives.band.lower_pct);
  v("/hard_negatives/upper_pct", c.hard_negatives.band.upper_pct);
  v("/hard_negatives/pool_k", c.hard_negatives.pool_k);
  v("/ivf/enabled", c.ivf.enabled);
  v("/ivf/n_lists", c.ivf.n_lists);
  v("/ivf/kmeans_iters", c.ivf.kmeans_iters);
  v("/ivf/nprobe", c.ivf.nprobe);
  v("/ivf/seed", c.ivf.seed);
  v("/event_cluster_theta", c.event_cluster_theta);
  v("/gbdt/n_trees", c.gbdt.n_trees);
  v("/gbdt/max_depth", c.gbdt.max_depth);
  v("/gbdt/lr", c.gbdt.lr);
  v("/gbdt/min_leaf", c.gbdt.min_leaf);
  v("/baseline/alpha", c.baseline.graph.alpha);
  v("/baseline/window_days", c.baseline.graph.window_days);
  v("/baseline/count_multiplicity", c.baseline.graph.count_multiplicity);
  v("/baseline/n_iters", c.baseline.n_iters);
  v("/baseline/theta", c.baseline.theta);
  v("/cache/soft_ttl", c.cache.soft_ttl);
  v("/cache/hard_ttl", c.cache.hard_ttl);
  v("/cache/capacity", c.cache.capacity);
  v("/expander/candidate_k", c.expander.candidate_k);
  v("/eval/k_list", c.eval.k_list);
  v("/eval/retrieval_k", c.eval.retrieval_k);
  v("/eval/coverage_checkpoints_min", c.eval.coverage_checkpoints_min);
  v("/serve/host", c.serve.host);
  v("/serve/port", c.serve.port);
}

struct Writer {
  Json& doc;
  template <typename T>
  void operator()(const char* path, const T& value) {
    doc[Json::json_pointer(path)] = value;
  }
};

struct Reader {
  const Json& doc;
  template <typename T>
  void operator()(const char* path, T& value) {
    const Json::json_pointer ptr(path);
    if (!doc.contains(ptr)) return;
    const Json& j = doc.at(ptr);
    bool ok;
    if constexpr (std::is_same_v<T, bool>) {
      ok = j.is_boolean();
    } else if constexpr (std::is_same_v<T, std::string>) {
      ok = j.is_string();
    } else if constexpr (std::is_unsigned_v<T>) {
      ok = j.is_number_unsigned();
    } else if constexpr (std::is_integral_v<T>) {
      ok = j.is_number_integer();
    } else if constexpr (std::is_floating_point_v<T>) {
      ok = j.is_number();
    } else {
      ok = j.is_array();
      if (ok) {
        for (const auto& x : j) ok = ok && (std::is_unsigned_v<typename T::value_type> ? x.is_number_unsigned() : x.is_number());
      }
    }
    if (!ok) throw DataError(std::string("config: wrong type for ") + path);
    value = j.get<T>();
  }
};

void check_known_keys(const Json& user, const Json& defaults, const std::string& prefix) {
  if (!user.is_object()) throw DataError("config: " + (prefix.empty() ? std::string("document") : prefix) + " must be an object");
  for (const auto& [key, val] : user.items()) {
    const std::string path = prefix + "/" + key;
    if (!defaults.contains(key)) throw DataError("config: unknown key " + path);
    if (defaults[key].is_object()) check_known_keys(val, defaults[key], path);
  }
}

}  // namespace

Json EqeConfig::to_json() const {
  Json doc = Json::object();
  EqeConfig copy = *this;
  visit_fields(copy, Writer{doc});
  doc["hard_negatives"]["exclude_relevant"] = hard_negatives.exclude_relevant.has_value();
  doc["expander"]["mode"] = expander.mode == SearchMode::ivf ? "ivf" : "exact";
  doc["expander"]["min_rank_score"] =
      std::isfinite(expander.min_rank_score) ? Json(expander.min_rank_score) : Json(nullptr);
  return doc;
}

EqeConfig EqeConfig::from_json(const Json& doc) {
  EqeConfig c;
  check_known_keys(doc, c.to_json(), "");
  visit_fields(c, Reader{doc});
  if (doc.contains("hard_negatives") && doc["hard_negatives"].contains("exclude_relevant")) {
    const Json& j = doc["hard_negatives"]["exclude_relevant"];
    if (!j.is_boolean()) throw DataError("config: wrong type for /hard_negatives/exclude_relevant");
    c.hard_negatives.exclude_relevant.reset();
    if (j.get<bool>()) c.hard_negatives.exclude_relevant = c.pair_filter;
  }
  if (doc.contains("expander")) {
    const Json& e = doc["expander"];
    if (e.contains("mode")) {
      if (e["mode"] == "exact") {
        c.expander.mode = SearchMode::exact;
      } else if (e["mode"] == "ivf") {
        c.expander.mode = SearchMode::ivf;
      } else {
        throw DataError("config: /expander/mode must be \"exact\" or \"ivf\"");
      }
    }
    if (e.contains("min_rank_score")) {
      const Json& m = e["min_rank_score"];
      if (m.is_null()) {
        c.expander.min_rank_score = -std::numeric_limits<double>::infinity();
      } else if (m.is_number()) {
        c.expander.min_rank_score = m.get<double>();
      } else {
        throw DataError("config: wrong type for /expander/min_rank_score");
      }
    }
  }
  if (c.cache.soft_ttl > c.cache.hard_ttl) throw DataError("config: cache.soft_ttl exceeds cache.hard_ttl");
  return c;
}

EqeConfig EqeConfig::load(const std::filesystem::path& path) { return from_json(read_json_file(path)); }

void EqeConfig::reseed(std::uint64_t s) {
  seed = s;
  fine.seed = s + 1;
  encoder.seed = s + 2;
  stage1.seed = s + 3;
  stage2.train.seed = s + 4;
  ivf.seed = s + 5;
}

}  // namespace eqe
