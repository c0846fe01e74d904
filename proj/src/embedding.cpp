#include "eqe/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace eqe {

namespace {

std::uint64_t mix_hash(std::string_view a, std::string_view b) {
  std::uint64_t h = 1469598103934665603ull;
  auto feed = [&](std::string_view s) {
    for (const char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
  };
  feed(a);
  feed("\x1f");
  feed(b);
  return h;
}

double logsumexp(std::span<const double> x) {
  const double m = *std::max_element(x.begin(), x.end());
  double s = 0.0;
  for (const double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

}  // namespace

void EncoderGradients::add_row(std::size_t row, std::span<const double> g, double scale) {
  auto [it, inserted] = emb_rows.try_emplace(row, g.size(), 0.0);
  for (std::size_t k = 0; k < g.size(); ++k) it->second[k] += scale * g[k];
}

EncoderModel EncoderModel::build(const std::vector<TokenSeq>& corpus, const EncoderConfig& config) {
  if (config.dim == 0) throw std::invalid_argument("EncoderModel: dim must be positive");
  std::set<std::string> vocab;
  for (const auto& doc : corpus) vocab.insert(doc.begin(), doc.end());
  EncoderModel m;
  m.tokens_.push_back("<unk>");
  for (const auto& t : vocab) {
    m.vocab_.emplace(t, m.tokens_.size());
    m.tokens_.push_back(t);
  }
  m.order_buckets_ = config.order_buckets;
  const std::size_t d = config.dim;
  m.emb_ = Matrix(m.tokens_.size() + m.order_buckets_, d);
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, config.init_scale / std::sqrt(static_cast<double>(d)));
  for (double& x : m.emb_.data()) x = normal(rng);
  m.proj_ = Matrix(d, d);
  for (std::size_t i = 0; i < d; ++i) m.proj_(i, i) = 1.0;
  return m;
}

std::size_t EncoderModel::row_of(const std::string& token) const {
  const auto it = vocab_.find(token);
  return it == vocab_.end() ? kUnkRow : it->second;
}

std::vector<std::size_t> EncoderModel::feature_rows(const TokenSeq& tokens) const {
  std::vector<std::size_t> rows;
  if (tokens.empty()) {
    rows.push_back(kUnkRow);
    return rows;
  }
  rows.reserve(tokens.size() * 2);
  for (const auto& t : tokens) rows.push_back(row_of(t));
  if (order_buckets_ > 0) {
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
      rows.push_back(tokens_.size() + mix_hash(tokens[i], tokens[i + 1]) % order_buckets_);
    }
  }
  return rows;
}

EncodeTrace EncoderModel::trace(const TokenSeq& tokens) const {
  EncodeTrace tr;
  const std::size_t d = dim();
  tr.rows = feature_rows(tokens);
  tr.pooled.assign(d, 0.0);
  for (const std::size_t r : tr.rows) {
    const auto row = emb_.row(r);
    for (std::size_t k = 0; k < d; ++k) tr.pooled[k] += row[k];
  }
  const double inv = 1.0 / static_cast<double>(tr.rows.size());
  for (double& x : tr.pooled) x *= inv;
  tr.projected.assign(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) tr.projected[i] = dot(proj_.row(i), tr.pooled);
  tr.unit = tr.projected;
  tr.norm = normalize_inplace(tr.unit);
  return tr;
}

Vec EncoderModel::encode(const TokenSeq& tokens) const { return trace(tokens).unit; }

void EncoderModel::backprop(const EncodeTrace& tr, std::span<const double> grad_unit,
                            EncoderGradients& out) const {
  if (tr.norm == 0.0) return;
  const std::size_t d = dim();
  // d unit / d projected = (I - u u^T) / ||z||
  const double ug = dot(tr.unit, grad_unit);
  Vec gz(d);
  for (std::size_t k = 0; k < d; ++k) gz[k] = (grad_unit[k] - tr.unit[k] * ug) / tr.norm;
  if (out.proj.rows() != d) out.proj = Matrix(d, d);
  Vec gh(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    auto prow = out.proj.row(i);
    const auto wrow = proj_.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      prow[j] += gz[i] * tr.pooled[j];
      gh[j] += wrow[j] * gz[i];
    }
  }
  const double inv = 1.0 / static_cast<double>(tr.rows.size());
  for (const std::size_t r : tr.rows) out.add_row(r, gh, inv);
}

void EncoderModel::apply(const EncoderGradients& grads, double scale) {
  for (const auto& [r, g] : grads.emb_rows) {
    auto row = emb_.row(r);
    for (std::size_t k = 0; k < g.size(); ++k) row[k] -= scale * g[k];
  }
  if (grads.proj.rows() == proj_.rows()) {
    auto& p = proj_.data();
    const auto& gp = grads.proj.data();
    for (std::size_t k = 0; k < p.size(); ++k) p[k] -= scale * gp[k];
  }
}

EncoderGradients EncoderModel::zero_gradients() const {
  EncoderGradients g;
  g.proj = Matrix(dim(), dim());
  return g;
}

Json EncoderModel::to_json() const {
  return Json{{"format", "eqe-encoder"},
              {"version", 1},
              {"dim", dim()},
              {"order_buckets", order_buckets_},
              {"tokens", tokens_},
              {"emb", emb_.data()},
              {"proj", proj_.data()}};
}

EncoderModel EncoderModel::from_json(const Json& doc) {
  try {
    if (doc.at("format") != "eqe-encoder" || doc.at("version") != 1) {
      throw DataError("not an encoder model (format eqe-encoder, version 1)");
    }
    EncoderModel m;
    const auto d = doc.at("dim").get<std::size_t>();
    m.order_buckets_ = doc.at("order_buckets").get<std::size_t>();
    m.tokens_ = doc.at("tokens").get<std::vector<std::string>>();
    if (m.tokens_.empty()) throw DataError("encoder model without UNK row");
    for (std::size_t i = 1; i < m.tokens_.size(); ++i) m.vocab_.emplace(m.tokens_[i], i);
    m.emb_ = Matrix(m.tokens_.size() + m.order_buckets_, d);
    m.emb_.data() = doc.at("emb").get<std::vector<double>>();
    m.proj_ = Matrix(d, d);
    m.proj_.data() = doc.at("proj").get<std::vector<double>>();
    if (m.emb_.data().size() != m.emb_.rows() * d || m.proj_.data().size() != d * d) {
      throw DataError("encoder model: parameter sizes do not match dim");
    }
    return m;
  } catch (const Json::exception& e) {
    throw DataError(std::string("encoder model: ") + e.what());
  }
}

void EncoderModel::save(const std::filesystem::path& path) const { write_text_file(path, to_json().dump() + "\n"); }

EncoderModel EncoderModel::load(const std::filesystem::path& path) { return from_json(read_json_file(path)); }

double info_nce_from_embeddings(const std::vector<Vec>& anchors, const std::vector<Vec>& positives, double tau) {
  if (tau <= 0.0) throw std::invalid_argument("info_nce: tau must be positive");
  if (anchors.size() != positives.size() || anchors.empty()) {
    throw std::invalid_argument("info_nce: need N >= 1 aligned pairs");
  }
  const std::size_t n = anchors.size();
  double loss = 0.0;
  Vec logits(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double cos = dot(anchors[i], positives[j]) / (l2_norm(anchors[i]) * l2_norm(positives[j]));
      logits[j] = cos / tau;
    }
    loss += logsumexp(logits) - logits[i];
  }
  return loss;
}

double contrastive_loss_and_grad(const EncoderModel& anchor_model, const EncoderModel& key_model,
                                 const CLBatch& batch, EncoderGradients* anchor_grad,
                                 EncoderGradients* key_grad) {
  const std::size_t n = batch.anchors.size();
  if (n == 0 || batch.positives.size() != n) throw std::invalid_argument("CLBatch: need N >= 1 aligned pairs");
  if (batch.tau <= 0.0) throw std::invalid_argument("CLBatch: tau must be positive");
  if (!batch.extra_negatives.empty() && batch.extra_negatives.size() != n) {
    throw std::invalid_argument("CLBatch: extra_negatives must be empty or one list per anchor");
  }
  const double inv_tau = 1.0 / batch.tau;
  const std::size_t d = anchor_model.dim();

  std::vector<EncodeTrace> a_tr, p_tr;
  a_tr.reserve(n);
  p_tr.reserve(n);
  for (const auto& t : batch.anchors) a_tr.push_back(anchor_model.trace(t));
  for (const auto& t : batch.positives) p_tr.push_back(key_model.trace(t));
  std::vector<std::vector<EncodeTrace>> h_tr(n);
  if (!batch.extra_negatives.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& t : batch.extra_negatives[i]) h_tr[i].push_back(key_model.trace(t));
    }
  }

  const bool want_grad = anchor_grad != nullptr || key_grad != nullptr;
  std::vector<Vec> ga(n, Vec(d, 0.0)), gp(n, Vec(d, 0.0));
  std::vector<std::vector<Vec>> gh(n);

  double loss = 0.0;
  Vec logits;
  for (std::size_t i = 0; i < n; ++i) {
    // Candidate order: in-batch positives (or only i's own), then i's extra negatives.
    std::vector<const EncodeTrace*> keys;
    if (batch.in_batch_negatives) {
      for (auto& t : p_tr) keys.push_back(&t);
    } else {
      keys.push_back(&p_tr[i]);
    }
    const std::size_t self = batch.in_batch_negatives ? i : 0;
    const std::size_t n_batch_keys = keys.size();
    for (auto& t : h_tr[i]) keys.push_back(&t);

    logits.assign(keys.size(), 0.0);
    for (std::size_t j = 0; j < keys.size(); ++j) logits[j] = dot(a_tr[i].unit, keys[j]->unit) * inv_tau;
    const double lse = logsumexp(logits);
    loss += lse - logits[self];
    if (!want_grad) continue;

    gh[i].assign(h_tr[i].size(), Vec(d, 0.0));
    for (std::size_t j = 0; j < keys.size(); ++j) {
      const double coef = (std::exp(logits[j] - lse) - (j == self ? 1.0 : 0.0)) * inv_tau;
      if (coef == 0.0) continue;
      const auto& kv = keys[j]->unit;
      for (std::size_t k = 0; k < d; ++k) ga[i][k] += coef * kv[k];
      Vec& target = j < n_batch_keys ? gp[batch.in_batch_negatives ? j : i] : gh[i][j - n_batch_keys];
      for (std::size_t k = 0; k < d; ++k) target[k] += coef * a_tr[i].unit[k];
    }
  }

  if (anchor_grad != nullptr) {
    for (std::size_t i = 0; i < n; ++i) anchor_model.backprop(a_tr[i], ga[i], *anchor_grad);
  }
  if (key_grad != nullptr) {
    for (std::size_t i = 0; i < n; ++i) key_model.backprop(p_tr[i], gp[i], *key_grad);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < h_tr[i].size(); ++k) key_model.backprop(h_tr[i][k], gh[i][k], *key_grad);
    }
  }
  return loss;
}

double info_nce_loss(const EncoderModel& model, const CLBatch& batch) {
  return contrastive_loss_and_grad(model, model, batch, nullptr, nullptr);
}

EncoderGradients info_nce_backward(const EncoderModel& model, const CLBatch& batch) {
  EncoderGradients g = model.zero_gradients();
  contrastive_loss_and_grad(model, model, batch, &g, &g);
  return g;
}

std::vector<double> run_contrastive_training(EncoderModel& anchor_model, EncoderModel* key_model,
                                             std::span<const TokenPair> pairs, const TrainConfig& config,
                                             const NegativeSampler& negatives, bool in_batch_negatives) {
  if (pairs.empty()) throw std::invalid_argument("contrastive training: need at least one pair");
  if (config.batch_size == 0) throw std::invalid_argument("contrastive training: batch_size must be positive");
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> curve;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle) std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      CLBatch batch;
      batch.tau = config.tau;
      batch.in_batch_negatives = in_batch_negatives;
      for (std::size_t k = start; k < end; ++k) {
        batch.anchors.push_back(pairs[order[k]].first);
        batch.positives.push_back(pairs[order[k]].second);
      }
      if (negatives) {
        for (std::size_t k = start; k < end; ++k) batch.extra_negatives.push_back(negatives(order[k], rng));
      }
      const double scale = config.lr / static_cast<double>(end - start);
      if (key_model == nullptr) {
        EncoderGradients g = anchor_model.zero_gradients();
        epoch_loss += contrastive_loss_and_grad(anchor_model, anchor_model, batch, &g, &g);
        anchor_model.apply(g, scale);
      } else {
        EncoderGradients ga = anchor_model.zero_gradients();
        EncoderGradients gk = key_model->zero_gradients();
        epoch_loss += contrastive_loss_and_grad(anchor_model, *key_model, batch, &ga, &gk);
        anchor_model.apply(ga, scale);
        key_model->apply(gk, scale);
      }
    }
    curve.push_back(epoch_loss / static_cast<double>(pairs.size()));
  }
  return curve;
}

TrainResult train_contrastive(EncoderModel model, std::span<const TokenPair> pairs, const TrainConfig& config) {
  auto curve = run_contrastive_training(model, nullptr, pairs, config);
  return {std::move(model), std::move(curve)};
}

AlignUniform alignment_and_uniformity(const std::vector<std::pair<Vec, Vec>>& pairs, const std::vector<Vec>& sample) {
  if (sample.size() < 2) throw std::invalid_argument("alignment_and_uniformity: need >= 2 sample texts");
  AlignUniform out;
  if (!pairs.empty()) {
    double s = 0.0;
    for (const auto& [a, b] : pairs) s += squared_distance(a, b);
    out.alignment = s / static_cast<double>(pairs.size());
  }
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    for (std::size_t j = i + 1; j < sample.size(); ++j) {
      acc += std::exp(-2.0 * squared_distance(sample[i], sample[j]));
      ++count;
    }
  }
  out.uniformity = std::log(acc / static_cast<double>(count));
  return out;
}

AlignUniform alignment_and_uniformity(const EncoderModel& model, std::span<const TokenPair> eval_pairs,
                                      std::span<const TokenSeq> sample) {
  std::vector<std::pair<Vec, Vec>> pairs;
  for (const auto& [a, b] : eval_pairs) pairs.emplace_back(model.encode(a), model.encode(b));
  std::vector<Vec> vecs;
  for (const auto& s : sample) vecs.push_back(model.encode(s));
  return alignment_and_uniformity(pairs, vecs);
}

std::vector<std::array<double, 2>> pca_project_2d(const std::vector<Vec>& vectors, std::uint64_t seed) {
  if (vectors.size() < 2) throw std::invalid_argument("pca_project_2d: need >= 2 vectors");
  const std::size_t n = vectors.size();
  const std::size_t d = vectors.front().size();
  Vec mean(d, 0.0);
  for (const auto& v : vectors) {
    if (v.size() != d) throw std::invalid_argument("pca_project_2d: ragged input");
    for (std::size_t k = 0; k < d; ++k) mean[k] += v[k];
  }
  for (double& m : mean) m /= static_cast<double>(n);
  std::vector<Vec> x(n, Vec(d));
  double total_var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      x[i][k] = vectors[i][k] - mean[k];
      total_var += x[i][k] * x[i][k];
    }
  }
  std::vector<std::array<double, 2>> out(n, {0.0, 0.0});
  if (total_var <= 1e-24) return out;

  auto cov_times = [&](const Vec& v) {
    Vec r(d, 0.0);
    for (const auto& xi : x) {
      const double p = dot(xi, v);
      for (std::size_t k = 0; k < d; ++k) r[k] += p * xi[k];
    }
    for (double& e : r) e /= static_cast<double>(n);
    return r;
  };
  auto orthogonalize = [&](Vec& v, const std::vector<Vec>& basis) {
    for (const auto& b : basis) {
      const double p = dot(v, b);
      for (std::size_t k = 0; k < d; ++k) v[k] -= p * b[k];
    }
  };

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vec> comps;
  for (int c = 0; c < 2 && static_cast<std::size_t>(c) < d; ++c) {
    Vec v(d);
    for (double& e : v) e = normal(rng);
    orthogonalize(v, comps);
    if (normalize_inplace(v) == 0.0) break;
    for (int it = 0; it < 5000; ++it) {
      Vec nv = cov_times(v);
      orthogonalize(nv, comps);
      if (normalize_inplace(nv) == 0.0) {
        v.assign(d, 0.0);  // no variance left in the complement
        break;
      }
      const double delta = squared_distance(nv, v);
      v = std::move(nv);
      if (delta < 1e-26) break;
    }
    // Sign convention: largest-magnitude coordinate positive.
    const auto big = std::max_element(v.begin(), v.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    if (*big < 0) {
      for (double& e : v) e = -e;
    }
    comps.push_back(std::move(v));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < comps.size(); ++c) out[i][c] = dot(x[i], comps[c]);
  }
  return out;
}

double embed_score(const EncoderModel& model, const TokenSeq& a, const TokenSeq& b) {
  return dot(model.encode(a), model.encode(b));
}

}  // namespace eqe
