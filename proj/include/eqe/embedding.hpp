#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "eqe/common.hpp"
#include "eqe/jsonl.hpp"
#include "eqe/textcore.hpp"

namespace eqe {

struct EncoderConfig {
  std::size_t dim = 64;
  // Hashed adjacent-token buckets mixed into the mean pool. 0 keeps the
  // encoder a pure bag of tokens (order-free).
  std::size_t order_buckets = 0;
  double init_scale = 1.0;
  std::uint64_t seed = 17;
};

/// Parameter gradients. Embedding rows are sparse (only rows on a data path
/// appear).
struct EncoderGradients {
  std::map<std::size_t, Vec> emb_rows;
  Matrix proj;

  void add_row(std::size_t row, std::span<const double> g, double scale);
};

/// Forward intermediates of one encode call, kept for backprop.
struct EncodeTrace {
  std::vector<std::size_t> rows;  // feature rows averaged into `pooled`
  Vec pooled;
  Vec projected;
  double norm = 0.0;
  Vec unit;
};

/// Mean-pooled token embeddings -> linear projection -> L2 normalisation.
/// Row 0 is the UNK row, rows 1..|V| the vocabulary in sorted order, then
/// `order_buckets` hashed bigram rows.
class EncoderModel {
 public:
  static constexpr std::size_t kUnkRow = 0;

  EncoderModel() = default;

  /// Vocabulary = every token of `corpus` (min frequency 1). Embedding rows
  /// ~ N(0, init_scale^2 / dim), projection = identity.
  static EncoderModel build(const std::vector<TokenSeq>& corpus, const EncoderConfig& config = {});

  std::size_t dim() const { return proj_.rows(); }
  std::size_t vocab_size() const { return tokens_.size(); }  // includes UNK
  std::size_t order_buckets() const { return order_buckets_; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t row_of(const std::string& token) const;

  std::vector<std::size_t> feature_rows(const TokenSeq& tokens) const;
  EncodeTrace trace(const TokenSeq& tokens) const;
  Vec encode(const TokenSeq& tokens) const;
  Vec encode(std::string_view text) const { return encode(tokenize(text)); }

  /// Accumulates d(loss)/d(params) given d(loss)/d(unit output).
  void backprop(const EncodeTrace& tr, std::span<const double> grad_unit, EncoderGradients& out) const;

  /// params -= scale * grads
  void apply(const EncoderGradients& grads, double scale);
  EncoderGradients zero_gradients() const;

  Matrix& emb() { return emb_; }
  const Matrix& emb() const { return emb_; }
  Matrix& proj() { return proj_; }
  const Matrix& proj() const { return proj_; }

  Json to_json() const;
  static EncoderModel from_json(const Json& doc);
  void save(const std::filesystem::path& path) const;
  static EncoderModel load(const std::filesystem::path& path);

  bool operator==(const EncoderModel& o) const {
    return tokens_ == o.tokens_ && order_buckets_ == o.order_buckets_ && emb_ == o.emb_ && proj_ == o.proj_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> vocab_;
  std::size_t order_buckets_ = 0;
  Matrix emb_;
  Matrix proj_;
};

/// One contrastive mini-batch. Anchor i's softmax runs over the in-batch
/// positives (when enabled) plus its own extra negatives.
struct CLBatch {
  std::vector<TokenSeq> anchors;
  std::vector<TokenSeq> positives;
  std::vector<std::vector<TokenSeq>> extra_negatives;  // empty, or one list per anchor
  double tau = 0.05;
  bool in_batch_negatives = true;
};

/// -sum_i log softmax_i(i) over cosine / tau, computed on given unit
/// vectors (rows). Max-subtracted for stability.
double info_nce_from_embeddings(const std::vector<Vec>& anchors, const std::vector<Vec>& positives,
                                double tau);

double info_nce_loss(const EncoderModel& model, const CLBatch& batch);

/// Analytic gradient of info_nce_loss with respect to every parameter.
EncoderGradients info_nce_backward(const EncoderModel& model, const CLBatch& batch);

/// Loss and gradients for a (possibly) two-tower setup: anchors go through
/// `anchor_model`, positives and negatives through `key_model`. Passing the
/// same model and the same gradient sink for both sides gives the shared case.
double contrastive_loss_and_grad(const EncoderModel& anchor_model, const EncoderModel& key_model,
                                 const CLBatch& batch, EncoderGradients* anchor_grad,
                                 EncoderGradients* key_grad);

struct TrainConfig {
  double lr = 0.5;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double tau = 0.05;
  std::uint64_t seed = 13;
  bool shuffle = true;
};

using TokenPair = std::pair<TokenSeq, TokenSeq>;

/// Supplies extra negatives for pair `index` of the training set.
using NegativeSampler = std::function<std::vector<TokenSeq>(std::size_t index, std::mt19937_64& rng)>;

/// Mini-batch SGD on the mean per-anchor contrastive loss. `key_model` may
/// be null (shared parameters). Returns the mean per-anchor loss of each
/// epoch, measured on the fly.
std::vector<double> run_contrastive_training(EncoderModel& anchor_model, EncoderModel* key_model,
                                             std::span<const TokenPair> pairs, const TrainConfig& config,
                                             const NegativeSampler& negatives = {},
                                             bool in_batch_negatives = true);

struct TrainResult {
  EncoderModel model;
  std::vector<double> loss_curve;
};

TrainResult train_contrastive(EncoderModel model, std::span<const TokenPair> pairs, const TrainConfig& config);

struct AlignUniform {
  double alignment = 0.0;
  double uniformity = 0.0;
};

/// alignment = mean ||e - e+||^2 over pairs; uniformity = log of the mean of
/// exp(-2 ||a - b||^2) over distinct sample pairs. Needs >= 2 samples.
AlignUniform alignment_and_uniformity(const EncoderModel& model, std::span<const TokenPair> eval_pairs,
                                      std::span<const TokenSeq> sample);
AlignUniform alignment_and_uniformity(const std::vector<std::pair<Vec, Vec>>& pairs,
                                      const std::vector<Vec>& sample);

/// Projection onto the top two principal components (power iteration with
/// orthogonal deflation, seeded start). Zero variance maps everything to 0.
std::vector<std::array<double, 2>> pca_project_2d(const std::vector<Vec>& vectors, std::uint64_t seed = 1);

/// cosine(encode(a), encode(b))
double embed_score(const EncoderModel& model, const TokenSeq& a, const TokenSeq& b);

}  // namespace eqe
