#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tadbench/autodiff.hpp"
#include "tadbench/rng.hpp"
#include "tadbench/tensor.hpp"

namespace tad {

struct ModelConfig {
  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 64;
};

// Index of the largest element; ties resolve to the lowest index.
std::size_t argmax(const std::vector<double>& v);

// Mean-pooled bag-of-embeddings classifier with one tanh hidden layer.
//
// Parameters, in fixed order: embedding [V,d], w1 [d,h], b1 [1,h],
// w2 [h,C], b2 [1,C].  All forward passes build a fresh tape; the
// value-only paths (logits_value, predict, predict_proba, rank_choices)
// run the identical arithmetic without allocating nodes and agree with
// the tape path bit for bit.
class TextClassifier {
 public:
  TextClassifier(std::size_t vocab_size, std::size_t num_classes,
                 const ModelConfig& config, Rng& rng);

  // Logits node of shape [1,C] for one token sequence.
  ad::NodePtr forward(const std::vector<int>& tokens) const;

  // Same forward pass with `delta` (shape [L,d]) added to the looked-up
  // embedding rows.  Pass a leaf with requires_grad to collect d loss / d delta.
  // With delta == 0 the logits equal forward(tokens) exactly.
  ad::NodePtr forward_with_offset(const std::vector<int>& tokens,
                                  const ad::NodePtr& delta) const;

  std::vector<double> logits_value(const std::vector<int>& tokens) const;
  std::vector<double> predict_proba(const std::vector<int>& tokens) const;
  std::size_t predict(const std::vector<int>& tokens) const;

  // One score per choice; each choice is scored as context + SEP + choice
  // on a single-output head.  Requires num_classes == 1.
  std::vector<double> rank_choices(
      const std::vector<int>& context,
      const std::vector<std::vector<int>>& choices) const;

  // Looked-up embedding rows as values, shape [L,d].
  Tensor embedding_rows(const std::vector<int>& tokens) const;

  const std::vector<ad::NodePtr>& params() const { return params_; }
  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t num_classes() const { return num_classes_; }
  std::size_t embed_dim() const { return config_.embed_dim; }
  std::size_t hidden_dim() const { return config_.hidden_dim; }

  // Mean L2 norm over all embedding rows (TAVAT's per-token budget scale).
  double mean_embedding_norm() const;

  // FNV-1a over the raw bytes of every parameter, in parameter order.
  std::uint64_t param_hash() const;

  std::vector<Tensor> snapshot_params() const;
  void restore_params(const std::vector<Tensor>& snapshot);

  nlohmann::json to_checkpoint(std::uint64_t vocab_hash,
                               const nlohmann::json& meta) const;
  static TextClassifier from_checkpoint(const nlohmann::json& checkpoint);
  static std::uint64_t checkpoint_vocab_hash(const nlohmann::json& checkpoint);
  static nlohmann::json checkpoint_meta(const nlohmann::json& checkpoint);

 private:
  TextClassifier(std::size_t vocab_size, std::size_t num_classes,
                 const ModelConfig& config);

  const ad::NodePtr& embedding() const { return params_[0]; }
  const ad::NodePtr& w1() const { return params_[1]; }
  const ad::NodePtr& b1() const { return params_[2]; }
  const ad::NodePtr& w2() const { return params_[3]; }
  const ad::NodePtr& b2() const { return params_[4]; }

  void check_tokens(const std::vector<int>& tokens) const;
  std::vector<double> head_from_pooled(const std::vector<double>& pooled) const;

  std::size_t vocab_size_;
  std::size_t num_classes_;
  ModelConfig config_;
  std::vector<ad::NodePtr> params_;
};

}  // namespace tad
