#pragma once

// Pre-norm transformer encoder with [CLS] pooling, a softmax classifier and a
// contrastive projection head.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cadv/tensor.hpp"
#include "cadv/textprep.hpp"

namespace cadv {

class Rng;

struct ModelConfig {
  std::size_t vocab_size = 0;  // d_v
  std::size_t d_h = 64;
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t d_ff = 128;
  std::size_t max_len = 64;
  std::size_t n_classes = 2;
  std::size_t d_proj = 32;
  std::size_t proj_layers = 2;  // linear layers in the projection head
  double dropout = 0.0;
  double embed_init_std = 0.02;

  // Throws ConfigError on any violated invariant.
  void validate() const;
};

struct LayerParams {
  Tensor ln1_gain, ln1_shift;
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor ln2_gain, ln2_shift;
  Tensor w1, b1, w2, b2;
};

struct ModelParams {
  Tensor embedding;  // E, vocab_size × d_h
  Tensor position;   // max_len × d_h
  std::vector<LayerParams> layers;
  Tensor final_gain, final_shift;
  Tensor classifier_w, classifier_b;
  std::vector<Tensor> proj_w, proj_b;

  // Stable names, in a fixed order; the tensors alias the model's storage.
  std::vector<std::pair<std::string, Tensor>> named() const;
  std::vector<Tensor> all() const;
  // Deep copy with fresh storage and no gradients.
  ModelParams clone() const;
  void zero_grad();
};

// Linear weights ~ U(-1/√fan_in, 1/√fan_in); embedding tables uniform with
// standard deviation embed_init_std; biases and norm shifts zero, norm gains one.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

// A padded minibatch. seq_len is the longest attention_len in the batch:
// positions past that are PAD everywhere and are masked out of attention, so
// dropping them leaves every non-PAD output unchanged.
struct Batch {
  std::size_t seq_len = 0;
  std::vector<int> ids;      // size() × seq_len, row-major
  std::vector<int> lengths;  // attention_len per example
  std::vector<int> labels;
  std::size_t size() const { return lengths.size(); }
};

Batch make_batch(std::span<const TokenizedExample> examples);
Batch make_batch(std::span<const TokenizedExample> examples, std::span<const std::size_t> indices);

struct EncoderOutput {
  Tensor h_cls;   // N × d_h
  Tensor logits;  // N × C, pre-softmax
  Tensor probs;   // N × C
};

// `embedding` replaces params.embedding when given (used for the perturbed
// pass). `dropout_rng` enables dropout when config.dropout > 0.
EncoderOutput forward(const ModelParams& params, const ModelConfig& config, const Batch& batch,
                      const Tensor* embedding = nullptr, Rng* dropout_rng = nullptr);

// Same network, starting from token embedding rows (N·seq_len × d_h, without
// positions). Used for attribution along an embedding path.
EncoderOutput forward_embedded(const ModelParams& params, const ModelConfig& config, const Tensor& token_rows,
                               std::span<const int> lengths, std::size_t seq_len, Rng* dropout_rng = nullptr);

// Projection head, linear → GELU → … → linear; output is not normalized.
Tensor project(const ModelParams& params, const Tensor& h_cls);

// Argmax of each probability row.
std::vector<int> predict(const Tensor& probs);

}  // namespace cadv
