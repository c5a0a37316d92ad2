#include "cadv/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "cadv/error.hpp"
#include "cadv/ops.hpp"
#include "cadv/rng.hpp"

namespace cadv {

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(vocab_size, "vocab_size");
  positive(d_h, "d_h");
  positive(n_layers, "n_layers");
  positive(n_heads, "n_heads");
  positive(d_ff, "d_ff");
  positive(n_classes, "n_classes");
  positive(d_proj, "d_proj");
  positive(proj_layers, "proj_layers");
  if (max_len < 3) throw ConfigError("max_len must be at least 3");
  if (d_h % n_heads != 0) {
    throw ConfigError("d_h (" + std::to_string(d_h) + ") must be divisible by n_heads (" + std::to_string(n_heads) + ")");
  }
  if (d_proj > d_h) throw ConfigError("d_proj must not exceed d_h");
  if (vocab_size < 4) throw ConfigError("vocab_size must cover the four reserved tokens");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0, 1)");
  if (!(embed_init_std > 0.0)) throw ConfigError("embed_init_std must be positive");
}

std::vector<std::pair<std::string, Tensor>> ModelParams::named() const {
  std::vector<std::pair<std::string, Tensor>> out;
  out.emplace_back("embedding", embedding);
  out.emplace_back("position", position);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const std::string p = "layers." + std::to_string(i) + ".";
    out.emplace_back(p + "ln1.gain", l.ln1_gain);
    out.emplace_back(p + "ln1.shift", l.ln1_shift);
    out.emplace_back(p + "attn.wq", l.wq);
    out.emplace_back(p + "attn.bq", l.bq);
    out.emplace_back(p + "attn.wk", l.wk);
    out.emplace_back(p + "attn.bk", l.bk);
    out.emplace_back(p + "attn.wv", l.wv);
    out.emplace_back(p + "attn.bv", l.bv);
    out.emplace_back(p + "attn.wo", l.wo);
    out.emplace_back(p + "attn.bo", l.bo);
    out.emplace_back(p + "ln2.gain", l.ln2_gain);
    out.emplace_back(p + "ln2.shift", l.ln2_shift);
    out.emplace_back(p + "ffn.w1", l.w1);
    out.emplace_back(p + "ffn.b1", l.b1);
    out.emplace_back(p + "ffn.w2", l.w2);
    out.emplace_back(p + "ffn.b2", l.b2);
  }
  out.emplace_back("final_norm.gain", final_gain);
  out.emplace_back("final_norm.shift", final_shift);
  out.emplace_back("classifier.weight", classifier_w);
  out.emplace_back("classifier.bias", classifier_b);
  for (std::size_t i = 0; i < proj_w.size(); ++i) {
    out.emplace_back("projection." + std::to_string(i) + ".weight", proj_w[i]);
    out.emplace_back("projection." + std::to_string(i) + ".bias", proj_b[i]);
  }
  return out;
}

std::vector<Tensor> ModelParams::all() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named()) out.push_back(t);
  return out;
}

ModelParams ModelParams::clone() const {
  auto c = [](const Tensor& t) { return Tensor::from(t.shape(), {t.data().begin(), t.data().end()}, true); };
  ModelParams out;
  out.embedding = c(embedding);
  out.position = c(position);
  for (const auto& l : layers) {
    out.layers.push_back({c(l.ln1_gain), c(l.ln1_shift), c(l.wq), c(l.bq), c(l.wk), c(l.bk), c(l.wv), c(l.bv),
                          c(l.wo), c(l.bo), c(l.ln2_gain), c(l.ln2_shift), c(l.w1), c(l.b1), c(l.w2), c(l.b2)});
  }
  out.final_gain = c(final_gain);
  out.final_shift = c(final_shift);
  out.classifier_w = c(classifier_w);
  out.classifier_b = c(classifier_b);
  for (const auto& w : proj_w) out.proj_w.push_back(c(w));
  for (const auto& b : proj_b) out.proj_b.push_back(c(b));
  return out;
}

void ModelParams::zero_grad() {
  for (auto& t : all()) t.zero_grad();
}

namespace {

Tensor uniform_tensor(Shape shape, double bound, Rng& rng) {
  std::vector<double> values(numel(shape));
  for (double& v : values) v = rng.uniform(-bound, bound);
  return Tensor::from(std::move(shape), std::move(values), true);
}

Tensor linear_weight(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  return uniform_tensor({fan_in, fan_out}, 1.0 / std::sqrt(static_cast<double>(fan_in)), rng);
}

Tensor filled(std::size_t n, double value) { return Tensor::from({n}, std::vector<double>(n, value), true); }

}  // namespace

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  const std::size_t d = config.d_h;
  const double embed_bound = config.embed_init_std * std::sqrt(3.0);
  ModelParams p;
  p.embedding = uniform_tensor({config.vocab_size, d}, embed_bound, rng);
  p.position = uniform_tensor({config.max_len, d}, embed_bound, rng);
  for (std::size_t i = 0; i < config.n_layers; ++i) {
    LayerParams l;
    l.ln1_gain = filled(d, 1.0);
    l.ln1_shift = filled(d, 0.0);
    l.wq = linear_weight(d, d, rng);
    l.bq = filled(d, 0.0);
    l.wk = linear_weight(d, d, rng);
    l.bk = filled(d, 0.0);
    l.wv = linear_weight(d, d, rng);
    l.bv = filled(d, 0.0);
    l.wo = linear_weight(d, d, rng);
    l.bo = filled(d, 0.0);
    l.ln2_gain = filled(d, 1.0);
    l.ln2_shift = filled(d, 0.0);
    l.w1 = linear_weight(d, config.d_ff, rng);
    l.b1 = filled(config.d_ff, 0.0);
    l.w2 = linear_weight(config.d_ff, d, rng);
    l.b2 = filled(d, 0.0);
    p.layers.push_back(std::move(l));
  }
  p.final_gain = filled(d, 1.0);
  p.final_shift = filled(d, 0.0);
  p.classifier_w = linear_weight(d, config.n_classes, rng);
  p.classifier_b = filled(config.n_classes, 0.0);
  for (std::size_t i = 0; i < config.proj_layers; ++i) {
    const std::size_t out = i + 1 == config.proj_layers ? config.d_proj : d;
    p.proj_w.push_back(linear_weight(d, out, rng));
    p.proj_b.push_back(filled(out, 0.0));
  }
  return p;
}

Batch make_batch(std::span<const TokenizedExample> examples) {
  std::vector<std::size_t> idx(examples.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return make_batch(examples, idx);
}

Batch make_batch(std::span<const TokenizedExample> examples, std::span<const std::size_t> indices) {
  if (indices.empty()) throw InputError("make_batch: empty batch");
  Batch batch;
  for (std::size_t i : indices) {
    const auto& ex = examples[i];
    if (ex.attention_len < 2 || static_cast<std::size_t>(ex.attention_len) > ex.ids.size()) {
      throw InputError("make_batch: malformed example (attention_len " + std::to_string(ex.attention_len) + ")");
    }
    batch.seq_len = std::max(batch.seq_len, static_cast<std::size_t>(ex.attention_len));
  }
  batch.ids.assign(indices.size() * batch.seq_len, kPadId);
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const auto& ex = examples[indices[b]];
    std::copy_n(ex.ids.begin(), ex.attention_len, batch.ids.begin() + static_cast<std::ptrdiff_t>(b * batch.seq_len));
    batch.lengths.push_back(ex.attention_len);
    batch.labels.push_back(ex.label);
  }
  return batch;
}

EncoderOutput forward(const ModelParams& params, const ModelConfig& config, const Batch& batch,
                      const Tensor* embedding, Rng* dropout_rng) {
  const Tensor& table = embedding ? *embedding : params.embedding;
  for (int id : batch.ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= table.dim(0)) {
      throw InputError("token id " + std::to_string(id) + " outside vocabulary of size " +
                       std::to_string(table.dim(0)));
    }
  }
  return forward_embedded(params, config, gather_rows(table, batch.ids), batch.lengths, batch.seq_len, dropout_rng);
}

EncoderOutput forward_embedded(const ModelParams& params, const ModelConfig& config, const Tensor& token_rows,
                               std::span<const int> lengths, std::size_t seq_len, Rng* dropout_rng) {
  const std::size_t n = lengths.size();
  if (seq_len == 0 || seq_len > config.max_len) {
    throw InputError("sequence length " + std::to_string(seq_len) + " exceeds max_len " +
                     std::to_string(config.max_len));
  }
  if (token_rows.rank() != 2 || token_rows.dim(0) != n * seq_len || token_rows.dim(1) != config.d_h) {
    throw DimensionError("forward: token rows " + shape_str(token_rows.shape()) + " do not match " +
                         std::to_string(n) + " sequences of " + std::to_string(seq_len) + " × " +
                         std::to_string(config.d_h));
  }
  const double p_drop = dropout_rng ? config.dropout : 0.0;
  auto drop = [&](const Tensor& t) { return p_drop > 0.0 ? dropout(t, p_drop, *dropout_rng) : t; };

  std::vector<int> positions(n * seq_len);
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<int>(i % seq_len);
  Tensor x = drop(add(token_rows, gather_rows(params.position, positions)));

  for (const auto& l : params.layers) {
    Tensor h = layer_norm(x, l.ln1_gain, l.ln1_shift);
    Tensor q = linear(h, l.wq, l.bq);
    Tensor k = linear(h, l.wk, l.bk);
    Tensor v = linear(h, l.wv, l.bv);
    Tensor a = attention(q, k, v, seq_len, config.n_heads, lengths);
    x = add(x, drop(linear(a, l.wo, l.bo)));
    h = layer_norm(x, l.ln2_gain, l.ln2_shift);
    x = add(x, drop(linear(gelu(linear(h, l.w1, l.b1)), l.w2, l.b2)));
  }

  std::vector<int> cls_rows(n);
  for (std::size_t b = 0; b < n; ++b) cls_rows[b] = static_cast<int>(b * seq_len);
  EncoderOutput out;
  out.h_cls = layer_norm(gather_rows(x, cls_rows), params.final_gain, params.final_shift);
  out.logits = linear(out.h_cls, params.classifier_w, params.classifier_b);
  out.probs = softmax(out.logits, -1);
  return out;
}

Tensor project(const ModelParams& params, const Tensor& h_cls) {
  Tensor z = h_cls;
  for (std::size_t i = 0; i < params.proj_w.size(); ++i) {
    z = linear(z, params.proj_w[i], params.proj_b[i]);
    if (i + 1 < params.proj_w.size()) z = gelu(z);
  }
  return z;
}

std::vector<int> predict(const Tensor& probs) {
  const std::size_t n = probs.dim(0);
  const std::size_t c = probs.dim(1);
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < c; ++j) {
      if (probs.at(i, j) > probs.at(i, best)) best = j;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

}  // namespace cadv
