#include "cadv/trainer.hpp"

#include <cmath>
#include <numeric>

#include "cadv/error.hpp"
#include "cadv/ops.hpp"
#include "cadv/rng.hpp"

namespace cadv {

void optimizer_step(std::span<Tensor> params, double learning_rate, AdamState& state) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.numel(), 0.0);
      state.v.emplace_back(p.numel(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw ContractError("optimizer state was built for a different parameter set");
  for (const auto& p : params) {
    if (!p.has_grad()) continue;
    for (double g : p.grad()) {
      if (!std::isfinite(g)) throw NonFiniteError("optimizer_step: non-finite gradient");
    }
  }

  ++state.step;
  const auto& o = state.options;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(o.beta1, t);
  const double correction2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto values = params[i].mutable_data();
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.size() != values.size()) throw ContractError("optimizer state shape mismatch");
    const bool has = params[i].has_grad();
    const std::span<const double> grad = has ? params[i].grad() : std::span<const double>{};
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double g = has ? grad[j] : 0.0;
      m[j] = o.beta1 * m[j] + (1.0 - o.beta1) * g;
      v[j] = o.beta2 * v[j] + (1.0 - o.beta2) * g * g;
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      values[j] -= learning_rate * m_hat / (std::sqrt(v_hat) + o.eps);
    }
  }
}

namespace {

struct Passes {
  Tensor ce_clean;
  Tensor ce_adv;
  Tensor contrastive;
  Tensor combined;
  Tensor z_clean;
  Tensor z_adv;
};

void require_finite(const Tensor& t, const char* term) {
  if (t.defined() && !std::isfinite(t.item())) {
    throw NonFiniteError(std::string("non-finite ") + term + " (" + std::to_string(t.item()) + ")");
  }
}

double pair_cosine(const Tensor& a, const Tensor& b) {
  NoGradGuard no_grad;
  const std::size_t n = a.dim(0);
  const std::size_t d = a.dim(1);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double ab = 0.0;
    double aa = 0.0;
    double bb = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      ab += a.at(i, j) * b.at(i, j);
      aa += a.at(i, j) * a.at(i, j);
      bb += b.at(i, j) * b.at(i, j);
    }
    total += (aa == 0.0 || bb == 0.0) ? 0.0 : ab / std::sqrt(aa * bb);
  }
  return total / static_cast<double>(n);
}

// Builds both passes and the combined objective; on return every parameter
// gradient is zero and `combined` is ready for backward.
Passes run_passes(const ModelParams& params, const ModelConfig& model, const TrainConfig& config, const Batch& batch,
                  Rng* dropout_rng) {
  const_cast<ModelParams&>(params).zero_grad();
  Passes out;
  EncoderOutput clean = forward(params, model, batch, nullptr, dropout_rng);
  out.ce_clean = cross_entropy(clean.probs, batch.labels);
  require_finite(out.ce_clean, "ce_clean");
  if (config.mode == TrainMode::baseline) {
    out.combined = out.ce_clean;
    return out;
  }

  backward(out.ce_clean);
  const Tensor grad_e = Tensor::from(params.embedding.shape(),
                                     {params.embedding.grad().begin(), params.embedding.grad().end()});
  const_cast<ModelParams&>(params).zero_grad();
  const Perturbation r = fgsm(grad_e, config.epsilon, config.fgsm_direction);
  const Tensor perturbed = add(params.embedding, r.r);
  EncoderOutput adv = forward(params, model, batch, &perturbed, dropout_rng);
  out.ce_adv = cross_entropy(adv.probs, batch.labels);
  require_finite(out.ce_adv, "ce_adv");

  if (config.mode == TrainMode::adversarial_only) {
    out.combined = scale(add(out.ce_clean, out.ce_adv), 0.5);
    NoGradGuard no_grad;
    out.z_clean = project(params, clean.h_cls);
    out.z_adv = project(params, adv.h_cls);
  } else {
    out.z_clean = project(params, clean.h_cls);
    out.z_adv = project(params, adv.h_cls);
    out.contrastive = nt_xent(out.z_clean, out.z_adv, config.tau);
    require_finite(out.contrastive, "contrastive");
    out.combined = combined_loss(out.ce_clean, out.ce_adv, out.contrastive, config.lambda);
  }
  require_finite(out.combined, "combined");
  return out;
}

StepResult summarize(const Passes& p) {
  StepResult r;
  r.loss.ce_clean = p.ce_clean.item();
  r.loss.ce_adv = p.ce_adv.defined() ? p.ce_adv.item() : 0.0;
  r.loss.contrastive = p.contrastive.defined() ? p.contrastive.item() : 0.0;
  r.loss.combined = p.combined.item();
  r.pair_cosine = p.z_clean.defined() ? pair_cosine(p.z_clean, p.z_adv) : std::nan("");
  return r;
}

}  // namespace

StepResult train_step(ModelParams& params, const ModelConfig& model, const TrainConfig& config, const Batch& batch,
                      AdamState& state, Rng* dropout_rng) {
  if (batch.size() == 0) throw InputError("train_step: empty batch");
  Passes passes = run_passes(params, model, config, batch, dropout_rng);
  backward(passes.combined);
  auto all = params.all();
  optimizer_step(all, config.learning_rate, state);
  return summarize(passes);
}

StepResult evaluate_step(const ModelParams& params, const ModelConfig& model, const TrainConfig& config,
                         const Batch& batch) {
  if (batch.size() == 0) throw InputError("evaluate_step: empty batch");
  Passes passes = run_passes(params, model, config, batch, nullptr);
  const_cast<ModelParams&>(params).zero_grad();
  return summarize(passes);
}

std::vector<int> predict_labels(const ModelParams& params, const ModelConfig& model,
                                const std::vector<TokenizedExample>& examples, std::size_t batch_size) {
  NoGradGuard no_grad;
  std::vector<int> out;
  out.reserve(examples.size());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < examples.size(); start += batch_size) {
    idx.clear();
    for (std::size_t i = start; i < std::min(examples.size(), start + batch_size); ++i) idx.push_back(i);
    const auto preds = predict(forward(params, model, make_batch(examples, idx)).probs);
    out.insert(out.end(), preds.begin(), preds.end());
  }
  return out;
}

double mean_pair_cosine(const ModelParams& params, const ModelConfig& model, const TrainConfig& config,
                        const std::vector<TokenizedExample>& examples) {
  if (examples.empty()) throw InputError("mean_pair_cosine: no examples");
  TrainConfig probe = config;
  probe.mode = TrainMode::contrastive_adversarial;
  double total = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < examples.size(); start += config.batch_size) {
    idx.clear();
    for (std::size_t i = start; i < std::min(examples.size(), start + config.batch_size); ++i) idx.push_back(i);
    const Batch batch = make_batch(examples, idx);
    total += evaluate_step(params, model, probe, batch).pair_cosine * static_cast<double>(batch.size());
  }
  return total / static_cast<double>(examples.size());
}

TrainResult train(ModelParams params, const ModelConfig& model, const TrainConfig& config,
                  const std::vector<TokenizedExample>& train_set, const std::vector<TokenizedExample>& val_set,
                  const TrainOptions& options) {
  config.validate();
  model.validate();
  if (train_set.empty() || val_set.empty()) throw InputError("train: training and validation sets must be nonempty");
  params = params.clone();

  TrainResult result;
  result.best = params.clone();
  const bool track = options.track_pair_cosine && config.mode != TrainMode::baseline;
  if (track) result.initial_val_pair_cosine = mean_pair_cosine(params, model, config, val_set);

  std::vector<int> val_labels;
  for (const auto& ex : val_set) val_labels.push_back(ex.label);

  AdamState state;
  double best_f1 = -1.0;
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(config.seed, epoch);
    shuffle_rng.shuffle(std::span(order));
    Rng dropout_rng(config.seed ^ 0x5bd1e995u, epoch);

    EpochRecord rec;
    rec.epoch = epoch;
    double cos_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const Batch batch = make_batch(train_set, std::span(order).subspan(start, end - start));
      const StepResult step = train_step(params, model, config, batch, state, &dropout_rng);
      const double w = static_cast<double>(batch.size());
      rec.loss.ce_clean += w * step.loss.ce_clean;
      rec.loss.ce_adv += w * step.loss.ce_adv;
      rec.loss.contrastive += w * step.loss.contrastive;
      rec.loss.combined += w * step.loss.combined;
      cos_total += w * step.pair_cosine;
    }
    const double n = static_cast<double>(order.size());
    rec.loss.ce_clean /= n;
    rec.loss.ce_adv /= n;
    rec.loss.contrastive /= n;
    rec.loss.combined /= n;
    rec.train_pair_cosine = config.mode == TrainMode::baseline ? std::nan("") : cos_total / n;

    const auto preds = predict_labels(params, model, val_set);
    rec.val = classification_report(preds, val_labels, model.n_classes);
    rec.val_pair_cosine = track ? mean_pair_cosine(params, model, config, val_set) : std::nan("");

    if (rec.val.f1 > best_f1) {
      best_f1 = rec.val.f1;
      result.best = params.clone();
      result.best_epoch = epoch;
      result.best_val = rec.val;
    }
    result.history.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);
  }
  return result;
}

}  // namespace cadv
