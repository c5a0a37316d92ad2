#pragma once

// Adaptive-moment optimizer, the dual-forward training step, and the epoch
// loop with per-epoch validation.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "cadv/config.hpp"
#include "cadv/encoder.hpp"
#include "cadv/losses.hpp"
#include "cadv/metrics.hpp"
#include "cadv/textprep.hpp"

namespace cadv {

class Rng;

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamOptions options;
  std::size_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

// One bias-corrected Adam update from the gradients held by `params`.
// Parameters without an accumulated gradient are treated as having zero
// gradient. Any non-finite gradient throws NonFiniteError before anything is
// modified.
void optimizer_step(std::span<Tensor> params, double learning_rate, AdamState& state);

struct StepResult {
  LossBreakdown loss;
  // Mean cosine between the projected clean and perturbed [CLS] vectors of
  // each pair; NaN in baseline mode.
  double pair_cosine = 0.0;
};

// Baseline: one clean pass on ce_clean. Adversarial modes: clean pass,
// ∇_E ce_clean, r = fgsm(∇_E), second pass with E + r (r held constant),
// combined objective back-propagated through both passes, then the update.
// E itself is never written except by the optimizer.
StepResult train_step(ModelParams& params, const ModelConfig& model, const TrainConfig& config, const Batch& batch,
                      AdamState& state, Rng* dropout_rng = nullptr);

// Losses of train_step without an update or dropout; gradients are left zeroed.
StepResult evaluate_step(const ModelParams& params, const ModelConfig& model, const TrainConfig& config,
                         const Batch& batch);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  LossBreakdown loss;     // example-weighted means over the epoch's batches
  double train_pair_cosine = 0.0;
  double val_pair_cosine = 0.0;
  PrecisionRecallF1 val;
};

struct TrainOptions {
  // Measure the clean/perturbed projection cosine on the validation set
  // before training and after every epoch.
  bool track_pair_cosine = true;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  ModelParams best;             // parameters after the best validation epoch
  std::size_t best_epoch = 0;   // 0 when no epoch ran
  PrecisionRecallF1 best_val;
  double initial_val_pair_cosine = 0.0;
};

// Epoch loop with a per-epoch shuffle seeded by (seed, epoch). The best epoch
// is the one with the highest validation F1, earliest on ties.
TrainResult train(ModelParams params, const ModelConfig& model, const TrainConfig& config,
                  const std::vector<TokenizedExample>& train_set, const std::vector<TokenizedExample>& val_set,
                  const TrainOptions& options = {});

// Argmax predictions over `examples`, batched, without recording gradients.
std::vector<int> predict_labels(const ModelParams& params, const ModelConfig& model,
                                const std::vector<TokenizedExample>& examples, std::size_t batch_size = 64);

// Mean clean/perturbed pair cosine at the projection head over `examples`.
double mean_pair_cosine(const ModelParams& params, const ModelConfig& model, const TrainConfig& config,
                        const std::vector<TokenizedExample>& examples);

}  // namespace cadv
