#pragma once

// Classification, contrastive and combined objectives, and the FGSM
// perturbation of the embedding matrix.

#include <span>

#include "cadv/config.hpp"
#include "cadv/tensor.hpp"

namespace cadv {

// Probabilities below this are clamped before the log.
inline constexpr double kProbFloor = 1e-12;

// −(1/N) Σ log p(y_i) over rows of class_probs (N × C).
Tensor cross_entropy(const Tensor& class_probs, std::span<const int> labels);

// Normalized-temperature cross-entropy over the 2N pooled vectors
// [z_clean; z_adv]. Anchor i's positive is its partner in the other view; the
// denominator runs over every other vector in the pool. Returns the mean over
// all 2N anchors.
Tensor nt_xent(const Tensor& z_clean, const Tensor& z_adv, double tau);

// (1−λ)/2 · (ce_clean + ce_adv) + λ · contrastive
Tensor combined_loss(const Tensor& ce_clean, const Tensor& ce_adv, const Tensor& contrastive, double lambda);
double combined_loss(double ce_clean, double ce_adv, double contrastive, double lambda);

// r = ±ε·sign(g) with sign(0) = 0: + for ascent, − for paper_literal.
struct Perturbation {
  Tensor r;  // same shape as the gradient, entries in {−ε, 0, +ε}
  double epsilon = 0.0;
};

Perturbation fgsm(const Tensor& grad, double epsilon, FgsmDirection direction);

struct LossBreakdown {
  double ce_clean = 0.0;
  double ce_adv = 0.0;
  double contrastive = 0.0;
  double combined = 0.0;
};

}  // namespace cadv
