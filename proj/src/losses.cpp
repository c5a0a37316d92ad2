#include "cadv/losses.hpp"

#include <vector>

#include "cadv/error.hpp"
#include "cadv/ops.hpp"

namespace cadv {

Tensor cross_entropy(const Tensor& class_probs, std::span<const int> labels) {
  if (class_probs.rank() != 2 || class_probs.dim(0) != labels.size()) {
    throw DimensionError("cross_entropy: probabilities " + shape_str(class_probs.shape()) + " for " +
                         std::to_string(labels.size()) + " labels");
  }
  const auto classes = static_cast<int>(class_probs.dim(1));
  for (int y : labels) {
    if (y < 0 || y >= classes) {
      throw InputError("cross_entropy: label " + std::to_string(y) + " outside [0, " + std::to_string(classes) + ")");
    }
  }
  return scale(mean(log(clamp_min(pick(class_probs, labels), kProbFloor))), -1.0);
}

Tensor nt_xent(const Tensor& z_clean, const Tensor& z_adv, double tau) {
  if (!(tau > 0.0)) throw ConfigError("nt_xent: tau must be positive");
  if (z_clean.rank() != 2 || z_clean.shape() != z_adv.shape()) {
    throw DimensionError("nt_xent: views " + shape_str(z_clean.shape()) + " and " + shape_str(z_adv.shape()) +
                         " must both be N × d");
  }
  const std::size_t n = z_clean.dim(0);
  Tensor pool = normalize_rows(concat_rows(z_clean, z_adv));
  Tensor sims = scale(matmul(pool, transpose(pool)), 1.0 / tau);
  std::vector<int> partner(2 * n);
  for (std::size_t i = 0; i < 2 * n; ++i) partner[i] = static_cast<int>((i + n) % (2 * n));
  return mean(sub(logsumexp_rows(sims, /*exclude_diagonal=*/true), pick(sims, partner)));
}

Tensor combined_loss(const Tensor& ce_clean, const Tensor& ce_adv, const Tensor& contrastive, double lambda) {
  return add(scale(add(ce_clean, ce_adv), (1.0 - lambda) / 2.0), scale(contrastive, lambda));
}

double combined_loss(double ce_clean, double ce_adv, double contrastive, double lambda) {
  return (1.0 - lambda) / 2.0 * (ce_clean + ce_adv) + lambda * contrastive;
}

Perturbation fgsm(const Tensor& grad, double epsilon, FgsmDirection direction) {
  if (!(epsilon >= 0.0)) throw ConfigError("fgsm: epsilon must be non-negative");
  const double step = direction == FgsmDirection::ascent ? epsilon : -epsilon;
  std::vector<double> r(grad.numel());
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double g = grad.at(i);
    r[i] = g > 0.0 ? step : (g < 0.0 ? -step : 0.0);
  }
  return {Tensor::from(grad.shape(), std::move(r)), epsilon};
}

}  // namespace cadv
