#pragma once

// Word attributions by integrated gradients, their rendering, and 2D
// principal-component projections of sentence representations.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cadv/encoder.hpp"
#include "cadv/tensor.hpp"
#include "cadv/textprep.hpp"

namespace cadv {

// Scalar model output as a function of one input tensor.
using ScalarFn = std::function<Tensor(const Tensor&)>;

// Elementwise (input − baseline) ⊙ mean gradient of f over the midpoints
// α_k = (k + ½)/steps of the straight path from baseline to input. Same shape
// as `input`. Throws ConfigError for steps = 0, NonFiniteError on a
// non-finite gradient.
std::vector<double> integrated_gradients(const ScalarFn& f, const Tensor& input, const Tensor& baseline,
                                         std::size_t steps);

struct AttributionResult {
  std::vector<std::string> tokens;  // non-PAD tokens, [CLS] and [SEP] included
  std::vector<double> scores;       // one per token; > 0 supports target_class
  int target_class = 0;
  int predicted = 0;
  int true_label = 0;
  double output = 0.0;           // target logit at the input
  double baseline_output = 0.0;  // target logit at the baseline
  // Σ scores − (output − baseline_output)
  double completeness_gap = 0.0;

  double relative_gap() const;
};

// Attributes the target class's pre-softmax score to token embedding rows.
// The baseline keeps [CLS] and [SEP] and replaces every other token's row by
// the PAD embedding, so the two special tokens always score 0. A negative
// target_class means "the predicted class".
AttributionResult integrated_gradients(const ModelParams& params, const ModelConfig& config,
                                       const TokenizedExample& example, const Vocab& vocab, int target_class,
                                       std::size_t steps = 64);

// Green for positive, red for negative, with intensity |score| / max|score|.
// Tokens with score 0 are left uncolored.
std::string render_ansi(const AttributionResult& result);
std::string render_html(const AttributionResult& result);

// Mean-centres the rows and projects them on the two leading principal axes.
// Each axis is oriented so its largest-magnitude loading is positive. Throws
// InputError for fewer than 2 rows and DimensionError for fewer than 2 columns.
Tensor project_2d(const Tensor& vectors);

// "# representation=<name>", then "x,y,label,disease", then one row per point.
void write_embedding_csv(std::ostream& out, const Tensor& points, std::span<const std::string> labels,
                         std::span<const std::string> diseases, const std::string& representation);

}  // namespace cadv
