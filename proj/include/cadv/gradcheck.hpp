#pragma once

// Central finite-difference verification of analytic gradients.

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "cadv/tensor.hpp"

namespace cadv {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor for the relative error, so entries whose true gradient
  // is ~0 are judged on absolute error instead of amplified noise.
  double floor = 1e-6;
};

struct GradCheckEntry {
  std::size_t input = 0;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  std::size_t worst = 0;  // index into entries
  bool passed = true;

  std::string summary() const;
};

// f must return a scalar and read its inputs through the given tensors; the
// check perturbs inputs in place and restores them afterwards.
GradCheckReport grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& f, std::vector<Tensor> inputs,
                           const GradCheckOptions& options = {});

}  // namespace cadv
