#include "cadv/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cadv/error.hpp"

namespace cadv {

std::string GradCheckReport::summary() const {
  std::ostringstream out;
  out << (passed ? "PASS" : "FAIL") << " max_rel_error=" << max_rel_error;
  if (!entries.empty()) {
    const auto& e = entries[worst];
    out << " at input " << e.input << "[" << e.index << "] analytic=" << e.analytic << " numeric=" << e.numeric;
  }
  return out.str();
}

GradCheckReport grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& f, std::vector<Tensor> inputs,
                           const GradCheckOptions& options) {
  for (auto& t : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  Tensor out = f(inputs);
  if (out.numel() != 1) throw ContractError("grad_check: function must return a scalar");
  backward(out);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(inputs.size());
  for (const auto& t : inputs) analytic.emplace_back(t.grad().begin(), t.grad().end());

  GradCheckReport report;
  NoGradGuard no_grad;
  for (std::size_t in = 0; in < inputs.size(); ++in) {
    auto values = inputs[in].mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + options.step;
      const double up = f(inputs).item();
      values[i] = saved - options.step;
      const double down = f(inputs).item();
      values[i] = saved;

      GradCheckEntry e;
      e.input = in;
      e.index = i;
      e.analytic = analytic[in][i];
      e.numeric = (up - down) / (2.0 * options.step);
      const double denom = std::max({std::abs(e.analytic), std::abs(e.numeric), options.floor});
      e.rel_error = std::abs(e.analytic - e.numeric) / denom;
      if (!std::isfinite(e.rel_error)) e.rel_error = INFINITY;
      if (report.entries.empty() || e.rel_error > report.max_rel_error) {
        report.worst = report.entries.size();
        report.max_rel_error = e.rel_error;
      }
      report.entries.push_back(e);
    }
  }
  report.passed = report.max_rel_error < options.tolerance;
  return report;
}

}  // namespace cadv
