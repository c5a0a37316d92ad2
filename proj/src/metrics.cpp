#include "cadv/metrics.hpp"

#include <map>

#include "cadv/error.hpp"

namespace cadv {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void check_inputs(std::span<const int> predictions, std::span<const int> labels, std::size_t n_classes) {
  if (predictions.size() != labels.size()) {
    throw InputError("metrics: " + std::to_string(predictions.size()) + " predictions for " +
                     std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= n_classes || predictions[i] < 0 ||
        static_cast<std::size_t>(predictions[i]) >= n_classes) {
      throw InputError("metrics: label or prediction outside [0, " + std::to_string(n_classes) + ")");
    }
  }
}

}  // namespace

PrecisionRecallF1 precision_recall_f1(const ConfusionCounts& c) {
  PrecisionRecallF1 out;
  out.precision = ratio(c.tp, c.tp + c.fp);
  out.recall = ratio(c.tp, c.tp + c.fn);
  const double denom = out.precision + out.recall;
  out.f1 = denom == 0.0 ? 0.0 : 2.0 * out.precision * out.recall / denom;
  return out;
}

std::vector<ConfusionCounts> confusion_by_label(std::span<const int> predictions, std::span<const int> labels,
                                                std::size_t n_classes) {
  check_inputs(predictions, labels, n_classes);
  std::vector<ConfusionCounts> counts(n_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t c = 0; c < n_classes; ++c) {
      const bool pred = predictions[i] == static_cast<int>(c);
      const bool gold = labels[i] == static_cast<int>(c);
      if (pred && gold) ++counts[c].tp;
      else if (pred) ++counts[c].fp;
      else if (gold) ++counts[c].fn;
      else ++counts[c].tn;
    }
  }
  return counts;
}

PrecisionRecallF1 classification_report(std::span<const int> predictions, std::span<const int> labels,
                                        std::size_t n_classes) {
  const auto counts = confusion_by_label(predictions, labels, n_classes);
  if (n_classes == 2) return precision_recall_f1(counts[kPositiveLabel]);
  PrecisionRecallF1 macro;
  for (const auto& c : counts) {
    const auto s = precision_recall_f1(c);
    macro.precision += s.precision;
    macro.recall += s.recall;
    macro.f1 += s.f1;
  }
  const double n = static_cast<double>(n_classes);
  macro.precision /= n;
  macro.recall /= n;
  macro.f1 /= n;
  return macro;
}

ClasswiseF1 classwise_average_f1(std::span<const int> predictions, std::span<const int> labels,
                                 std::span<const std::string> groups, std::size_t n_classes,
                                 std::span<const std::string> expected_groups) {
  check_inputs(predictions, labels, n_classes);
  if (groups.size() != labels.size()) throw InputError("classwise_average_f1: one group per example required");
  std::map<std::string, std::pair<std::vector<int>, std::vector<int>>> by_group;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& [p, l] = by_group[groups[i]];
    p.push_back(predictions[i]);
    l.push_back(labels[i]);
  }
  ClasswiseF1 out;
  for (const auto& name : expected_groups) {
    if (!by_group.count(name)) out.warnings.push_back("group '" + name + "' has no examples; excluded");
  }
  for (const auto& [name, pl] : by_group) {
    const auto s = classification_report(pl.first, pl.second, n_classes);
    out.groups.push_back({name, pl.first.size(), s.f1});
    out.macro_f1 += s.f1;
  }
  if (!out.groups.empty()) out.macro_f1 /= static_cast<double>(out.groups.size());
  return out;
}

PerLabelF1 per_label_f1(std::span<const int> predictions, std::span<const int> labels, std::size_t n_classes) {
  PerLabelF1 out;
  for (const auto& c : confusion_by_label(predictions, labels, n_classes)) {
    out.f1.push_back(precision_recall_f1(c).f1);
    out.macro_f1 += out.f1.back();
  }
  out.macro_f1 /= static_cast<double>(n_classes);
  return out;
}

}  // namespace cadv
