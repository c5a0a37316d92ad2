#pragma once

// Precision, recall and F1 as reported for health-mention classification.
// Every 0/0 ratio is defined as 0.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cadv {

// Label id treated as positive in binary reporting (health mention).
inline constexpr int kPositiveLabel = 1;

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
};

struct PrecisionRecallF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

PrecisionRecallF1 precision_recall_f1(const ConfusionCounts& counts);

// One-vs-rest counts for every label in [0, n_classes).
std::vector<ConfusionCounts> confusion_by_label(std::span<const int> predictions, std::span<const int> labels,
                                                std::size_t n_classes);

// Binary (n_classes == 2): scores of the positive label. Otherwise the
// unweighted mean of per-label precision, recall and F1.
PrecisionRecallF1 classification_report(std::span<const int> predictions, std::span<const int> labels,
                                        std::size_t n_classes);

struct GroupScore {
  std::string group;
  std::size_t count = 0;
  double f1 = 0.0;
};

struct ClasswiseF1 {
  std::vector<GroupScore> groups;  // sorted by group name
  double macro_f1 = 0.0;           // unweighted mean over non-empty groups
  std::vector<std::string> warnings;
};

// F1 computed within each group (as classification_report does), then
// averaged. Names in `expected_groups` that have no examples are excluded from
// the average and reported in warnings.
ClasswiseF1 classwise_average_f1(std::span<const int> predictions, std::span<const int> labels,
                                 std::span<const std::string> groups, std::size_t n_classes,
                                 std::span<const std::string> expected_groups = {});

struct PerLabelF1 {
  std::vector<double> f1;  // indexed by label
  double macro_f1 = 0.0;
};

PerLabelF1 per_label_f1(std::span<const int> predictions, std::span<const int> labels, std::size_t n_classes);

}  // namespace cadv
