#pragma once

// Hyperparameter grid search and stratified k-fold cross-validation. Cells and
// folds are independent and may run concurrently; each clones the initial
// parameters and owns its optimizer state.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cadv/config.hpp"
#include "cadv/encoder.hpp"
#include "cadv/metrics.hpp"
#include "cadv/trainer.hpp"

namespace cadv {

struct GridSpec {
  std::vector<double> lambdas;
  std::vector<double> epsilons;
  std::vector<double> taus;
  std::vector<std::size_t> batch_sizes;

  // λ ∈ {0.1..0.5}, ε ∈ {0.02, 0.005, 0.001, 0.0001}, τ ∈ {0.05..0.1},
  // batch size ∈ {16, 24, 32}.
  static GridSpec standard();
  std::size_t cell_count() const;
};

struct GridCell {
  std::size_t index = 0;  // position in enumeration order
  TrainConfig config;
};

// Cartesian product with λ outermost and batch size innermost. Any empty
// axis throws ConfigError.
std::vector<GridCell> enumerate_grid(const TrainConfig& base, const GridSpec& spec);

struct CellResult {
  GridCell cell;
  std::size_t best_epoch = 0;
  PrecisionRecallF1 val;  // at best_epoch
  LossBreakdown loss;     // training losses of best_epoch
};

// Every cell, sorted by validation F1 descending; ties keep enumeration order.
// The selected configuration is ranked.front().
struct GridSearchResult {
  std::vector<CellResult> ranked;
};

GridSearchResult grid_search(const ModelParams& initial, const ModelConfig& model, const TrainConfig& base,
                             const GridSpec& spec, const std::vector<TokenizedExample>& train_set,
                             const std::vector<TokenizedExample>& val_set, std::size_t parallel = 1);

struct FoldAssignment {
  std::vector<std::vector<std::size_t>> folds;  // indices, ascending within a fold
  std::vector<std::string> warnings;
};

// Members of each stratum are shuffled, then dealt round-robin with one
// counter running across strata (strata visited in ascending order), so fold
// sizes differ by at most one and every stratum is spread evenly. A stratum
// smaller than k gets a warning. Throws ConfigError for k < 2 and InputError
// when there are fewer than k items.
FoldAssignment stratified_folds(std::span<const int> strata, std::size_t k, std::uint64_t seed);

struct FoldResult {
  std::size_t fold = 0;
  std::size_t train_size = 0;
  std::size_t val_size = 0;
  std::size_t best_epoch = 0;
  PrecisionRecallF1 val;
  LossBreakdown loss;
};

struct KFoldResult {
  std::vector<FoldResult> folds;
  PrecisionRecallF1 mean;  // unweighted mean over folds
  std::vector<std::string> warnings;
};

PrecisionRecallF1 mean_metrics(std::span<const FoldResult> folds);

// Runs `run_fold(fold, train_indices, val_indices)` for each fold, on up to
// `parallel` threads.
using FoldRunner =
    std::function<FoldResult(std::size_t, std::span<const std::size_t>, std::span<const std::size_t>)>;
KFoldResult kfold_cv(std::span<const int> strata, std::size_t k, std::uint64_t seed, const FoldRunner& run_fold,
                     std::size_t parallel = 1);

// Stratifies by label and trains a clone of `initial` on each fold.
KFoldResult kfold_cv(const ModelParams& initial, const ModelConfig& model, const TrainConfig& config,
                     const std::vector<TokenizedExample>& dataset, std::size_t k, std::size_t parallel = 1);

}  // namespace cadv
