#include "cadv/search.hpp"

#include <algorithm>
#include <exception>
#include <map>

#include "cadv/error.hpp"
#include "cadv/rng.hpp"

namespace cadv {

GridSpec GridSpec::standard() {
  return GridSpec{{0.1, 0.2, 0.3, 0.4, 0.5},
                  {0.02, 0.005, 0.001, 0.0001},
                  {0.05, 0.06, 0.07, 0.08, 0.09, 0.1},
                  {16, 24, 32}};
}

std::size_t GridSpec::cell_count() const {
  return lambdas.size() * epsilons.size() * taus.size() * batch_sizes.size();
}

std::vector<GridCell> enumerate_grid(const TrainConfig& base, const GridSpec& spec) {
  if (spec.cell_count() == 0) throw ConfigError("grid search: every axis needs at least one value");
  std::vector<GridCell> cells;
  cells.reserve(spec.cell_count());
  for (double lambda : spec.lambdas) {
    for (double epsilon : spec.epsilons) {
      for (double tau : spec.taus) {
        for (std::size_t batch : spec.batch_sizes) {
          GridCell cell;
          cell.index = cells.size();
          cell.config = base;
          cell.config.lambda = lambda;
          cell.config.epsilon = epsilon;
          cell.config.tau = tau;
          cell.config.batch_size = batch;
          cell.config.validate();
          cells.push_back(cell);
        }
      }
    }
  }
  return cells;
}

namespace {

// Runs body(i) for i in [0, n) on up to `parallel` threads and rethrows the
// first failure by index once all work has finished.
template <typename Body>
void run_indexed(std::size_t n, std::size_t parallel, Body body) {
  std::vector<std::exception_ptr> errors(n);
  const int threads = static_cast<int>(std::max<std::size_t>(1, std::min(parallel, n)));
  const auto count = static_cast<long long>(n);
#pragma omp parallel for num_threads(threads) schedule(dynamic, 1)
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

GridSearchResult grid_search(const ModelParams& initial, const ModelConfig& model, const TrainConfig& base,
                             const GridSpec& spec, const std::vector<TokenizedExample>& train_set,
                             const std::vector<TokenizedExample>& val_set, std::size_t parallel) {
  const auto cells = enumerate_grid(base, spec);
  std::vector<CellResult> results(cells.size());
  run_indexed(cells.size(), parallel, [&](std::size_t i) {
    TrainOptions options;
    options.track_pair_cosine = false;
    const TrainResult run = train(initial.clone(), model, cells[i].config, train_set, val_set, options);
    CellResult r;
    r.cell = cells[i];
    r.best_epoch = run.best_epoch;
    r.val = run.best_val;
    if (run.best_epoch > 0) r.loss = run.history[run.best_epoch - 1].loss;
    results[i] = r;
  });
  std::stable_sort(results.begin(), results.end(),
                   [](const CellResult& a, const CellResult& b) { return a.val.f1 > b.val.f1; });
  return {std::move(results)};
}

FoldAssignment stratified_folds(std::span<const int> strata, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k-fold: k must be at least 2");
  if (strata.size() < k) {
    throw InputError("k-fold: " + std::to_string(strata.size()) + " examples cannot fill " + std::to_string(k) +
                     " folds");
  }
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < strata.size(); ++i) members[strata[i]].push_back(i);

  FoldAssignment out;
  out.folds.resize(k);
  Rng rng(seed);
  std::size_t next = 0;
  for (auto& [key, items] : members) {
    if (items.size() < k) {
      out.warnings.push_back("stratum " + std::to_string(key) + " has " + std::to_string(items.size()) +
                             " members, fewer than k = " + std::to_string(k));
    }
    rng.shuffle(std::span(items));
    for (std::size_t item : items) out.folds[next++ % k].push_back(item);
  }
  for (auto& fold : out.folds) std::sort(fold.begin(), fold.end());
  return out;
}

PrecisionRecallF1 mean_metrics(std::span<const FoldResult> folds) {
  PrecisionRecallF1 m;
  if (folds.empty()) return m;
  for (const auto& f : folds) {
    m.precision += f.val.precision;
    m.recall += f.val.recall;
    m.f1 += f.val.f1;
  }
  const auto n = static_cast<double>(folds.size());
  m.precision /= n;
  m.recall /= n;
  m.f1 /= n;
  return m;
}

KFoldResult kfold_cv(std::span<const int> strata, std::size_t k, std::uint64_t seed, const FoldRunner& run_fold,
                     std::size_t parallel) {
  const FoldAssignment assignment = stratified_folds(strata, k, seed);
  KFoldResult out;
  out.warnings = assignment.warnings;
  out.folds.resize(k);
  run_indexed(k, parallel, [&](std::size_t fold) {
    std::vector<std::size_t> train_idx;
    for (std::size_t other = 0; other < k; ++other) {
      if (other == fold) continue;
      train_idx.insert(train_idx.end(), assignment.folds[other].begin(), assignment.folds[other].end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    FoldResult r = run_fold(fold, train_idx, assignment.folds[fold]);
    r.fold = fold;
    r.train_size = train_idx.size();
    r.val_size = assignment.folds[fold].size();
    out.folds[fold] = r;
  });
  out.mean = mean_metrics(out.folds);
  return out;
}

KFoldResult kfold_cv(const ModelParams& initial, const ModelConfig& model, const TrainConfig& config,
                     const std::vector<TokenizedExample>& dataset, std::size_t k, std::size_t parallel) {
  std::vector<int> labels;
  labels.reserve(dataset.size());
  for (const auto& ex : dataset) labels.push_back(ex.label);
  auto select = [&](std::span<const std::size_t> idx) {
    std::vector<TokenizedExample> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(dataset[i]);
    return out;
  };
  return kfold_cv(
      labels, k, config.seed,
      [&](std::size_t, std::span<const std::size_t> train_idx, std::span<const std::size_t> val_idx) {
        TrainOptions options;
        options.track_pair_cosine = false;
        const TrainResult run = train(initial.clone(), model, config, select(train_idx), select(val_idx), options);
        FoldResult r;
        r.best_epoch = run.best_epoch;
        r.val = run.best_val;
        if (run.best_epoch > 0) r.loss = run.history[run.best_epoch - 1].loss;
        return r;
      },
      parallel);
}

}  // namespace cadv
