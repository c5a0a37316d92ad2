#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "cadv/error.hpp"
#include "cadv/losses.hpp"
#include "cadv/ops.hpp"
#include "cadv/search.hpp"
#include "cadv/trainer.hpp"
#include "oracles.hpp"

using namespace cadv;

namespace {

ModelConfig toy_model() {
  ModelConfig c;
  c.vocab_size = 12;
  c.d_h = 8;
  c.n_layers = 1;
  c.n_heads = 2;
  c.d_ff = 16;
  c.max_len = 6;
  c.d_proj = 4;
  c.embed_init_std = 0.5;
  return c;
}

// Label 1 iff the sequence contains token 4; token 5 marks the negatives.
std::vector<TokenizedExample> separable_set(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<TokenizedExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    TokenizedExample t;
    t.label = static_cast<int>(i % 2);
    const int len = 1 + static_cast<int>(gen() % 3);
    t.ids.assign(6, kPadId);
    t.ids[0] = kClsId;
    for (int j = 0; j < len; ++j) t.ids[1 + j] = 6 + static_cast<int>(gen() % 6);
    t.ids[1 + gen() % len] = t.label == 1 ? 4 : 5;
    t.ids[1 + len] = kSepId;
    t.attention_len = len + 2;
    out.push_back(t);
  }
  return out;
}

Tensor matrix(const oracle::Mat& m) { return Tensor::from({m.size(), m[0].size()}, oracle::flatten(m)); }

bool same_data(const Tensor& a, const Tensor& b) {
  return std::equal(a.data().begin(), a.data().end(), b.data().begin(), b.data().end());
}

}  // namespace

TEST_CASE("cross entropy values") {
  const std::vector<int> one = {0};
  CHECK(cross_entropy(Tensor::from({1, 2}, {1.0, 0.0}), one).item() == 0.0);
  CHECK(cross_entropy(Tensor::from({1, 2}, {0.5, 0.5}), one).item() == doctest::Approx(std::log(2.0)));
  const std::vector<int> labels = {0, 1};
  const double ce = cross_entropy(Tensor::from({2, 2}, {0.9, 0.1, 0.2, 0.8}), labels).item();
  CHECK(ce == doctest::Approx(oracle::cross_entropy({{0.9, 0.1}, {0.2, 0.8}}, labels)).epsilon(1e-14));
  CHECK(ce == doctest::Approx(0.164252).epsilon(1e-6));
  // Clamped rather than infinite.
  CHECK(std::isfinite(cross_entropy(Tensor::from({1, 2}, {0.0, 1.0}), one).item()));
  const std::vector<int> bad = {2};
  CHECK_THROWS_AS(cross_entropy(Tensor::from({1, 2}, {0.5, 0.5}), bad), InputError);
}

TEST_CASE("fgsm perturbation") {
  const Tensor g = Tensor::from({2, 3}, {0.3, -2.0, 0.0, 1e-12, -1e-12, 5.0});
  const auto r = fgsm(g, 0.01, FgsmDirection::ascent);
  const std::vector<double> expect = {0.01, -0.01, 0.0, 0.01, -0.01, 0.01};
  for (std::size_t i = 0; i < expect.size(); ++i) CHECK(r.r.at(i) == expect[i]);
  const auto lit = fgsm(g, 0.01, FgsmDirection::paper_literal);
  for (std::size_t i = 0; i < expect.size(); ++i) CHECK(lit.r.at(i) == -expect[i] + 0.0);
  CHECK_THROWS_AS(fgsm(g, -1.0, FgsmDirection::ascent), ConfigError);
  const auto zero = fgsm(g, 0.0, FgsmDirection::ascent);
  for (double v : zero.r.data()) CHECK(v == 0.0);
}

TEST_CASE("nt_xent matches the brute-force oracle") {
  std::mt19937_64 gen(21);
  for (std::size_t n : {1, 2, 4, 8}) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto z = oracle::random_matrix(n, 5, gen);
      const auto z2 = oracle::random_matrix(n, 5, gen);
      const double tau = 0.05 + 0.5 * static_cast<double>(trial) / 20.0;
      CHECK(std::abs(nt_xent(matrix(z), matrix(z2), tau).item() - oracle::nt_xent(z, z2, tau)) < 1e-10);
    }
  }
}

TEST_CASE("nt_xent orthogonal fixture") {
  const Tensor z = Tensor::from({2, 2}, {1, 0, 0, 1});
  const oracle::Mat m = {{1, 0}, {0, 1}};
  CHECK(std::abs(nt_xent(z, z, 1.0).item() - 0.551444) <= 1e-6);
  CHECK(std::abs(nt_xent(z, z, 1.0).item() - std::log(1.0 + 2.0 / std::exp(1.0))) < 1e-14);
  // log(1 + 2/e²) = 0.2395447...
  CHECK(std::abs(nt_xent(z, z, 0.5).item() - std::log(1.0 + 2.0 / std::exp(2.0))) < 1e-14);
  CHECK(std::abs(nt_xent(z, z, 0.5).item() - oracle::nt_xent(m, m, 0.5)) < 1e-14);
  CHECK_THROWS_AS(nt_xent(z, z, 0.0), ConfigError);
}

TEST_CASE("nt_xent symmetries") {
  std::mt19937_64 gen(8);
  const std::size_t n = 5, d = 3;
  const auto z = oracle::random_matrix(n, d, gen);
  const auto z2 = oracle::random_matrix(n, d, gen);
  const double base = nt_xent(matrix(z), matrix(z2), 0.3).item();

  CHECK(nt_xent(matrix(z2), matrix(z), 0.3).item() == doctest::Approx(base).epsilon(1e-13));

  oracle::Mat pz, pz2;
  for (std::size_t i : {3, 0, 4, 1, 2}) {
    pz.push_back(z[i]);
    pz2.push_back(z2[i]);
  }
  CHECK(nt_xent(matrix(pz), matrix(pz2), 0.3).item() == doctest::Approx(base).epsilon(1e-13));

  // Rotation built by Gram-Schmidt on a random matrix.
  auto q = oracle::random_matrix(d, d, gen);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      double dot = 0;
      for (std::size_t k = 0; k < d; ++k) dot += q[i][k] * q[j][k];
      for (std::size_t k = 0; k < d; ++k) q[i][k] -= dot * q[j][k];
    }
    double norm = 0;
    for (double v : q[i]) norm += v * v;
    for (double& v : q[i]) v /= std::sqrt(norm);
  }
  CHECK(nt_xent(matrix(oracle::matmul(z, q)), matrix(oracle::matmul(z2, q)), 0.3).item() ==
        doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("combined loss weighting") {
  CHECK(combined_loss(1.0, 3.0, 7.0, 0.0) == 2.0);
  CHECK(combined_loss(1.0, 3.0, 7.0, 1.0) == 7.0);
  CHECK(combined_loss(1.0, 3.0, 5.0, 0.4) == doctest::Approx(3.2).epsilon(1e-15));
  const Tensor a = Tensor::scalar(1.0), b = Tensor::scalar(3.0), c = Tensor::scalar(5.0);
  CHECK(combined_loss(a, b, c, 0.4).item() == combined_loss(1.0, 3.0, 5.0, 0.4));
}

TEST_CASE("adam update") {
  SUBCASE("zero gradients leave parameters unchanged") {
    std::vector<Tensor> p = {Tensor::from({2}, {1.5, -2.0}, true)};
    p[0].mutable_grad();
    AdamState state;
    optimizer_step(p, 0.1, state);
    CHECK(p[0].at(0) == 1.5);
    CHECK(p[0].at(1) == -2.0);
  }
  SUBCASE("first step moves by the learning rate") {
    std::vector<Tensor> p = {Tensor::scalar(3.0, true)};
    p[0].mutable_grad()[0] = 1.0;
    AdamState state;
    optimizer_step(p, 0.1, state);
    // m̂ = 1 and v̂ = 1 after bias correction.
    CHECK(p[0].item() == doctest::Approx(3.0 - 0.1 / (1.0 + 1e-8)).epsilon(1e-15));
  }
  SUBCASE("non-finite gradients abort before any update") {
    std::vector<Tensor> p = {Tensor::scalar(1.0, true), Tensor::scalar(2.0, true)};
    p[0].mutable_grad()[0] = 1.0;
    p[1].mutable_grad()[0] = std::numeric_limits<double>::quiet_NaN();
    AdamState state;
    CHECK_THROWS_AS(optimizer_step(p, 0.1, state), NonFiniteError);
    CHECK(p[0].item() == 1.0);
    CHECK(state.step == 0);
  }
}

TEST_CASE("train_step properties") {
  const ModelConfig model = toy_model();
  const auto data = separable_set(16, 3);
  const Batch batch = make_batch(data);

  SUBCASE("zero epsilon and lambda reduce to the clean loss") {
    auto p = init_params(model, 1);
    TrainConfig cfg;
    cfg.epsilon = 0.0;
    cfg.lambda = 0.0;
    const auto r = evaluate_step(p, model, cfg, batch);
    CHECK(r.loss.combined == r.loss.ce_clean);
    CHECK(r.loss.ce_adv == r.loss.ce_clean);
  }
  SUBCASE("baseline loss decreases over the first steps") {
    auto p = init_params(model, 2);
    TrainConfig cfg;
    cfg.mode = TrainMode::baseline;
    cfg.learning_rate = 1e-2;
    AdamState state;
    double last = std::numeric_limits<double>::infinity();
    for (int step = 0; step < 5; ++step) {
      const double loss = train_step(p, model, cfg, batch, state).loss.combined;
      CHECK(loss < last);
      last = loss;
    }
  }
  SUBCASE("ascent perturbation does not lower the loss") {
    TrainConfig cfg;
    cfg.epsilon = 1e-4;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto p = init_params(model, seed);
      const auto r = evaluate_step(p, model, cfg, make_batch(separable_set(8, seed + 100)));
      CHECK(r.loss.ce_adv >= r.loss.ce_clean - 1e-6);
    }
  }
  SUBCASE("perturbation is rescinded: zero learning rate leaves E bit-identical") {
    auto p = init_params(model, 4);
    const Tensor before = p.embedding.clone();
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.epsilon = 0.5;
    AdamState state;
    train_step(p, model, cfg, batch, state);
    CHECK(same_data(before, p.embedding));
  }
  SUBCASE("adversarial-only mode averages the two classification losses") {
    const auto p = init_params(model, 5);
    TrainConfig cfg;
    cfg.mode = TrainMode::adversarial_only;
    const auto r = evaluate_step(p, model, cfg, batch);
    CHECK(r.loss.contrastive == 0.0);
    CHECK(r.loss.combined == doctest::Approx((r.loss.ce_clean + r.loss.ce_adv) / 2).epsilon(1e-15));
  }
  SUBCASE("non-finite loss names the term") {
    auto p = init_params(model, 6);
    p.embedding.mutable_data()[4 * model.d_h] = std::numeric_limits<double>::infinity();
    TrainConfig cfg;
    AdamState state;
    try {
      train_step(p, model, cfg, batch, state);
      FAIL("expected NonFiniteError");
    } catch (const NonFiniteError& e) {
      CHECK(std::string(e.what()).find("ce_clean") != std::string::npos);
    }
  }
  SUBCASE("empty batch is rejected") {
    auto p = init_params(model, 7);
    AdamState state;
    CHECK_THROWS_AS(train_step(p, model, TrainConfig{}, Batch{}, state), InputError);
  }
}

TEST_CASE("training loop") {
  const ModelConfig model = toy_model();
  const auto train_set = separable_set(40, 5);
  const auto val_set = separable_set(16, 6);
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.learning_rate = 1e-2;

  SUBCASE("zero epochs") {
    cfg.epochs = 0;
    const auto p = init_params(model, 1);
    const Tensor before = p.embedding.clone();
    const auto r = train(p, model, cfg, train_set, val_set);
    CHECK(r.history.empty());
    CHECK(r.best_epoch == 0);
    CHECK(same_data(before, p.embedding));
    CHECK(same_data(before, r.best.embedding));
  }
  SUBCASE("history, best epoch and determinism") {
    cfg.epochs = 3;
    const auto p = init_params(model, 1);
    const Tensor before = p.embedding.clone();
    const auto a = train(p, model, cfg, train_set, val_set);
    const auto b = train(p, model, cfg, train_set, val_set);
    CHECK(same_data(before, p.embedding));  // the caller's parameters are not trained in place
    REQUIRE(a.history.size() == 3);
    for (std::size_t e = 0; e < 3; ++e) {
      CHECK(a.history[e].epoch == e + 1);
      CHECK(a.history[e].loss.combined == b.history[e].loss.combined);
      CHECK(a.history[e].val.f1 == b.history[e].val.f1);
      CHECK(a.history[e].val_pair_cosine == b.history[e].val_pair_cosine);
    }
    std::size_t expect_best = 1;
    for (std::size_t e = 1; e < 3; ++e) {
      if (a.history[e].val.f1 > a.history[expect_best - 1].val.f1) expect_best = e + 1;
    }
    CHECK(a.best_epoch == expect_best);
    CHECK(same_data(a.best.embedding, b.best.embedding));
  }
  SUBCASE("empty sets are rejected") {
    CHECK_THROWS_AS(train(init_params(model, 1), model, cfg, {}, val_set), InputError);
  }
}

TEST_CASE("grid enumeration") {
  const auto standard = GridSpec::standard();
  CHECK(standard.lambdas.size() == 5);
  CHECK(standard.epsilons.size() == 4);
  CHECK(standard.taus.size() == 6);
  CHECK(standard.batch_sizes.size() == 3);
  const auto cells = enumerate_grid(TrainConfig{}, standard);
  CHECK(cells.size() == 360);
  std::set<std::tuple<double, double, double, std::size_t>> distinct;
  for (const auto& c : cells) distinct.insert({c.config.lambda, c.config.epsilon, c.config.tau, c.config.batch_size});
  CHECK(distinct.size() == 360);
  CHECK(cells[1].config.batch_size == 24);
  CHECK(cells.back().config.lambda == 0.5);

  CHECK(enumerate_grid(TrainConfig{}, GridSpec{{0.3}, {0.005}, {0.07}, {16}}).size() == 1);
  CHECK_THROWS_AS(enumerate_grid(TrainConfig{}, GridSpec{{}, {0.005}, {0.07}, {16}}), ConfigError);
}

TEST_CASE("grid search ranks every cell") {
  const ModelConfig model = toy_model();
  TrainConfig base;
  base.epochs = 1;
  base.learning_rate = 1e-2;
  const GridSpec spec{{0.1, 0.5}, {0.01}, {0.1, 0.5}, {8}};
  const auto p = init_params(model, 3);
  const auto result = grid_search(p, model, base, spec, separable_set(24, 1), separable_set(12, 2), 2);
  REQUIRE(result.ranked.size() == 4);
  std::set<std::size_t> seen;
  for (std::size_t i = 0; i < result.ranked.size(); ++i) {
    seen.insert(result.ranked[i].cell.index);
    if (i > 0) {
      const auto& prev = result.ranked[i - 1];
      const auto& cur = result.ranked[i];
      CHECK(prev.val.f1 >= cur.val.f1);
      if (prev.val.f1 == cur.val.f1) CHECK(prev.cell.index < cur.cell.index);
    }
  }
  CHECK(seen.size() == 4);

  const auto single = grid_search(p, model, base, GridSpec{{0.3}, {0.01}, {0.1}, {8}}, separable_set(24, 1),
                                  separable_set(12, 2));
  CHECK(single.ranked.size() == 1);
}

TEST_CASE("stratified folds") {
  std::vector<int> strata;
  for (int i = 0; i < 103; ++i) strata.push_back(i % 3 == 0 ? 1 : 0);
  const auto a = stratified_folds(strata, 10, 9);
  std::vector<int> hits(strata.size(), 0);
  std::size_t lo = strata.size(), hi = 0;
  for (const auto& fold : a.folds) {
    for (std::size_t i : fold) ++hits[i];
    lo = std::min(lo, fold.size());
    hi = std::max(hi, fold.size());
  }
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  CHECK(hi - lo <= 1);
  CHECK(a.warnings.empty());
  CHECK(stratified_folds(strata, 10, 9).folds == a.folds);

  std::vector<int> big(15742, 0);
  for (std::size_t i = 0; i < 4228; ++i) big[i] = 1;
  for (const auto& fold : stratified_folds(big, 10, 1).folds) CHECK((fold.size() == 1574 || fold.size() == 1575));

  const std::vector<int> rare = {0, 0, 0, 0, 1};
  CHECK(stratified_folds(rare, 3, 1).warnings.size() == 1);
  CHECK_THROWS_AS(stratified_folds(rare, 1, 1), ConfigError);
  CHECK_THROWS_AS(stratified_folds(rare, 6, 1), InputError);
}

TEST_CASE("k-fold driver") {
  std::vector<int> strata(20, 0);
  for (std::size_t i = 0; i < 20; i += 2) strata[i] = 1;

  SUBCASE("each fold validates once on its own indices") {
    const auto r = kfold_cv(
        strata, 4, 3,
        [&](std::size_t, std::span<const std::size_t> tr, std::span<const std::size_t> va) {
          CHECK(tr.size() + va.size() == 20);
          for (std::size_t v : va) CHECK(std::find(tr.begin(), tr.end(), v) == tr.end());
          FoldResult f;
          f.val = {0.5, 0.5, 0.5};
          return f;
        },
        2);
    REQUIRE(r.folds.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(r.folds[i].fold == i);
    CHECK(r.mean.f1 == 0.5);
  }
  SUBCASE("identical folds average to any single fold") {
    std::vector<FoldResult> folds(4);
    for (auto& f : folds) f.val = {0.8, 0.6, 2 * 0.8 * 0.6 / 1.4};
    const auto m = mean_metrics(folds);
    CHECK(m.precision == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(m.f1 == doctest::Approx(folds[0].val.f1).epsilon(1e-15));
  }
  SUBCASE("model driver trains one model per fold") {
    const ModelConfig model = toy_model();
    TrainConfig cfg;
    cfg.epochs = 1;
    const auto r = kfold_cv(init_params(model, 1), model, cfg, separable_set(24, 4), 4, 2);
    REQUIRE(r.folds.size() == 4);
    for (const auto& f : r.folds) {
      CHECK(f.val_size == 6);
      CHECK(f.train_size == 18);
      CHECK(f.best_epoch == 1);
    }
  }
}
