#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "cadv/error.hpp"
#include "cadv/explain.hpp"
#include "cadv/ops.hpp"

using namespace cadv;

namespace {

ModelConfig small_model(std::size_t vocab) {
  ModelConfig c;
  c.vocab_size = vocab;
  c.d_h = 16;
  c.n_layers = 2;
  c.n_heads = 2;
  c.d_ff = 32;
  c.max_len = 10;
  c.d_proj = 8;
  c.embed_init_std = 0.5;
  return c;
}

}  // namespace

TEST_CASE("linear model attributions are exact") {
  const Tensor w = Tensor::from({4}, {0.5, -2.0, 3.0, 0.25});
  const Tensor x = Tensor::from({4}, {1.0, 2.0, -1.0, 4.0});
  const Tensor zero = Tensor::zeros({4});
  const auto f = [&](const Tensor& in) { return sum(mul(in, w)); };
  const auto a = integrated_gradients(f, x, zero, 8);
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(a[i] - w.at(i) * x.at(i)) < 1e-12);

  const auto same = integrated_gradients(f, x, x, 8);
  for (double v : same) CHECK(v == 0.0);
  CHECK_THROWS_AS(integrated_gradients(f, x, zero, 0), ConfigError);
}

TEST_CASE("quadratic path integral converges as steps grow") {
  // f(x) = Σ x³; exact attribution along the straight path from 0 is x³.
  const Tensor x = Tensor::from({3}, {0.7, -1.1, 1.5});
  const auto f = [](const Tensor& in) { return sum(mul(in, mul(in, in))); };
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t steps : {8, 16, 32, 64}) {
    const auto a = integrated_gradients(f, x, Tensor::zeros({3}), steps);
    double err = 0.0;
    for (std::size_t i = 0; i < 3; ++i) err = std::max(err, std::abs(a[i] - std::pow(x.at(i), 3)));
    CHECK(err <= prev);
    prev = err;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("model attributions cover non-PAD tokens and satisfy completeness") {
  const Vocab vocab = Vocab::build({"my mum has a fever", "this traffic is a headache"}, 1);
  const ModelConfig c = small_model(vocab.size());
  const auto p = init_params(c, 3);
  auto ex = encode("my mum has a fever", vocab, c.max_len);
  ex.label = 1;
  const Tensor before = p.embedding.clone();

  const auto r = integrated_gradients(p, c, ex, vocab, -1, 64);
  REQUIRE(r.tokens.size() == 7);
  CHECK(r.scores.size() == r.tokens.size());
  CHECK(r.tokens.front() == "[CLS]");
  CHECK(r.tokens.back() == "[SEP]");
  CHECK(r.scores.front() == 0.0);
  CHECK(r.scores.back() == 0.0);
  CHECK(r.target_class == r.predicted);
  CHECK(r.true_label == 1);
  CHECK(r.relative_gap() < 0.05);
  CHECK(std::equal(before.data().begin(), before.data().end(), p.embedding.data().begin()));
  CHECK_FALSE(p.embedding.has_grad());
}

TEST_CASE("rendering") {
  AttributionResult r;
  r.tokens = {"a", "b", "c"};
  r.scores = {0.0, 0.0, 0.0};
  CHECK(render_ansi(r) == "a b c");
  CHECK(render_html(r) == "<p class=\"attribution\">a b c</p>");

  r.scores = {0.0, 2.0, 0.0};
  CHECK(render_ansi(r) == "a \x1b[30;48;2;0;255;0mb\x1b[0m c");
  CHECK(render_html(r) == "<p class=\"attribution\">a <span style=\"background-color:rgba(0,170,0,1.000)\">b</span> c</p>");

  r.scores = {-1.0, 2.0, 0.5};
  r.tokens = {"<x>", "b", "c"};
  const std::string html = render_html(r);
  CHECK(html.find("&lt;x&gt;") != std::string::npos);
  CHECK(html.find("rgba(210,0,0,0.500)") != std::string::npos);
  CHECK(render_html(r) == html);
  CHECK(render_ansi(r) == render_ansi(r));
}

TEST_CASE("principal-component projection") {
  SUBCASE("centred 2D data keeps pairwise distances") {
    const Tensor x = Tensor::from({4, 2}, {1, 2, -1, 0.5, 0.5, -1.5, -0.5, -1});
    const Tensor y = project_2d(x);
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        const double dx = std::hypot(x.at(i, 0) - x.at(j, 0), x.at(i, 1) - x.at(j, 1));
        const double dy = std::hypot(y.at(i, 0) - y.at(j, 0), y.at(i, 1) - y.at(j, 1));
        CHECK(std::abs(dx - dy) < 1e-9);
      }
    }
  }
  SUBCASE("collinear points collapse onto the first axis") {
    const Tensor x = Tensor::from({4, 3}, {1, 2, 3, 2, 4, 6, -1, -2, -3, 0.5, 1, 1.5});
    const Tensor y = project_2d(x);
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(y.at(i, 1)) < 1e-9);
  }
  SUBCASE("shift invariance and uncorrelated coordinates") {
    std::mt19937_64 gen(5);
    std::normal_distribution<double> d;
    std::vector<double> v(50 * 6), shifted(50 * 6);
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = d(gen) * static_cast<double>(1 + i % 6);
      shifted[i] = v[i] + 3.0 - static_cast<double>(i % 6);
    }
    const Tensor a = project_2d(Tensor::from({50, 6}, v));
    const Tensor b = project_2d(Tensor::from({50, 6}, shifted));
    for (std::size_t i = 0; i < a.numel(); ++i) CHECK(a.at(i) == doctest::Approx(b.at(i)).epsilon(1e-9));
    double c01 = 0, c00 = 0, c11 = 0;
    for (std::size_t i = 0; i < 50; ++i) {
      c01 += a.at(i, 0) * a.at(i, 1);
      c00 += a.at(i, 0) * a.at(i, 0);
      c11 += a.at(i, 1) * a.at(i, 1);
    }
    CHECK(std::abs(c01) / std::sqrt(c00 * c11) < 1e-9);
    CHECK(c00 >= c11);
  }
  SUBCASE("input errors") {
    CHECK_THROWS_AS(project_2d(Tensor::from({3, 1}, {1, 2, 3})), DimensionError);
    CHECK_THROWS_AS(project_2d(Tensor::from({1, 3}, {1, 2, 3})), InputError);
  }
}

TEST_CASE("embedding CSV layout") {
  const Tensor pts = Tensor::from({2, 2}, {0.5, -1, 2, 0.25});
  const std::vector<std::string> labels = {"health_mention", "figurative_mention"};
  const std::vector<std::string> diseases = {"cough", "stroke"};
  std::ostringstream out;
  write_embedding_csv(out, pts, labels, diseases, "h_cls");
  CHECK(out.str() ==
        "# representation=h_cls\nx,y,label,disease\n0.5,-1,health_mention,cough\n2,0.25,figurative_mention,stroke\n");
}
