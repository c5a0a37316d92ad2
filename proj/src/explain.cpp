#include "cadv/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include <Eigen/Dense>

#include "cadv/config.hpp"
#include "cadv/error.hpp"
#include "cadv/ops.hpp"

namespace cadv {

std::vector<double> integrated_gradients(const ScalarFn& f, const Tensor& input, const Tensor& baseline,
                                         std::size_t steps) {
  if (steps == 0) throw ConfigError("integrated_gradients: steps must be at least 1");
  if (input.shape() != baseline.shape()) {
    throw DimensionError("integrated_gradients: input " + shape_str(input.shape()) + " vs baseline " +
                         shape_str(baseline.shape()));
  }
  const auto x = input.data();
  const auto b = baseline.data();
  std::vector<double> total(x.size(), 0.0);
  std::vector<double> point(x.size());
  for (std::size_t k = 0; k < steps; ++k) {
    const double alpha = (static_cast<double>(k) + 0.5) / static_cast<double>(steps);
    for (std::size_t i = 0; i < x.size(); ++i) point[i] = b[i] + alpha * (x[i] - b[i]);
    Tensor at = Tensor::from(input.shape(), point, /*requires_grad=*/true);
    Tensor out = f(at);
    if (out.numel() != 1) throw DimensionError("integrated_gradients: f must return a scalar");
    if (!out.requires_grad()) continue;  // f does not depend on its input
    backward(out);
    const auto g = at.grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!std::isfinite(g[i])) throw NonFiniteError("integrated_gradients: non-finite gradient");
      total[i] += g[i];
    }
  }
  for (std::size_t i = 0; i < total.size(); ++i) total[i] = (x[i] - b[i]) * total[i] / static_cast<double>(steps);
  return total;
}

double AttributionResult::relative_gap() const {
  const double delta = std::abs(output - baseline_output);
  return delta == 0.0 ? std::abs(completeness_gap) : std::abs(completeness_gap) / delta;
}

AttributionResult integrated_gradients(const ModelParams& params, const ModelConfig& config,
                                       const TokenizedExample& example, const Vocab& vocab, int target_class,
                                       std::size_t steps) {
  const auto len = static_cast<std::size_t>(example.attention_len);
  if (len == 0 || len > example.ids.size()) throw InputError("integrated_gradients: example has no tokens");

  // Gradients should reach the token rows only, and params stay untouched.
  ModelParams frozen = params.clone();
  for (auto& t : frozen.all()) t.set_requires_grad(false);

  std::vector<int> ids(example.ids.begin(), example.ids.begin() + static_cast<std::ptrdiff_t>(len));
  std::vector<int> baseline_ids = ids;
  for (int& id : baseline_ids) {
    if (id != kClsId && id != kSepId) id = kPadId;
  }
  const Tensor input = gather_rows(frozen.embedding, ids);
  const Tensor baseline = gather_rows(frozen.embedding, baseline_ids);
  const std::vector<int> lengths = {static_cast<int>(len)};

  AttributionResult result;
  result.true_label = example.label;
  const Tensor logits = forward_embedded(frozen, config, input, lengths, len).logits;
  result.predicted = predict(logits)[0];
  result.target_class = target_class < 0 ? result.predicted : target_class;
  if (static_cast<std::size_t>(result.target_class) >= config.n_classes) {
    throw InputError("integrated_gradients: target class " + std::to_string(result.target_class) + " out of range");
  }
  const std::vector<int> target = {result.target_class};
  auto score = [&](const Tensor& rows) {
    return sum(pick(forward_embedded(frozen, config, rows, lengths, len).logits, target));
  };
  result.output = logits.at(0, static_cast<std::size_t>(result.target_class));
  result.baseline_output = score(baseline).item();

  const auto per_element = integrated_gradients(score, input, baseline, steps);
  double total = 0.0;
  for (std::size_t t = 0; t < len; ++t) {
    double s = 0.0;
    for (std::size_t d = 0; d < config.d_h; ++d) s += per_element[t * config.d_h + d];
    result.tokens.push_back(vocab.token(ids[t]));
    result.scores.push_back(s);
    total += s;
  }
  result.completeness_gap = total - (result.output - result.baseline_output);
  return result;
}

namespace {

double max_magnitude(const AttributionResult& r) {
  double m = 0.0;
  for (double s : r.scores) m = std::max(m, std::abs(s));
  return m;
}

std::string html_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_ansi(const AttributionResult& result) {
  const double peak = max_magnitude(result);
  std::string out;
  for (std::size_t i = 0; i < result.tokens.size(); ++i) {
    if (i > 0) out += ' ';
    const double s = i < result.scores.size() ? result.scores[i] : 0.0;
    if (s == 0.0 || peak == 0.0) {
      out += result.tokens[i];
      continue;
    }
    // Fade from white to full green or red as the intensity goes to 1.
    const auto fade = static_cast<int>(std::lround(255.0 * (1.0 - std::abs(s) / peak)));
    char code[48];
    if (s > 0.0) {
      std::snprintf(code, sizeof code, "\x1b[30;48;2;%d;255;%dm", fade, fade);
    } else {
      std::snprintf(code, sizeof code, "\x1b[30;48;2;255;%d;%dm", fade, fade);
    }
    out += code;
    out += result.tokens[i];
    out += "\x1b[0m";
  }
  return out;
}

std::string render_html(const AttributionResult& result) {
  const double peak = max_magnitude(result);
  std::string out = "<p class=\"attribution\">";
  for (std::size_t i = 0; i < result.tokens.size(); ++i) {
    if (i > 0) out += ' ';
    const double s = i < result.scores.size() ? result.scores[i] : 0.0;
    const std::string token = html_escape(result.tokens[i]);
    if (s == 0.0 || peak == 0.0) {
      out += token;
      continue;
    }
    char style[80];
    std::snprintf(style, sizeof style, "background-color:rgba(%s,%.3f)", s > 0.0 ? "0,170,0" : "210,0,0",
                  std::abs(s) / peak);
    out += "<span style=\"";
    out += style;
    out += "\">" + token + "</span>";
  }
  out += "</p>";
  return out;
}

Tensor project_2d(const Tensor& vectors) {
  if (vectors.rank() != 2) throw DimensionError("project_2d: expected N × d, got " + shape_str(vectors.shape()));
  const std::size_t n = vectors.dim(0);
  const std::size_t d = vectors.dim(1);
  if (d < 2) throw DimensionError("project_2d: need at least 2 columns");
  if (n < 2) throw InputError("project_2d: need at least 2 points");

  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = vectors.at(i, j);
  }
  x.rowwise() -= x.colwise().mean();
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw DegenerateInputError("project_2d: eigen decomposition failed");

  // Eigenvalues come out ascending.
  Eigen::MatrixXd axes(static_cast<Eigen::Index>(d), 2);
  axes.col(0) = eig.eigenvectors().col(static_cast<Eigen::Index>(d - 1));
  axes.col(1) = eig.eigenvectors().col(static_cast<Eigen::Index>(d - 2));
  for (Eigen::Index c = 0; c < 2; ++c) {
    Eigen::Index arg = 0;
    axes.col(c).cwiseAbs().maxCoeff(&arg);
    if (axes(arg, c) < 0.0) axes.col(c) *= -1.0;
  }
  const Eigen::MatrixXd projected = x * axes;
  std::vector<double> out(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    out[i * 2] = projected(static_cast<Eigen::Index>(i), 0);
    out[i * 2 + 1] = projected(static_cast<Eigen::Index>(i), 1);
  }
  return Tensor::from({n, 2}, std::move(out));
}

void write_embedding_csv(std::ostream& out, const Tensor& points, std::span<const std::string> labels,
                         std::span<const std::string> diseases, const std::string& representation) {
  if (points.rank() != 2 || points.dim(1) != 2 || points.dim(0) != labels.size() ||
      labels.size() != diseases.size()) {
    throw DimensionError("write_embedding_csv: points, labels and diseases disagree");
  }
  out << "# representation=" << representation << '\n';
  out << "x,y,label,disease\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out << format_double(points.at(i, 0)) << ',' << format_double(points.at(i, 1)) << ',' << labels[i] << ','
        << diseases[i] << '\n';
  }
}

}  // namespace cadv
