#pragma once

// Reference computations written directly from the definitions, on plain
// vectors, sharing no code with the library. Tests compare library results
// against these.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;

inline Mat random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& gen, double lo = -1.0,
                         double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Mat m(rows, std::vector<double>(cols));
  for (auto& r : m) {
    for (auto& v : r) v = dist(gen);
  }
  return m;
}

inline std::vector<double> flatten(const Mat& m) {
  std::vector<double> out;
  for (const auto& r : m) out.insert(out.end(), r.begin(), r.end());
  return out;
}

inline Mat matmul(const Mat& a, const Mat& b) {
  Mat c(a.size(), std::vector<double>(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b[0].size(); ++j) {
      long double s = 0.0L;
      for (std::size_t k = 0; k < b.size(); ++k) s += static_cast<long double>(a[i][k]) * b[k][j];
      c[i][j] = static_cast<double>(s);
    }
  }
  return c;
}

inline std::vector<double> softmax(const std::vector<double>& x) {
  double m = *std::max_element(x.begin(), x.end());
  std::vector<double> e(x.size());
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) z += e[i] = std::exp(x[i] - m);
  for (auto& v : e) v /= z;
  return e;
}

// −(1/N) Σ log p(y_i)
inline double cross_entropy(const Mat& probs, const std::vector<int>& labels) {
  double s = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) s -= std::log(std::max(probs[i][labels[i]], 1e-12));
  return s / static_cast<double>(probs.size());
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

// Explicit loop over all 2N anchors: the positive is the anchor's other view,
// the denominator every other pooled vector.
inline double nt_xent(const Mat& z, const Mat& z_adv, double tau) {
  const std::size_t n = z.size();
  Mat pool = z;
  pool.insert(pool.end(), z_adv.begin(), z_adv.end());
  double total = 0.0;
  for (std::size_t a = 0; a < 2 * n; ++a) {
    const std::size_t positive = a < n ? a + n : a - n;
    double denom = 0.0;
    for (std::size_t k = 0; k < 2 * n; ++k) {
      if (k != a) denom += std::exp(cosine(pool[a], pool[k]) / tau);
    }
    total += -std::log(std::exp(cosine(pool[a], pool[positive]) / tau) / denom);
  }
  return total / static_cast<double>(2 * n);
}

// Single-sequence multi-head attention; keys at positions >= len are ignored.
inline Mat attention(const Mat& q, const Mat& k, const Mat& v, std::size_t heads, std::size_t len) {
  const std::size_t t = q.size();
  const std::size_t hidden = q[0].size();
  const std::size_t dh = hidden / heads;
  Mat out(t, std::vector<double>(hidden, 0.0));
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < t; ++i) {
      std::vector<double> scores;
      for (std::size_t j = 0; j < len; ++j) {
        double s = 0.0;
        for (std::size_t d = 0; d < dh; ++d) s += q[i][h * dh + d] * k[j][h * dh + d];
        scores.push_back(s / std::sqrt(static_cast<double>(dh)));
      }
      const auto p = softmax(scores);
      for (std::size_t j = 0; j < len; ++j) {
        for (std::size_t d = 0; d < dh; ++d) out[i][h * dh + d] += p[j] * v[j][h * dh + d];
      }
    }
  }
  return out;
}

struct Prf {
  double precision, recall, f1;
};

// Counts by walking the (prediction, label) pairs.
inline Prf binary_prf(const std::vector<int>& pred, const std::vector<int>& gold, int positive) {
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == positive && gold[i] == positive) ++tp;
    if (pred[i] == positive && gold[i] != positive) ++fp;
    if (pred[i] != positive && gold[i] == positive) ++fn;
  }
  const double p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  const double r = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  return {p, r, p + r > 0 ? 2 * p * r / (p + r) : 0.0};
}

}  // namespace oracle
