#include "cadv/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cadv::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 15;

inline std::size_t prob_offset(const AttentionDims& d, std::size_t b, std::size_t h) {
  return (b * d.heads + h) * d.seq_len * d.seq_len;
}

// Softmax-weighted sum for one (sequence, head) pair.
void attention_forward_block(const AttentionDims& d, std::size_t b, std::size_t h,
                             std::span<const double> q, std::span<const double> k,
                             std::span<const double> v, std::span<double> out, std::span<double> probs) {
  const std::size_t T = d.seq_len;
  const std::size_t H = d.hidden();
  const std::size_t len = static_cast<std::size_t>(d.lengths[b]);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d.head_dim));
  const std::size_t row0 = b * T;
  const std::size_t col0 = h * d.head_dim;
  double* p = probs.data() + prob_offset(d, b, h);

  for (std::size_t i = 0; i < T; ++i) {
    const double* qi = q.data() + (row0 + i) * H + col0;
    double* pi = p + i * T;
    double mx = -INFINITY;
    for (std::size_t j = 0; j < len; ++j) {
      const double* kj = k.data() + (row0 + j) * H + col0;
      double dot = 0.0;
      for (std::size_t c = 0; c < d.head_dim; ++c) dot += qi[c] * kj[c];
      pi[j] = scale * dot;
      mx = std::max(mx, pi[j]);
    }
    double z = 0.0;
    for (std::size_t j = 0; j < len; ++j) {
      pi[j] = std::exp(pi[j] - mx);
      z += pi[j];
    }
    for (std::size_t j = 0; j < len; ++j) pi[j] /= z;
    for (std::size_t j = len; j < T; ++j) pi[j] = 0.0;

    double* oi = out.data() + (row0 + i) * H + col0;
    std::fill(oi, oi + d.head_dim, 0.0);
    for (std::size_t j = 0; j < len; ++j) {
      const double* vj = v.data() + (row0 + j) * H + col0;
      for (std::size_t c = 0; c < d.head_dim; ++c) oi[c] += pi[j] * vj[c];
    }
  }
}

void attention_backward_block(const AttentionDims& d, std::size_t b, std::size_t h,
                              std::span<const double> q, std::span<const double> k,
                              std::span<const double> v, std::span<const double> probs,
                              std::span<const double> dout, std::span<double> dq, std::span<double> dk,
                              std::span<double> dv) {
  const std::size_t T = d.seq_len;
  const std::size_t H = d.hidden();
  const std::size_t len = static_cast<std::size_t>(d.lengths[b]);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d.head_dim));
  const std::size_t row0 = b * T;
  const std::size_t col0 = h * d.head_dim;
  const double* p = probs.data() + prob_offset(d, b, h);

  for (std::size_t i = 0; i < T; ++i) {
    double* r = dq.data() + (row0 + i) * H + col0;
    std::fill(r, r + d.head_dim, 0.0);
    r = dk.data() + (row0 + i) * H + col0;
    std::fill(r, r + d.head_dim, 0.0);
    r = dv.data() + (row0 + i) * H + col0;
    std::fill(r, r + d.head_dim, 0.0);
  }

  std::vector<double> g(len);
  for (std::size_t i = 0; i < T; ++i) {
    const double* pi = p + i * T;
    const double* doi = dout.data() + (row0 + i) * H + col0;
    double row_dot = 0.0;
    for (std::size_t j = 0; j < len; ++j) {
      const double* vj = v.data() + (row0 + j) * H + col0;
      double dp = 0.0;
      for (std::size_t c = 0; c < d.head_dim; ++c) dp += doi[c] * vj[c];
      g[j] = dp;
      row_dot += pi[j] * dp;
    }
    for (std::size_t j = 0; j < len; ++j) g[j] = scale * (pi[j] * (g[j] - row_dot));

    const double* qi = q.data() + (row0 + i) * H + col0;
    double* dqi = dq.data() + (row0 + i) * H + col0;
    for (std::size_t j = 0; j < len; ++j) {
      const double* kj = k.data() + (row0 + j) * H + col0;
      double* dkj = dk.data() + (row0 + j) * H + col0;
      double* dvj = dv.data() + (row0 + j) * H + col0;
      for (std::size_t c = 0; c < d.head_dim; ++c) {
        dqi[c] += g[j] * kj[c];
        dkj[c] += g[j] * qi[c];
        dvj[c] += pi[j] * doi[c];
      }
    }
  }
}

}  // namespace

void matmul_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n) {
  const bool par = m * k * n >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(m); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* ci = c.data() + i * n;
    std::fill(ci, ci + n, 0.0);
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double aik = a[i * k + kk];
      const double* bk = b.data() + kk * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
    }
  }
}

void matmul_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n) {
  const bool par = m * k * n >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(m); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const double* ai = a.data() + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b.data() + j * k;
      double sum = 0.0;
      for (std::size_t kk = 0; kk < k; ++kk) sum += ai[kk] * bj[kk];
      c[i * n + j] = sum;
    }
  }
}

void matmul_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n) {
  const bool par = m * k * n >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(m); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* ci = c.data() + i * n;
    std::fill(ci, ci + n, 0.0);
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double aki = a[kk * m + i];
      const double* bk = b.data() + kk * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aki * bk[j];
    }
  }
}

void attention_forward(const AttentionDims& dims, std::span<const double> q, std::span<const double> k,
                       std::span<const double> v, std::span<double> out, std::span<double> probs) {
  const auto blocks = static_cast<std::ptrdiff_t>(dims.batch * dims.heads);
#pragma omp parallel for schedule(static) if (blocks > 1)
  for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
    const auto b = static_cast<std::size_t>(blk) / dims.heads;
    const auto h = static_cast<std::size_t>(blk) % dims.heads;
    attention_forward_block(dims, b, h, q, k, v, out, probs);
  }
}

void attention_backward(const AttentionDims& dims, std::span<const double> q, std::span<const double> k,
                        std::span<const double> v, std::span<const double> probs,
                        std::span<const double> dout, std::span<double> dq, std::span<double> dk,
                        std::span<double> dv) {
  const auto blocks = static_cast<std::ptrdiff_t>(dims.batch * dims.heads);
#pragma omp parallel for schedule(static) if (blocks > 1)
  for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
    const auto b = static_cast<std::size_t>(blk) / dims.heads;
    const auto h = static_cast<std::size_t>(blk) % dims.heads;
    attention_backward_block(dims, b, h, q, k, v, probs, dout, dq, dk, dv);
  }
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace serial {

void matmul_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double sum = 0.0;
      for (std::size_t kk = 0; kk < k; ++kk) sum += a[i * k + kk] * b[kk * n + j];
      c[i * n + j] = sum;
    }
  }
}

void matmul_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double sum = 0.0;
      for (std::size_t kk = 0; kk < k; ++kk) sum += a[i * k + kk] * b[j * k + kk];
      c[i * n + j] = sum;
    }
  }
}

void matmul_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double sum = 0.0;
      for (std::size_t kk = 0; kk < k; ++kk) sum += a[kk * m + i] * b[kk * n + j];
      c[i * n + j] = sum;
    }
  }
}

// Written index-by-index against the math, one output element at a time.
void attention_forward(const AttentionDims& d, std::span<const double> q, std::span<const double> k,
                       std::span<const double> v, std::span<double> out, std::span<double> probs) {
  const std::size_t T = d.seq_len;
  const std::size_t H = d.hidden();
  const double scale = 1.0 / std::sqrt(static_cast<double>(d.head_dim));
  auto qat = [&](std::size_t b, std::size_t t, std::size_t h, std::size_t c) { return q[(b * T + t) * H + h * d.head_dim + c]; };
  auto kat = [&](std::size_t b, std::size_t t, std::size_t h, std::size_t c) { return k[(b * T + t) * H + h * d.head_dim + c]; };
  auto vat = [&](std::size_t b, std::size_t t, std::size_t h, std::size_t c) { return v[(b * T + t) * H + h * d.head_dim + c]; };

  for (std::size_t b = 0; b < d.batch; ++b) {
    const auto len = static_cast<std::size_t>(d.lengths[b]);
    for (std::size_t h = 0; h < d.heads; ++h) {
      for (std::size_t i = 0; i < T; ++i) {
        std::vector<double> s(len);
        for (std::size_t j = 0; j < len; ++j) {
          double dot = 0.0;
          for (std::size_t c = 0; c < d.head_dim; ++c) dot += qat(b, i, h, c) * kat(b, j, h, c);
          s[j] = scale * dot;
        }
        const double mx = *std::max_element(s.begin(), s.end());
        double z = 0.0;
        for (std::size_t j = 0; j < len; ++j) {
          s[j] = std::exp(s[j] - mx);
          z += s[j];
        }
        for (std::size_t j = 0; j < T; ++j) {
          probs[((b * d.heads + h) * T + i) * T + j] = j < len ? s[j] / z : 0.0;
        }
        for (std::size_t c = 0; c < d.head_dim; ++c) {
          double acc = 0.0;
          for (std::size_t j = 0; j < len; ++j) acc += probs[((b * d.heads + h) * T + i) * T + j] * vat(b, j, h, c);
          out[(b * T + i) * H + h * d.head_dim + c] = acc;
        }
      }
    }
  }
}

void attention_backward(const AttentionDims& d, std::span<const double> q, std::span<const double> k,
                        std::span<const double> v, std::span<const double> probs,
                        std::span<const double> dout, std::span<double> dq, std::span<double> dk,
                        std::span<double> dv) {
  const std::size_t T = d.seq_len;
  const std::size_t H = d.hidden();
  const double scale = 1.0 / std::sqrt(static_cast<double>(d.head_dim));
  auto idx = [&](std::size_t b, std::size_t t, std::size_t h, std::size_t c) { return (b * T + t) * H + h * d.head_dim + c; };
  auto P = [&](std::size_t b, std::size_t h, std::size_t i, std::size_t j) { return probs[((b * d.heads + h) * T + i) * T + j]; };

  for (std::size_t b = 0; b < d.batch; ++b) {
    const auto len = static_cast<std::size_t>(d.lengths[b]);
    for (std::size_t h = 0; h < d.heads; ++h) {
      // g[i][j] = scale * p_ij * (dP_ij - sum_j' p_ij' dP_ij')
      std::vector<double> g(T * len, 0.0);
      for (std::size_t i = 0; i < T; ++i) {
        std::vector<double> dp(len);
        double row_dot = 0.0;
        for (std::size_t j = 0; j < len; ++j) {
          double acc = 0.0;
          for (std::size_t c = 0; c < d.head_dim; ++c) acc += dout[idx(b, i, h, c)] * v[idx(b, j, h, c)];
          dp[j] = acc;
          row_dot += P(b, h, i, j) * acc;
        }
        for (std::size_t j = 0; j < len; ++j) g[i * len + j] = scale * (P(b, h, i, j) * (dp[j] - row_dot));
      }
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t c = 0; c < d.head_dim; ++c) {
          double aq = 0.0;
          for (std::size_t j = 0; j < len; ++j) aq += g[t * len + j] * k[idx(b, j, h, c)];
          dq[idx(b, t, h, c)] = aq;
          double ak = 0.0;
          double av = 0.0;
          if (t < len) {
            for (std::size_t i = 0; i < T; ++i) {
              ak += g[i * len + t] * q[idx(b, i, h, c)];
              av += P(b, h, i, t) * dout[idx(b, i, h, c)];
            }
          }
          dk[idx(b, t, h, c)] = ak;
          dv[idx(b, t, h, c)] = av;
        }
      }
    }
  }
}

}  // namespace serial

}  // namespace cadv::kernels
