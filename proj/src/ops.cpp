#include "cadv/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cadv/error.hpp"
#include "cadv/kernels.hpp"
#include "cadv/rng.hpp"

namespace cadv {

using detail::Node;

namespace {

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()) +
                         " differ");
  }
}

void require_rank(const char* op, const Tensor& x, std::size_t rank) {
  if (x.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_str(x.shape()));
  }
}

Node& parent(const Node& self, std::size_t i) { return *self.parents[i]; }

std::vector<double> copy(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) + b.at(i);
  return record_op(a.shape(), std::move(out), {a, b}, [](const Node& self) {
    for (std::size_t p = 0; p < 2; ++p) {
      if (parent(self, p).requires_grad) parent(self, p).accumulate(self.grad);
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) - b.at(i);
  return record_op(a.shape(), std::move(out), {a, b}, [](const Node& self) {
    if (parent(self, 0).requires_grad) parent(self, 0).accumulate(self.grad);
    if (parent(self, 1).requires_grad) {
      std::vector<double> neg(self.grad.size());
      for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -self.grad[i];
      parent(self, 1).accumulate(neg);
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * b.at(i);
  return record_op(a.shape(), std::move(out), {a, b}, [](const Node& self) {
    const Node& a = parent(self, 0);
    const Node& b = parent(self, 1);
    std::vector<double> local(self.grad.size());
    if (a.requires_grad) {
      for (std::size_t i = 0; i < local.size(); ++i) local[i] = self.grad[i] * b.data[i];
      parent(self, 0).accumulate(local);
    }
    if (b.requires_grad) {
      for (std::size_t i = 0; i < local.size(); ++i) local[i] = self.grad[i] * a.data[i];
      parent(self, 1).accumulate(local);
    }
  });
}

Tensor scale(const Tensor& x, double factor) {
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = factor * x.at(i);
  return record_op(x.shape(), std::move(out), {x}, [factor](const Node& self) {
    std::vector<double> local(self.grad.size());
    for (std::size_t i = 0; i < local.size(); ++i) local[i] = factor * self.grad[i];
    parent(self, 0).accumulate(local);
  });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  require_rank("add_bias", x, 2);
  const std::size_t m = x.dim(0);
  const std::size_t n = x.dim(1);
  if (bias.numel() != n) {
    throw DimensionError("add_bias: bias " + shape_str(bias.shape()) + " does not match columns of " +
                         shape_str(x.shape()));
  }
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x.at(i * n + j) + bias.at(j);
  return record_op(x.shape(), std::move(out), {x, bias}, [m, n](const Node& self) {
    if (parent(self, 0).requires_grad) parent(self, 0).accumulate(self.grad);
    if (parent(self, 1).requires_grad) {
      std::vector<double> local(n, 0.0);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) local[j] += self.grad[i * n + j];
      parent(self, 1).accumulate(local);
    }
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  const std::size_t m = a.dim(0);
  const std::size_t k = a.dim(1);
  const std::size_t n = b.dim(1);
  std::vector<double> out(m * n);
  kernels::matmul_nn(a.data(), b.data(), out, m, k, n);
  return record_op({m, n}, std::move(out), {a, b}, [m, k, n](const Node& self) {
    const Node& a = parent(self, 0);
    const Node& b = parent(self, 1);
    if (a.requires_grad) {
      std::vector<double> da(m * k);
      kernels::matmul_nt(self.grad, b.data, da, m, n, k);
      parent(self, 0).accumulate(da);
    }
    if (b.requires_grad) {
      std::vector<double> db(k * n);
      kernels::matmul_tn(a.data, self.grad, db, k, m, n);
      parent(self, 1).accumulate(db);
    }
  });
}

Tensor transpose(const Tensor& x) {
  require_rank("transpose", x, 2);
  const std::size_t m = x.dim(0);
  const std::size_t n = x.dim(1);
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = x.at(i * n + j);
  return record_op({n, m}, std::move(out), {x}, [m, n](const Node& self) {
    std::vector<double> local(m * n);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) local[i * n + j] = self.grad[j * m + i];
    parent(self, 0).accumulate(local);
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  return add_bias(matmul(x, weight), bias);
}

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.at(i) > 0.0 ? x.at(i) : 0.0;
  return record_op(x.shape(), std::move(out), {x}, [](const Node& self) {
    const Node& x = parent(self, 0);
    std::vector<double> local(self.grad.size());
    for (std::size_t i = 0; i < local.size(); ++i) local[i] = x.data[i] > 0.0 ? self.grad[i] : 0.0;
    parent(self, 0).accumulate(local);
  });
}

Tensor gelu(const Tensor& x) {
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = x.at(i);
    out[i] = 0.5 * v * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
  }
  return record_op(x.shape(), std::move(out), {x}, [](const Node& self) {
    const Node& x = parent(self, 0);
    std::vector<double> local(self.grad.size());
    const double inv_sqrt_2pi = std::numbers::inv_sqrtpi / std::numbers::sqrt2;
    for (std::size_t i = 0; i < local.size(); ++i) {
      const double v = x.data[i];
      const double cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
      local[i] = self.grad[i] * (cdf + v * pdf);
    }
    parent(self, 0).accumulate(local);
  });
}

Tensor log(const Tensor& x) {
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(x.at(i));
  return record_op(x.shape(), std::move(out), {x}, [](const Node& self) {
    const Node& x = parent(self, 0);
    std::vector<double> local(self.grad.size());
    for (std::size_t i = 0; i < local.size(); ++i) local[i] = self.grad[i] / x.data[i];
    parent(self, 0).accumulate(local);
  });
}

Tensor clamp_min(const Tensor& x, double floor) {
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(x.at(i), floor);
  return record_op(x.shape(), std::move(out), {x}, [floor](const Node& self) {
    const Node& x = parent(self, 0);
    std::vector<double> local(self.grad.size());
    for (std::size_t i = 0; i < local.size(); ++i) local[i] = x.data[i] > floor ? self.grad[i] : 0.0;
    parent(self, 0).accumulate(local);
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& shift, double eps) {
  require_rank("layer_norm", x, 2);
  const std::size_t m = x.dim(0);
  const std::size_t n = x.dim(1);
  if (gain.numel() != n || shift.numel() != n) {
    throw DimensionError("layer_norm: gain " + shape_str(gain.shape()) + " / shift " + shape_str(shift.shape()) +
                         " do not match " + shape_str(x.shape()));
  }
  std::vector<double> out(m * n);
  std::vector<double> xhat(m * n);
  std::vector<double> inv_std(m);
  const auto xs = x.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = xs.data() + i * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[i * n + j] = (row[j] - mu) * inv_std[i];
      out[i * n + j] = xhat[i * n + j] * gain.at(j) + shift.at(j);
    }
  }
  return record_op(x.shape(), std::move(out), {x, gain, shift},
                   [m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](const Node& self) {
                     const Node& g = parent(self, 1);
                     if (parent(self, 0).requires_grad) {
                       std::vector<double> dx(m * n);
                       for (std::size_t i = 0; i < m; ++i) {
                         double sum_dy = 0.0;
                         double sum_dy_xhat = 0.0;
                         for (std::size_t j = 0; j < n; ++j) {
                           const double dy = self.grad[i * n + j] * g.data[j];
                           sum_dy += dy;
                           sum_dy_xhat += dy * xhat[i * n + j];
                         }
                         const double inv_n = 1.0 / static_cast<double>(n);
                         for (std::size_t j = 0; j < n; ++j) {
                           const double dy = self.grad[i * n + j] * g.data[j];
                           dx[i * n + j] = inv_std[i] * (dy - inv_n * sum_dy - xhat[i * n + j] * inv_n * sum_dy_xhat);
                         }
                       }
                       parent(self, 0).accumulate(dx);
                     }
                     if (g.requires_grad) {
                       std::vector<double> dg(n, 0.0);
                       for (std::size_t i = 0; i < m; ++i)
                         for (std::size_t j = 0; j < n; ++j) dg[j] += self.grad[i * n + j] * xhat[i * n + j];
                       parent(self, 1).accumulate(dg);
                     }
                     if (parent(self, 2).requires_grad) {
                       std::vector<double> db(n, 0.0);
                       for (std::size_t i = 0; i < m; ++i)
                         for (std::size_t j = 0; j < n; ++j) db[j] += self.grad[i * n + j];
                       parent(self, 2).accumulate(db);
                     }
                   });
}

Tensor softmax(const Tensor& x, int axis) {
  const int rank = static_cast<int>(x.rank());
  const int ax = axis < 0 ? axis + rank : axis;
  if (ax < 0 || ax >= rank) {
    throw DimensionError("softmax: axis " + std::to_string(axis) + " invalid for " + shape_str(x.shape()));
  }
  std::size_t outer = 1;
  std::size_t inner = 1;
  for (int d = 0; d < ax; ++d) outer *= x.shape()[static_cast<std::size_t>(d)];
  for (int d = ax + 1; d < rank; ++d) inner *= x.shape()[static_cast<std::size_t>(d)];
  const std::size_t len = x.shape()[static_cast<std::size_t>(ax)];

  std::vector<double> out(x.numel());
  const auto xs = x.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * len * inner + in;
      double mx = -INFINITY;
      for (std::size_t c = 0; c < len; ++c) mx = std::max(mx, xs[base + c * inner]);
      double z = 0.0;
      for (std::size_t c = 0; c < len; ++c) {
        out[base + c * inner] = std::exp(xs[base + c * inner] - mx);
        z += out[base + c * inner];
      }
      for (std::size_t c = 0; c < len; ++c) out[base + c * inner] /= z;
    }
  }
  return record_op(x.shape(), std::move(out), {x}, [outer, inner, len](const Node& self) {
    std::vector<double> local(self.data.size());
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        const std::size_t base = o * len * inner + in;
        double dot = 0.0;
        for (std::size_t c = 0; c < len; ++c) dot += self.grad[base + c * inner] * self.data[base + c * inner];
        for (std::size_t c = 0; c < len; ++c) {
          const std::size_t i = base + c * inner;
          local[i] = self.data[i] * (self.grad[i] - dot);
        }
      }
    }
    parent(self, 0).accumulate(local);
  });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  return record_op({1}, {total}, {x}, [](const Node& self) {
    std::vector<double> local(parent(self, 0).data.size(), self.grad[0]);
    parent(self, 0).accumulate(local);
  });
}

Tensor mean(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  const double n = static_cast<double>(x.numel());
  return record_op({1}, {total / n}, {x}, [n](const Node& self) {
    std::vector<double> local(parent(self, 0).data.size(), self.grad[0] / n);
    parent(self, 0).accumulate(local);
  });
}

Tensor gather_rows(const Tensor& table, std::span<const int> indices) {
  require_rank("gather_rows", table, 2);
  const std::size_t rows = table.dim(0);
  const std::size_t cols = table.dim(1);
  if (indices.empty()) throw DimensionError("gather_rows: empty index list");
  std::vector<double> out(indices.size() * cols);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const int r = indices[i];
    if (r < 0 || static_cast<std::size_t>(r) >= rows) {
      throw InputError("gather_rows: index " + std::to_string(r) + " out of range for " + shape_str(table.shape()));
    }
    std::copy_n(table.data().begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(r) * cols), cols,
                out.begin() + static_cast<std::ptrdiff_t>(i * cols));
  }
  std::vector<int> idx(indices.begin(), indices.end());
  return record_op({indices.size(), cols}, std::move(out), {table},
                   [idx = std::move(idx), rows, cols](const Node& self) {
                     std::vector<double> local(rows * cols, 0.0);
                     for (std::size_t i = 0; i < idx.size(); ++i) {
                       double* dst = local.data() + static_cast<std::size_t>(idx[i]) * cols;
                       for (std::size_t j = 0; j < cols; ++j) dst[j] += self.grad[i * cols + j];
                     }
                     parent(self, 0).accumulate(local);
                   });
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  require_rank("concat_rows", a, 2);
  require_rank("concat_rows", b, 2);
  if (a.dim(1) != b.dim(1)) {
    throw DimensionError("concat_rows: column mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  std::vector<double> out = copy(a.data());
  out.insert(out.end(), b.data().begin(), b.data().end());
  const std::size_t split = a.numel();
  return record_op({a.dim(0) + b.dim(0), a.dim(1)}, std::move(out), {a, b}, [split](const Node& self) {
    const std::span<const double> g(self.grad);
    if (parent(self, 0).requires_grad) parent(self, 0).accumulate(g.subspan(0, split));
    if (parent(self, 1).requires_grad) parent(self, 1).accumulate(g.subspan(split));
  });
}

Tensor pick(const Tensor& x, std::span<const int> columns) {
  require_rank("pick", x, 2);
  const std::size_t m = x.dim(0);
  const std::size_t n = x.dim(1);
  if (columns.size() != m) {
    throw DimensionError("pick: " + std::to_string(columns.size()) + " columns for " + shape_str(x.shape()));
  }
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (columns[i] < 0 || static_cast<std::size_t>(columns[i]) >= n) {
      throw InputError("pick: column " + std::to_string(columns[i]) + " out of range for " + shape_str(x.shape()));
    }
    out[i] = x.at(i, static_cast<std::size_t>(columns[i]));
  }
  std::vector<int> cols(columns.begin(), columns.end());
  return record_op({m}, std::move(out), {x}, [cols = std::move(cols), m, n](const Node& self) {
    std::vector<double> local(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) local[i * n + static_cast<std::size_t>(cols[i])] = self.grad[i];
    parent(self, 0).accumulate(local);
  });
}

Tensor cosine_similarity(const Tensor& u, const Tensor& v) {
  if (u.numel() != v.numel()) {
    throw DimensionError("cosine_similarity: shapes " + shape_str(u.shape()) + " and " + shape_str(v.shape()));
  }
  double uv = 0.0;
  double uu = 0.0;
  double vv = 0.0;
  for (std::size_t i = 0; i < u.numel(); ++i) {
    uv += u.at(i) * v.at(i);
    uu += u.at(i) * u.at(i);
    vv += v.at(i) * v.at(i);
  }
  if (uu == 0.0 || vv == 0.0) throw DegenerateInputError("cosine_similarity: zero-norm input");
  const double nu = std::sqrt(uu);
  const double nv = std::sqrt(vv);
  const double cos = uv / (nu * nv);
  return record_op({1}, {cos}, {u, v}, [nu, nv, cos](const Node& self) {
    const Node& u = parent(self, 0);
    const Node& v = parent(self, 1);
    const double g = self.grad[0];
    std::vector<double> local(u.data.size());
    // d cos / du = v/(|u||v|) - cos * u/|u|^2
    if (u.requires_grad) {
      for (std::size_t i = 0; i < local.size(); ++i) local[i] = g * (v.data[i] / (nu * nv) - cos * u.data[i] / (nu * nu));
      parent(self, 0).accumulate(local);
    }
    if (v.requires_grad) {
      for (std::size_t i = 0; i < local.size(); ++i) local[i] = g * (u.data[i] / (nu * nv) - cos * v.data[i] / (nv * nv));
      parent(self, 1).accumulate(local);
    }
  });
}

Tensor normalize_rows(const Tensor& x) {
  require_rank("normalize_rows", x, 2);
  const std::size_t m = x.dim(0);
  const std::size_t n = x.dim(1);
  std::vector<double> out(m * n);
  std::vector<double> norms(m);
  for (std::size_t i = 0; i < m; ++i) {
    double ss = 0.0;
    for (std::size_t j = 0; j < n; ++j) ss += x.at(i * n + j) * x.at(i * n + j);
    if (ss == 0.0) throw DegenerateInputError("normalize_rows: row " + std::to_string(i) + " has zero norm");
    norms[i] = std::sqrt(ss);
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x.at(i * n + j) / norms[i];
  }
  return record_op(x.shape(), std::move(out), {x}, [m, n, norms = std::move(norms)](const Node& self) {
    std::vector<double> local(m * n);
    for (std::size_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += self.grad[i * n + j] * self.data[i * n + j];
      for (std::size_t j = 0; j < n; ++j) {
        local[i * n + j] = (self.grad[i * n + j] - dot * self.data[i * n + j]) / norms[i];
      }
    }
    parent(self, 0).accumulate(local);
  });
}

Tensor logsumexp_rows(const Tensor& x, bool exclude_diagonal) {
  require_rank("logsumexp_rows", x, 2);
  const std::size_t m = x.dim(0);
  const std::size_t n = x.dim(1);
  if (exclude_diagonal && n < 2) throw DimensionError("logsumexp_rows: nothing left after excluding diagonal");
  std::vector<double> out(m);
  std::vector<double> weights(m * n, 0.0);  // softmax over the included entries
  for (std::size_t i = 0; i < m; ++i) {
    double mx = -INFINITY;
    for (std::size_t j = 0; j < n; ++j) {
      if (!(exclude_diagonal && i == j)) mx = std::max(mx, x.at(i * n + j));
    }
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (exclude_diagonal && i == j) continue;
      weights[i * n + j] = std::exp(x.at(i * n + j) - mx);
      z += weights[i * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) weights[i * n + j] /= z;
    out[i] = mx + std::log(z);
  }
  return record_op({m}, std::move(out), {x}, [m, n, weights = std::move(weights)](const Node& self) {
    std::vector<double> local(m * n);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) local[i * n + j] = self.grad[i] * weights[i * n + j];
    parent(self, 0).accumulate(local);
  });
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t seq_len, std::size_t heads,
                 std::span<const int> lengths) {
  require_rank("attention", q, 2);
  require_same_shape("attention", q, k);
  require_same_shape("attention", q, v);
  const std::size_t rows = q.dim(0);
  const std::size_t hidden = q.dim(1);
  if (heads == 0 || hidden % heads != 0) {
    throw DimensionError("attention: hidden size " + std::to_string(hidden) + " not divisible by " +
                         std::to_string(heads) + " heads");
  }
  if (seq_len == 0 || rows != lengths.size() * seq_len) {
    throw DimensionError("attention: " + shape_str(q.shape()) + " is not " + std::to_string(lengths.size()) +
                         " sequences of length " + std::to_string(seq_len));
  }
  for (int len : lengths) {
    if (len < 1 || static_cast<std::size_t>(len) > seq_len) {
      throw InputError("attention: sequence length " + std::to_string(len) + " outside [1, " +
                       std::to_string(seq_len) + "]");
    }
  }
  auto lens = std::make_shared<std::vector<int>>(lengths.begin(), lengths.end());
  kernels::AttentionDims dims{lengths.size(), seq_len, heads, hidden / heads, *lens};
  std::vector<double> out(rows * hidden);
  auto probs = std::make_shared<std::vector<double>>(dims.prob_size());
  kernels::attention_forward(dims, q.data(), k.data(), v.data(), out, *probs);

  return record_op(q.shape(), std::move(out), {q, k, v}, [dims, lens, probs](const Node& self) {
    const Node& q = parent(self, 0);
    const Node& k = parent(self, 1);
    const Node& v = parent(self, 2);
    std::vector<double> dq(q.data.size());
    std::vector<double> dk(k.data.size());
    std::vector<double> dv(v.data.size());
    kernels::attention_backward(dims, q.data, k.data, v.data, *probs, self.grad, dq, dk, dv);
    if (q.requires_grad) parent(self, 0).accumulate(dq);
    if (k.requires_grad) parent(self, 1).accumulate(dk);
    if (v.requires_grad) parent(self, 2).accumulate(dv);
  });
}

Tensor dropout(const Tensor& x, double p, Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw ConfigError("dropout probability must be in [0, 1)");
  if (p == 0.0) return x;
  std::vector<double> mask(x.numel());
  const double keep = 1.0 / (1.0 - p);
  for (double& m : mask) m = rng.bernoulli(p) ? 0.0 : keep;
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.at(i) * mask[i];
  return record_op(x.shape(), std::move(out), {x}, [mask = std::move(mask)](const Node& self) {
    std::vector<double> local(mask.size());
    for (std::size_t i = 0; i < local.size(); ++i) local[i] = self.grad[i] * mask[i];
    parent(self, 0).accumulate(local);
  });
}

}  // namespace cadv
