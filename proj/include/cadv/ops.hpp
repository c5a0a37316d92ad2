#pragma once

// Differentiable operators. Each records a backward rule when any input
// requires a gradient (see record_op). Shape errors throw DimensionError
// naming the offending shapes.

#include <cstddef>
#include <span>
#include <vector>

#include "cadv/tensor.hpp"

namespace cadv {

class Rng;

// Elementwise, identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);

// x[m×n] + b[n] broadcast over rows.
Tensor add_bias(const Tensor& x, const Tensor& bias);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);
// x·W + b
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

Tensor relu(const Tensor& x);
// Exact GELU, x·Φ(x).
Tensor gelu(const Tensor& x);
Tensor log(const Tensor& x);
// max(x, floor); gradient is zero where the floor is active.
Tensor clamp_min(const Tensor& x, double floor);

// Row-wise normalization over the last axis of a 2-D tensor, then gain and shift.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& shift, double eps = 1e-5);

// Max-subtracted softmax along `axis` (negative counts from the end).
Tensor softmax(const Tensor& x, int axis = -1);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// out[i] = table[indices[i]]; used for embedding lookup and [CLS] pooling.
Tensor gather_rows(const Tensor& table, std::span<const int> indices);
// Stacks a[m×n] over b[p×n].
Tensor concat_rows(const Tensor& a, const Tensor& b);
// out[i] = x[i, columns[i]] for a 2-D x.
Tensor pick(const Tensor& x, std::span<const int> columns);

// u·v / (‖u‖‖v‖) for equal-length vectors; zero norm throws DegenerateInputError.
Tensor cosine_similarity(const Tensor& u, const Tensor& v);
// Each row scaled to unit L2 norm; a zero row throws DegenerateInputError.
Tensor normalize_rows(const Tensor& x);
// log Σ_j exp(x[i, j]) per row, stabilized; optionally skipping j == i.
Tensor logsumexp_rows(const Tensor& x, bool exclude_diagonal = false);

// Multi-head scaled dot-product attention over `lengths.size()` sequences of
// seq_len rows each (q, k, v are [batch·seq_len × hidden]). Keys at positions
// >= lengths[b] are masked.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t seq_len, std::size_t heads,
                 std::span<const int> lengths);

// Inverted dropout; identity when p == 0.
Tensor dropout(const Tensor& x, double p, Rng& rng);

}  // namespace cadv
