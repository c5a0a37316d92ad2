#pragma once

// Dense compute kernels. The functions in cadv::kernels are OpenMP-parallel;
// cadv::kernels::serial holds straightforward single-threaded references with
// the same per-element accumulation order, so both produce bit-identical
// results. Tests compare the two; bench/ times them.
//
// All matrices are row-major. Outputs are overwritten, not accumulated.

#include <cstddef>
#include <span>

namespace cadv::kernels {

// Self-attention geometry: `batch` sequences of `seq_len` rows each, hidden
// size heads * head_dim. Keys at positions >= lengths[b] are masked out.
struct AttentionDims {
  std::size_t batch = 0;
  std::size_t seq_len = 0;
  std::size_t heads = 0;
  std::size_t head_dim = 0;
  std::span<const int> lengths;

  std::size_t hidden() const { return heads * head_dim; }
  std::size_t prob_size() const { return batch * heads * seq_len * seq_len; }
};

// c[m×n] = a[m×k] · b[k×n]
void matmul_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n);
// c[m×n] = a[m×k] · b[n×k]ᵀ
void matmul_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n);
// c[m×n] = a[k×m]ᵀ · b[k×n]
void matmul_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n);

// Scaled dot-product attention. probs receives the softmax weights
// (batch × heads × seq_len × seq_len) for reuse in the backward pass.
void attention_forward(const AttentionDims& dims, std::span<const double> q, std::span<const double> k,
                       std::span<const double> v, std::span<double> out, std::span<double> probs);
void attention_backward(const AttentionDims& dims, std::span<const double> q, std::span<const double> k,
                        std::span<const double> v, std::span<const double> probs,
                        std::span<const double> dout, std::span<double> dq, std::span<double> dk,
                        std::span<double> dv);

namespace serial {

void matmul_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n);
void matmul_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n);
void matmul_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n);
void attention_forward(const AttentionDims& dims, std::span<const double> q, std::span<const double> k,
                       std::span<const double> v, std::span<double> out, std::span<double> probs);
void attention_backward(const AttentionDims& dims, std::span<const double> q, std::span<const double> k,
                        std::span<const double> v, std::span<const double> probs,
                        std::span<const double> dout, std::span<double> dq, std::span<double> dk,
                        std::span<double> dv);

}  // namespace serial

// Threads the parallel kernels may use (omp_get_max_threads, or 1 without OpenMP).
int max_threads();

}  // namespace cadv::kernels
