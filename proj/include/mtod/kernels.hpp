#pragma once

// Dense kernels behind the transformer. The functions in mtod::kernels are
// OpenMP-parallel over independent rows or heads; mtod::kernels::reference
// holds plain serial versions used by the tests and the benchmark.
//
// All matrices are row-major. Every parallel kernel computes each output
// element with the same operation order regardless of thread count and of
// how many rows are processed together, so a single-row call reproduces the
// corresponding row of a full call bit for bit.

#include <span>

namespace mtod::kernels {

// out[rows x n] = in[rows x k] * w[k x n] + bias[n]   (bias may be empty)
template <typename T>
void matmul(std::span<T> out, std::span<const T> in, std::span<const T> w,
            std::span<const T> bias, int rows, int k, int n);

// din[rows x k] += dout[rows x n] * w^T
template <typename T>
void matmul_backward_input(std::span<T> din, std::span<const T> dout, std::span<const T> w,
                           int rows, int k, int n);

// dw[k x n] += in^T * dout;  dbias[n] += column sums of dout (dbias may be empty)
template <typename T>
void matmul_backward_weight(std::span<T> dw, std::span<T> dbias, std::span<const T> in,
                            std::span<const T> dout, int rows, int k, int n);

// Causal multi-head attention over a packed qkv[len x 3d] buffer
// (queries, keys, values side by side). probs is [heads x len x len];
// entries above the diagonal are written as zero.
template <typename T>
void attention(std::span<T> out, std::span<T> probs, std::span<const T> qkv, int len, int d,
               int heads);

// One query row against `len` cached key/value rows (each of width d,
// stride `stride`). Writes the head-concatenated output row and, if
// non-empty, the per-head probabilities [heads x len].
template <typename T>
void attention_row(std::span<T> out, std::span<T> probs, std::span<const T> query,
                   const T* keys, const T* values, int stride, int len, int d, int heads);

// dqkv[len x 3d] += gradient of attention w.r.t. its packed input.
template <typename T>
void attention_backward(std::span<T> dqkv, std::span<const T> dout, std::span<const T> probs,
                        std::span<const T> qkv, int len, int d, int heads);

namespace reference {

template <typename T>
void matmul(std::span<T> out, std::span<const T> in, std::span<const T> w,
            std::span<const T> bias, int rows, int k, int n);

template <typename T>
void matmul_backward_input(std::span<T> din, std::span<const T> dout, std::span<const T> w,
                           int rows, int k, int n);

template <typename T>
void matmul_backward_weight(std::span<T> dw, std::span<T> dbias, std::span<const T> in,
                            std::span<const T> dout, int rows, int k, int n);

template <typename T>
void attention(std::span<T> out, std::span<T> probs, std::span<const T> qkv, int len, int d,
               int heads);

template <typename T>
void attention_backward(std::span<T> dqkv, std::span<const T> dout, std::span<const T> probs,
                        std::span<const T> qkv, int len, int d, int heads);

}  // namespace reference

}  // namespace mtod::kernels
