#include "mtod/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace mtod::kernels {

namespace {

// Output tile held in registers by the micro-kernel.
constexpr int kTileRows = 6;
constexpr int kTileCols = 32;

// Below this many multiply-adds the parallel region costs more than it saves.
constexpr long long kParallelWork = 1 << 15;

bool worth_parallel(long long work) { return work >= kParallelWork; }

enum class Init { Zero, Bias, Accumulate };

// out[r, j] = init(r, j) + sum_kk a(r, kk) * b[kk, j] over kk ascending, where
// a(r, kk) = a[r * a_row + kk * a_col]. Each element's operation order is
// independent of the tiling and of `rows`.
template <typename T>
void gemm(T* out, const T* a, std::ptrdiff_t a_row, std::ptrdiff_t a_col, const T* b,
          const T* bias, Init init, int rows, int inner, int n) {
    const int row_tiles = (rows + kTileRows - 1) / kTileRows;
    const int col_tiles = (n + kTileCols - 1) / kTileCols;
#pragma omp parallel for collapse(2) schedule(static) if (worth_parallel(1LL * rows * inner * n))
    for (int rt = 0; rt < row_tiles; ++rt) {
        for (int ct = 0; ct < col_tiles; ++ct) {
            const int r0 = rt * kTileRows;
            const int j0 = ct * kTileCols;
            const int rn = std::min(kTileRows, rows - r0);
            const int jn = std::min(kTileCols, n - j0);
            alignas(64) T acc[kTileRows][kTileCols];
            for (int r = 0; r < rn; ++r) {
                T* o = out + static_cast<std::ptrdiff_t>(r0 + r) * n + j0;
                for (int j = 0; j < jn; ++j) {
                    acc[r][j] = init == Init::Zero ? T(0) : init == Init::Bias ? bias[j0 + j] : o[j];
                }
            }
            if (rn == kTileRows && jn == kTileCols) {
                for (int kk = 0; kk < inner; ++kk) {
                    const T* br = b + static_cast<std::ptrdiff_t>(kk) * n + j0;
                    for (int r = 0; r < kTileRows; ++r) {
                        const T x = a[(r0 + r) * a_row + kk * a_col];
#pragma omp simd
                        for (int j = 0; j < kTileCols; ++j) acc[r][j] += x * br[j];
                    }
                }
            } else {
                for (int kk = 0; kk < inner; ++kk) {
                    const T* br = b + static_cast<std::ptrdiff_t>(kk) * n + j0;
                    for (int r = 0; r < rn; ++r) {
                        const T x = a[(r0 + r) * a_row + kk * a_col];
#pragma omp simd
                        for (int j = 0; j < jn; ++j) acc[r][j] += x * br[j];
                    }
                }
            }
            for (int r = 0; r < rn; ++r) {
                T* o = out + static_cast<std::ptrdiff_t>(r0 + r) * n + j0;
                for (int j = 0; j < jn; ++j) o[j] = acc[r][j];
            }
        }
    }
}

}  // namespace

template <typename T>
void matmul(std::span<T> out, std::span<const T> in, std::span<const T> w,
            std::span<const T> bias, int rows, int k, int n) {
    gemm<T>(out.data(), in.data(), k, 1, w.data(), bias.data(), bias.empty() ? Init::Zero : Init::Bias,
            rows, k, n);
}

template <typename T>
void matmul_backward_input(std::span<T> din, std::span<const T> dout, std::span<const T> w,
                           int rows, int k, int n) {
    // din = din + dout * w^T, with w^T materialized so the inner loop is contiguous.
    std::vector<T> wt(static_cast<std::size_t>(k) * n);
    for (int kk = 0; kk < k; ++kk) {
        for (int j = 0; j < n; ++j) wt[static_cast<std::size_t>(j) * k + kk] = w[static_cast<std::size_t>(kk) * n + j];
    }
    gemm<T>(din.data(), dout.data(), n, 1, wt.data(), nullptr, Init::Accumulate, rows, n, k);
}

template <typename T>
void matmul_backward_weight(std::span<T> dw, std::span<T> dbias, std::span<const T> in,
                            std::span<const T> dout, int rows, int k, int n) {
    // dw = dw + in^T * dout: rows of dw are indexed by kk, the inner sum runs over rows.
    gemm<T>(dw.data(), in.data(), 1, k, dout.data(), nullptr, Init::Accumulate, k, rows, n);
    if (!dbias.empty()) {
        for (int r = 0; r < rows; ++r) {
            const T* g = dout.data() + static_cast<std::size_t>(r) * n;
            for (int j = 0; j < n; ++j) dbias[j] += g[j];
        }
    }
}

template <typename T>
void attention_row(std::span<T> out, std::span<T> probs, std::span<const T> query,
                   const T* keys, const T* values, int stride, int len, int d, int heads) {
    const int hd = d / heads;
    const T scale = T(1) / std::sqrt(static_cast<T>(hd));
    std::vector<T> p(static_cast<std::size_t>(len));
    for (int h = 0; h < heads; ++h) {
        const T* q = query.data() + h * hd;
        T maxv = -INFINITY;
        for (int j = 0; j < len; ++j) {
            const T* kj = keys + static_cast<std::size_t>(j) * stride + h * hd;
            T s = 0;
#pragma omp simd reduction(+ : s)
            for (int t = 0; t < hd; ++t) s += q[t] * kj[t];
            p[j] = s * scale;
            maxv = std::max(maxv, p[j]);
        }
        T sum = 0;
        for (int j = 0; j < len; ++j) {
            p[j] = std::exp(p[j] - maxv);
            sum += p[j];
        }
        const T inv = T(1) / sum;
        for (int j = 0; j < len; ++j) p[j] *= inv;
        T* o = out.data() + h * hd;
        std::fill(o, o + hd, T(0));
        for (int j = 0; j < len; ++j) {
            const T* vj = values + static_cast<std::size_t>(j) * stride + h * hd;
#pragma omp simd
            for (int t = 0; t < hd; ++t) o[t] += p[j] * vj[t];
        }
        if (!probs.empty()) std::copy(p.begin(), p.end(), probs.begin() + static_cast<std::size_t>(h) * len);
    }
}

template <typename T>
void attention(std::span<T> out, std::span<T> probs, std::span<const T> qkv, int len, int d,
               int heads) {
    const int stride = 3 * d;
    const T* keys = qkv.data() + d;
    const T* values = qkv.data() + 2 * d;
    std::fill(probs.begin(), probs.end(), T(0));
#pragma omp parallel for schedule(dynamic, 8) if (worth_parallel(1LL * len * len * d))
    for (int i = 0; i < len; ++i) {
        std::vector<T> row_probs(static_cast<std::size_t>(heads) * (i + 1));
        attention_row<T>(out.subspan(static_cast<std::size_t>(i) * d, d), row_probs,
                         qkv.subspan(static_cast<std::size_t>(i) * stride, d), keys, values, stride,
                         i + 1, d, heads);
        for (int h = 0; h < heads; ++h) {
            std::copy(row_probs.begin() + static_cast<std::size_t>(h) * (i + 1),
                      row_probs.begin() + static_cast<std::size_t>(h + 1) * (i + 1),
                      probs.begin() + (static_cast<std::size_t>(h) * len + i) * len);
        }
    }
}

template <typename T>
void attention_backward(std::span<T> dqkv, std::span<const T> dout, std::span<const T> probs,
                        std::span<const T> qkv, int len, int d, int heads) {
    const int hd = d / heads;
    const int stride = 3 * d;
    const T scale = T(1) / std::sqrt(static_cast<T>(hd));
    // Heads touch disjoint columns of dqkv.
#pragma omp parallel for schedule(static) if (worth_parallel(1LL * len * len * d))
    for (int h = 0; h < heads; ++h) {
        std::vector<T> dp(static_cast<std::size_t>(len));
        for (int i = 0; i < len; ++i) {
            const T* p = probs.data() + (static_cast<std::size_t>(h) * len + i) * len;
            const T* go = dout.data() + static_cast<std::size_t>(i) * d + h * hd;
            const T* q = qkv.data() + static_cast<std::size_t>(i) * stride + h * hd;
            T* dq = dqkv.data() + static_cast<std::size_t>(i) * stride + h * hd;
            T dot = 0;
            for (int j = 0; j <= i; ++j) {
                const T* v = qkv.data() + static_cast<std::size_t>(j) * stride + 2 * d + h * hd;
                T* dv = dqkv.data() + static_cast<std::size_t>(j) * stride + 2 * d + h * hd;
                T s = 0;
#pragma omp simd reduction(+ : s)
                for (int t = 0; t < hd; ++t) {
                    s += go[t] * v[t];
                    dv[t] += p[j] * go[t];
                }
                dp[j] = s;
                dot += p[j] * s;
            }
            for (int j = 0; j <= i; ++j) {
                const T ds = p[j] * (dp[j] - dot) * scale;
                const T* kj = qkv.data() + static_cast<std::size_t>(j) * stride + d + h * hd;
                T* dk = dqkv.data() + static_cast<std::size_t>(j) * stride + d + h * hd;
#pragma omp simd
                for (int t = 0; t < hd; ++t) {
                    dq[t] += ds * kj[t];
                    dk[t] += ds * q[t];
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------

namespace reference {

template <typename T>
void matmul(std::span<T> out, std::span<const T> in, std::span<const T> w,
            std::span<const T> bias, int rows, int k, int n) {
    for (int r = 0; r < rows; ++r) {
        for (int j = 0; j < n; ++j) {
            T s = bias.empty() ? T(0) : bias[j];
            for (int kk = 0; kk < k; ++kk) s += in[r * k + kk] * w[kk * n + j];
            out[r * n + j] = s;
        }
    }
}

template <typename T>
void matmul_backward_input(std::span<T> din, std::span<const T> dout, std::span<const T> w,
                           int rows, int k, int n) {
    for (int r = 0; r < rows; ++r) {
        for (int kk = 0; kk < k; ++kk) {
            T s = 0;
            for (int j = 0; j < n; ++j) s += dout[r * n + j] * w[kk * n + j];
            din[r * k + kk] += s;
        }
    }
}

template <typename T>
void matmul_backward_weight(std::span<T> dw, std::span<T> dbias, std::span<const T> in,
                            std::span<const T> dout, int rows, int k, int n) {
    for (int kk = 0; kk < k; ++kk) {
        for (int j = 0; j < n; ++j) {
            T s = 0;
            for (int r = 0; r < rows; ++r) s += in[r * k + kk] * dout[r * n + j];
            dw[kk * n + j] += s;
        }
    }
    if (!dbias.empty()) {
        for (int j = 0; j < n; ++j) {
            T s = 0;
            for (int r = 0; r < rows; ++r) s += dout[r * n + j];
            dbias[j] += s;
        }
    }
}

template <typename T>
void attention(std::span<T> out, std::span<T> probs, std::span<const T> qkv, int len, int d,
               int heads) {
    const int hd = d / heads;
    const int stride = 3 * d;
    const T scale = T(1) / std::sqrt(static_cast<T>(hd));
    for (int h = 0; h < heads; ++h) {
        for (int i = 0; i < len; ++i) {
            T* p = probs.data() + (h * len + i) * len;
            T maxv = -INFINITY;
            for (int j = 0; j < len; ++j) {
                if (j > i) {
                    p[j] = 0;
                    continue;
                }
                T s = 0;
                for (int t = 0; t < hd; ++t) {
                    s += qkv[i * stride + h * hd + t] * qkv[j * stride + d + h * hd + t];
                }
                p[j] = s * scale;
                maxv = std::max(maxv, p[j]);
            }
            T sum = 0;
            for (int j = 0; j <= i; ++j) {
                p[j] = std::exp(p[j] - maxv);
                sum += p[j];
            }
            for (int j = 0; j <= i; ++j) p[j] /= sum;
            for (int t = 0; t < hd; ++t) {
                T s = 0;
                for (int j = 0; j <= i; ++j) s += p[j] * qkv[j * stride + 2 * d + h * hd + t];
                out[i * d + h * hd + t] = s;
            }
        }
    }
}

template <typename T>
void attention_backward(std::span<T> dqkv, std::span<const T> dout, std::span<const T> probs,
                        std::span<const T> qkv, int len, int d, int heads) {
    const int hd = d / heads;
    const int stride = 3 * d;
    const T scale = T(1) / std::sqrt(static_cast<T>(hd));
    for (int h = 0; h < heads; ++h) {
        for (int i = 0; i < len; ++i) {
            const T* p = probs.data() + (h * len + i) * len;
            // Gradient w.r.t. the probabilities, then through the softmax.
            std::vector<T> dp(len, T(0));
            for (int j = 0; j <= i; ++j) {
                for (int t = 0; t < hd; ++t) {
                    dp[j] += dout[i * d + h * hd + t] * qkv[j * stride + 2 * d + h * hd + t];
                    dqkv[j * stride + 2 * d + h * hd + t] += p[j] * dout[i * d + h * hd + t];
                }
            }
            for (int j = 0; j <= i; ++j) {
                T ds = 0;
                for (int m = 0; m <= i; ++m) ds += p[j] * ((j == m ? T(1) : T(0)) - p[m]) * dp[m];
                ds *= scale;
                for (int t = 0; t < hd; ++t) {
                    dqkv[i * stride + h * hd + t] += ds * qkv[j * stride + d + h * hd + t];
                    dqkv[j * stride + d + h * hd + t] += ds * qkv[i * stride + h * hd + t];
                }
            }
        }
    }
}

}  // namespace reference

#define MTOD_INSTANTIATE(T)                                                                        \
    template void matmul<T>(std::span<T>, std::span<const T>, std::span<const T>,                  \
                            std::span<const T>, int, int, int);                                    \
    template void matmul_backward_input<T>(std::span<T>, std::span<const T>, std::span<const T>,   \
                                           int, int, int);                                         \
    template void matmul_backward_weight<T>(std::span<T>, std::span<T>, std::span<const T>,        \
                                            std::span<const T>, int, int, int);                    \
    template void attention<T>(std::span<T>, std::span<T>, std::span<const T>, int, int, int);     \
    template void attention_row<T>(std::span<T>, std::span<T>, std::span<const T>, const T*,       \
                                   const T*, int, int, int, int);                                  \
    template void attention_backward<T>(std::span<T>, std::span<const T>, std::span<const T>,      \
                                        std::span<const T>, int, int, int);                        \
    template void reference::matmul<T>(std::span<T>, std::span<const T>, std::span<const T>,       \
                                       std::span<const T>, int, int, int);                         \
    template void reference::matmul_backward_input<T>(std::span<T>, std::span<const T>,            \
                                                      std::span<const T>, int, int, int);          \
    template void reference::matmul_backward_weight<T>(std::span<T>, std::span<T>,                 \
                                                       std::span<const T>, std::span<const T>,     \
                                                       int, int, int);                             \
    template void reference::attention<T>(std::span<T>, std::span<T>, std::span<const T>, int,     \
                                          int, int);                                               \
    template void reference::attention_backward<T>(std::span<T>, std::span<const T>,               \
                                                   std::span<const T>, std::span<const T>, int,    \
                                                   int, int);

MTOD_INSTANTIATE(float)
MTOD_INSTANTIATE(double)

#undef MTOD_INSTANTIATE

}  // namespace mtod::kernels
