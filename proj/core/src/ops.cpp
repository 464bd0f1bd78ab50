#include "brsr/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>

namespace brsr {

namespace {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapRM = Eigen::Map<MatRM<T>>;
template <typename T>
using MapConstRM = Eigen::Map<const MatRM<T>>;

template <typename T>
std::shared_ptr<TensorNode<T>> make_node(
    Shape shape, std::vector<std::shared_ptr<TensorNode<T>>> parents) {
  auto n = std::make_shared<TensorNode<T>>();
  n->shape = shape;
  n->value.resize(shape.numel());
  for (const auto& p : parents)
    if (p->requires_grad) n->requires_grad = true;
  n->parents = std::move(parents);
  return n;
}

// Returns the parent's gradient buffer, or nullptr when gradient flow to this
// parent is not needed.
template <typename T>
T* parent_grad(TensorNode<T>& node, std::size_t i) {
  TensorNode<T>& p = *node.parents[i];
  if (!p.requires_grad) return nullptr;
  p.ensure_grad();
  return p.grad.data();
}

// Cheap non-finite guard: a single vectorizable summation pass. NaN and Inf
// both poison the sum.
template <typename T>
void guard_finite(std::span<const T> v, const char* what) {
  T acc = T(0);
  for (T x : v) acc += x;
  if (!std::isfinite(static_cast<double>(acc)))
    fail(ErrorKind::Numeric, std::string(what) + ": non-finite values");
}

}  // namespace

int Padding::resolve(int kernel_size) const {
  if (mode == Mode::Explicit) {
    BRSR_REQUIRE(amount >= 0, ErrorKind::Config, "padding must be >= 0");
    return amount;
  }
  BRSR_REQUIRE(kernel_size % 2 == 1, ErrorKind::Config,
               "same padding requires an odd kernel size");
  return (kernel_size - 1) / 2;
}

template <typename T>
void check_finite(const Tensor<T>& x, const char* what) {
  if (!all_finite(x.data()))
    fail(ErrorKind::Numeric, std::string(what) + ": non-finite values");
}

// ---------------------------------------------------------------------------
// conv1d: im2col + GEMM.
// ---------------------------------------------------------------------------

namespace {

template <typename T>
void im2col(const T* in, std::size_t B, std::size_t cin, std::size_t L,
            std::size_t K, int stride, int pad, std::size_t lout, T* col) {
  const std::size_t bl = B * lout;
  for (std::size_t ci = 0; ci < cin; ++ci) {
    for (std::size_t k = 0; k < K; ++k) {
      T* dst = col + (ci * K + k) * bl;
      const long off = static_cast<long>(k) - pad;
      if (stride == 1) {
        const std::size_t m_lo =
            off < 0 ? static_cast<std::size_t>(-off) : 0;
        const long hi = static_cast<long>(L) - off;
        const std::size_t m_hi = std::min<std::size_t>(
            lout, hi < 0 ? 0 : static_cast<std::size_t>(hi));
        for (std::size_t b = 0; b < B; ++b) {
          const T* src = in + (b * cin + ci) * L;
          T* row = dst + b * lout;
          if (m_lo > 0) std::fill(row, row + std::min(m_lo, lout), T(0));
          if (m_hi > m_lo)
            std::memcpy(row + m_lo, src + m_lo + off,
                        (m_hi - m_lo) * sizeof(T));
          if (m_hi < lout) std::fill(row + m_hi, row + lout, T(0));
        }
      } else {
        for (std::size_t b = 0; b < B; ++b) {
          const T* src = in + (b * cin + ci) * L;
          T* row = dst + b * lout;
          for (std::size_t m = 0; m < lout; ++m) {
            const long idx = static_cast<long>(m) * stride + off;
            row[m] = (idx >= 0 && idx < static_cast<long>(L)) ? src[idx] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_accum(const T* col, std::size_t B, std::size_t cin, std::size_t L,
                  std::size_t K, int stride, int pad, std::size_t lout,
                  T* grad_in) {
  const std::size_t bl = B * lout;
  for (std::size_t ci = 0; ci < cin; ++ci) {
    for (std::size_t k = 0; k < K; ++k) {
      const T* src_row = col + (ci * K + k) * bl;
      const long off = static_cast<long>(k) - pad;
      if (stride == 1) {
        const std::size_t m_lo =
            off < 0 ? static_cast<std::size_t>(-off) : 0;
        const long hi = static_cast<long>(L) - off;
        const std::size_t m_hi = std::min<std::size_t>(
            lout, hi < 0 ? 0 : static_cast<std::size_t>(hi));
        for (std::size_t b = 0; b < B; ++b) {
          T* dst = grad_in + (b * cin + ci) * L + off;
          const T* src = src_row + b * lout;
          for (std::size_t m = m_lo; m < m_hi; ++m) dst[m] += src[m];
        }
      } else {
        for (std::size_t b = 0; b < B; ++b) {
          T* dst = grad_in + (b * cin + ci) * L;
          const T* src = src_row + b * lout;
          for (std::size_t m = 0; m < lout; ++m) {
            const long idx = static_cast<long>(m) * stride + off;
            if (idx >= 0 && idx < static_cast<long>(L)) dst[idx] += src[m];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> conv1d(const Tensor<T>& input, const Tensor<T>& kernel,
                 const std::optional<Tensor<T>>& bias, int stride,
                 Padding pad) {
  const Shape& in_s = input.shape();
  const Shape& k_s = kernel.shape();  // (Cout, Cin, K)
  BRSR_REQUIRE(stride >= 1, ErrorKind::Config, "conv1d: stride must be >= 1");
  BRSR_REQUIRE(k_s.channels == in_s.channels, ErrorKind::Shape,
               "conv1d: kernel expects " + std::to_string(k_s.channels) +
                   " input channels, got " + std::to_string(in_s.channels));
  const std::size_t B = in_s.batch, cin = in_s.channels, L = in_s.length;
  const std::size_t cout = k_s.batch, K = k_s.length;
  const int p = pad.resolve(static_cast<int>(K));
  BRSR_REQUIRE(L + 2 * static_cast<std::size_t>(p) >= K, ErrorKind::Shape,
               "conv1d: input shorter than kernel");
  const std::size_t lout = (L + 2 * p - K) / stride + 1;
  if (bias) {
    BRSR_REQUIRE((bias->shape() == Shape{1, 1, cout}), ErrorKind::Shape,
                 "conv1d: bias must have shape (1,1,Cout)");
  }
  guard_finite<T>(input.data(), "conv1d input");
  guard_finite<T>(kernel.data(), "conv1d kernel");

  const std::size_t bl = B * lout;
  const std::size_t cink = cin * K;
  auto col = std::make_shared<std::vector<T>>(cink * bl);
  im2col(input.data().data(), B, cin, L, K, stride, p, lout, col->data());

  std::vector<std::shared_ptr<TensorNode<T>>> parents{input.node(),
                                                      kernel.node()};
  if (bias) parents.push_back(bias->node());
  auto node = make_node<T>(Shape{B, cout, lout}, std::move(parents));

  {
    MapConstRM<T> w(kernel.data().data(), cout, cink);
    MapConstRM<T> c(col->data(), cink, bl);
    MatRM<T> out(cout, bl);
    out.noalias() = w * c;
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t co = 0; co < cout; ++co) {
        T* dst = node->value.data() + (b * cout + co) * lout;
        const T* src = out.data() + co * bl + b * lout;
        const T add = bias ? bias->data()[co] : T(0);
        for (std::size_t m = 0; m < lout; ++m) dst[m] = src[m] + add;
      }
  }

  if (node->requires_grad) {
    // The column matrix is only needed for the kernel gradient.
    if (!kernel.requires_grad()) col.reset();
    const bool has_bias = bias.has_value();
    node->backward_fn = [=, col = std::move(col)](TensorNode<T>& n) {
      MatRM<T> g(cout, bl);
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t co = 0; co < cout; ++co)
          std::memcpy(g.data() + co * bl + b * lout,
                      n.grad.data() + (b * cout + co) * lout,
                      lout * sizeof(T));
      if (T* kg = parent_grad(n, 1)) {
        MapConstRM<T> c(col->data(), cink, bl);
        MapRM<T> kgm(kg, cout, cink);
        kgm.noalias() += g * c.transpose();
      }
      if (has_bias) {
        if (T* bg = parent_grad(n, 2)) {
          for (std::size_t co = 0; co < cout; ++co) bg[co] += g.row(co).sum();
        }
      }
      if (T* ig = parent_grad(n, 0)) {
        MapConstRM<T> w(n.parents[1]->value.data(), cout, cink);
        MatRM<T> gcol(cink, bl);
        gcol.noalias() = w.transpose() * g;
        col2im_accum(gcol.data(), B, cin, L, K, stride, p, lout, ig);
      }
    };
  }
  return Tensor<T>(std::move(node));
}

// ---------------------------------------------------------------------------
// Elementwise and structural ops.
// ---------------------------------------------------------------------------

namespace {

template <typename T>
T int_pow(T x, int q) {
  T r = x;
  for (int i = 1; i < q; ++i) r *= x;
  return r;
}

}  // namespace

template <typename T>
Tensor<T> elementwise_pow(const Tensor<T>& x, int q) {
  BRSR_REQUIRE(q >= 1, ErrorKind::Config, "elementwise_pow: q must be >= 1");
  if (q == 1) return x;
  auto node = make_node<T>(x.shape(), {x.node()});
  const T* in = x.data().data();
  for (std::size_t i = 0; i < node->value.size(); ++i)
    node->value[i] = int_pow(in[i], q);
  if (node->requires_grad) {
    node->backward_fn = [q](TensorNode<T>& n) {
      if (T* ig = parent_grad(n, 0)) {
        const T* in = n.parents[0]->value.data();
        for (std::size_t i = 0; i < n.grad.size(); ++i)
          ig[i] += n.grad[i] * T(q) * int_pow(in[i], q - 1);
      }
    };
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> power_stack(const Tensor<T>& x, int q_order) {
  BRSR_REQUIRE(q_order >= 1, ErrorKind::Config, "power_stack: Q must be >= 1");
  const Shape& s = x.shape();
  auto node =
      make_node<T>(Shape{s.batch, s.channels * q_order, s.length}, {x.node()});
  const T* in = x.data().data();
  const std::size_t L = s.length;
  const std::size_t Q = static_cast<std::size_t>(q_order);
  for (std::size_t b = 0; b < s.batch; ++b)
    for (std::size_t c = 0; c < s.channels; ++c) {
      const T* src = in + (b * s.channels + c) * L;
      T* base = node->value.data() + (b * s.channels + c) * Q * L;
      std::memcpy(base, src, L * sizeof(T));
      for (std::size_t q = 1; q < Q; ++q) {
        const T* prev = base + (q - 1) * L;
        T* dst = base + q * L;
        for (std::size_t l = 0; l < L; ++l) dst[l] = prev[l] * src[l];
      }
    }
  if (node->requires_grad) {
    node->backward_fn = [Q, L, C = s.channels](TensorNode<T>& n) {
      if (T* ig = parent_grad(n, 0)) {
        const T* in = n.parents[0]->value.data();
        const std::size_t B = n.parents[0]->shape.batch;
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t c = 0; c < C; ++c) {
            const T* src = in + (b * C + c) * L;
            const T* gbase = n.grad.data() + (b * C + c) * Q * L;
            T* dst = ig + (b * C + c) * L;
            for (std::size_t l = 0; l < L; ++l) {
              T acc = gbase[l];  // q = 1 term
              T p = T(1);
              for (std::size_t q = 2; q <= Q; ++q) {
                p *= src[l];
                acc += gbase[(q - 1) * L + l] * T(q) * p;
              }
              dst[l] += acc;
            }
          }
      }
    };
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> selfonn_kernel(const Tensor<T>& flat_weights, int out_channels,
                         int in_channels, int kernel_size, int q_order) {
  const std::size_t O = out_channels, I = in_channels, K = kernel_size,
                    Q = q_order;
  BRSR_REQUIRE(flat_weights.numel() == O * I * K * Q, ErrorKind::Shape,
               "selfonn_kernel: weight count mismatch");
  auto node = make_node<T>(Shape{O, I * Q, K}, {flat_weights.node()});
  const T* w = flat_weights.data().data();
  for (std::size_t o = 0; o < O; ++o)
    for (std::size_t i = 0; i < I; ++i)
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t q = 0; q < Q; ++q)
          node->value[(o * I * Q + i * Q + q) * K + k] =
              w[((o * I + i) * K + k) * Q + q];
  if (node->requires_grad) {
    node->backward_fn = [O, I, K, Q](TensorNode<T>& n) {
      if (T* wg = parent_grad(n, 0)) {
        for (std::size_t o = 0; o < O; ++o)
          for (std::size_t i = 0; i < I; ++i)
            for (std::size_t k = 0; k < K; ++k)
              for (std::size_t q = 0; q < Q; ++q)
                wg[((o * I + i) * K + k) * Q + q] +=
                    n.grad[(o * I * Q + i * Q + q) * K + k];
      }
    };
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
  auto node = make_node<T>(x.shape(), {x.node()});
  const T* in = x.data().data();
  for (std::size_t i = 0; i < node->value.size(); ++i)
    node->value[i] = std::tanh(in[i]);
  if (node->requires_grad) {
    node->backward_fn = [](TensorNode<T>& n) {
      if (T* ig = parent_grad(n, 0)) {
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
          const T y = n.value[i];
          ig[i] += n.grad[i] * (T(1) - y * y);
        }
      }
    };
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> instance_norm(const Tensor<T>& x, T eps) {
  const Shape& s = x.shape();
  // Degenerate lengths are allowed: a constant (or single-sample) channel
  // maps to zeros through the epsilon stabilizer.
  BRSR_REQUIRE(s.length >= 1, ErrorKind::Shape,
               "instance_norm: empty length axis");
  auto node = make_node<T>(s, {x.node()});
  const std::size_t L = s.length;
  const std::size_t rows = s.batch * s.channels;
  auto inv_std = std::make_shared<std::vector<T>>(rows);
  const T* in = x.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* src = in + r * L;
    double mean = 0.0;
    for (std::size_t l = 0; l < L; ++l) mean += src[l];
    mean /= static_cast<double>(L);
    double var = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
      const double d = src[l] - mean;
      var += d * d;
    }
    var /= static_cast<double>(L);
    const T inv = static_cast<T>(1.0 / std::sqrt(var + eps));
    (*inv_std)[r] = inv;
    T* dst = node->value.data() + r * L;
    for (std::size_t l = 0; l < L; ++l)
      dst[l] = static_cast<T>((src[l] - mean)) * inv;
  }
  if (node->requires_grad) {
    node->backward_fn = [L, rows, inv_std](TensorNode<T>& n) {
      if (T* ig = parent_grad(n, 0)) {
        for (std::size_t r = 0; r < rows; ++r) {
          const T* g = n.grad.data() + r * L;
          const T* y = n.value.data() + r * L;
          double g_mean = 0.0, gy_mean = 0.0;
          for (std::size_t l = 0; l < L; ++l) {
            g_mean += g[l];
            gy_mean += g[l] * y[l];
          }
          g_mean /= static_cast<double>(L);
          gy_mean /= static_cast<double>(L);
          const T inv = (*inv_std)[r];
          T* dst = ig + r * L;
          for (std::size_t l = 0; l < L; ++l)
            dst[l] += inv * static_cast<T>(g[l] - g_mean - y[l] * gy_mean);
        }
      }
    };
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, bool training, Rng& rng) {
  BRSR_REQUIRE(rate >= 0.0 && rate < 1.0, ErrorKind::Config,
               "dropout: rate must be in [0, 1)");
  if (!training || rate == 0.0) return x;
  auto node = make_node<T>(x.shape(), {x.node()});
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  auto mask = std::make_shared<std::vector<T>>(x.numel());
  const T* in = x.data().data();
  for (std::size_t i = 0; i < mask->size(); ++i) {
    const T m = rng.uniform() < rate ? T(0) : keep_scale;
    (*mask)[i] = m;
    node->value[i] = in[i] * m;
  }
  if (node->requires_grad) {
    node->backward_fn = [mask](TensorNode<T>& n) {
      if (T* ig = parent_grad(n, 0)) {
        for (std::size_t i = 0; i < n.grad.size(); ++i)
          ig[i] += n.grad[i] * (*mask)[i];
      }
    };
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> upsample_nearest(const Tensor<T>& x, int factor) {
  BRSR_REQUIRE(factor >= 1, ErrorKind::Config,
               "upsample_nearest: factor must be >= 1");
  if (factor == 1) return x;
  const Shape& s = x.shape();
  const std::size_t f = factor;
  auto node =
      make_node<T>(Shape{s.batch, s.channels, s.length * f}, {x.node()});
  const T* in = x.data().data();
  const std::size_t rows = s.batch * s.channels, L = s.length;
  for (std::size_t r = 0; r < rows; ++r) {
    const T* src = in + r * L;
    T* dst = node->value.data() + r * L * f;
    for (std::size_t l = 0; l < L; ++l)
      for (std::size_t k = 0; k < f; ++k) dst[l * f + k] = src[l];
  }
  if (node->requires_grad) {
    node->backward_fn = [rows, L, f](TensorNode<T>& n) {
      if (T* ig = parent_grad(n, 0)) {
        for (std::size_t r = 0; r < rows; ++r) {
          const T* g = n.grad.data() + r * L * f;
          T* dst = ig + r * L;
          for (std::size_t l = 0; l < L; ++l) {
            T acc = T(0);
            for (std::size_t k = 0; k < f; ++k) acc += g[l * f + k];
            dst[l] += acc;
          }
        }
      }
    };
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> decimate(const Tensor<T>& x, int factor) {
  BRSR_REQUIRE(factor >= 1, ErrorKind::Config, "decimate: factor must be >= 1");
  if (factor == 1) return x;
  const Shape& s = x.shape();
  const std::size_t f = factor;
  const std::size_t lout = (s.length + f - 1) / f;
  auto node = make_node<T>(Shape{s.batch, s.channels, lout}, {x.node()});
  const T* in = x.data().data();
  const std::size_t rows = s.batch * s.channels, L = s.length;
  for (std::size_t r = 0; r < rows; ++r) {
    const T* src = in + r * L;
    T* dst = node->value.data() + r * lout;
    for (std::size_t m = 0; m < lout; ++m) dst[m] = src[m * f];
  }
  if (node->requires_grad) {
    node->backward_fn = [rows, L, lout, f](TensorNode<T>& n) {
      if (T* ig = parent_grad(n, 0)) {
        for (std::size_t r = 0; r < rows; ++r) {
          const T* g = n.grad.data() + r * lout;
          T* dst = ig + r * L;
          for (std::size_t m = 0; m < lout; ++m) dst[m * f] += g[m];
        }
      }
    };
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> adaptive_avg_pool(const Tensor<T>& x) {
  const Shape& s = x.shape();
  auto node = make_node<T>(Shape{s.batch, s.channels, 1}, {x.node()});
  const T* in = x.data().data();
  const std::size_t rows = s.batch * s.channels, L = s.length;
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t l = 0; l < L; ++l) acc += in[r * L + l];
    node->value[r] = static_cast<T>(acc / static_cast<double>(L));
  }
  if (node->requires_grad) {
    node->backward_fn = [rows, L](TensorNode<T>& n) {
      if (T* ig = parent_grad(n, 0)) {
        const T inv = T(1) / static_cast<T>(L);
        for (std::size_t r = 0; r < rows; ++r) {
          const T g = n.grad[r] * inv;
          T* dst = ig + r * L;
          for (std::size_t l = 0; l < L; ++l) dst[l] += g;
        }
      }
    };
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& weights,
                const Tensor<T>& bias) {
  const Shape& s = x.shape();
  BRSR_REQUIRE(s.length == 1, ErrorKind::Shape,
               "dense: expects pooled input of shape (B, C, 1)");
  BRSR_REQUIRE((weights.shape() == Shape{1, 1, s.channels}), ErrorKind::Shape,
               "dense: weights must have shape (1,1,C)");
  BRSR_REQUIRE((bias.shape() == Shape{1, 1, 1}), ErrorKind::Shape,
               "dense: bias must be scalar");
  guard_finite<T>(x.data(), "dense input");
  auto node =
      make_node<T>(Shape{s.batch, 1, 1}, {x.node(), weights.node(), bias.node()});
  const T* in = x.data().data();
  const T* w = weights.data().data();
  const T b0 = bias.data()[0];
  const std::size_t C = s.channels;
  for (std::size_t b = 0; b < s.batch; ++b) {
    double acc = b0;
    for (std::size_t c = 0; c < C; ++c) acc += in[b * C + c] * w[c];
    node->value[b] = static_cast<T>(acc);
  }
  if (node->requires_grad) {
    node->backward_fn = [C](TensorNode<T>& n) {
      const std::size_t B = n.shape.batch;
      const T* in = n.parents[0]->value.data();
      const T* w = n.parents[1]->value.data();
      if (T* ig = parent_grad(n, 0)) {
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t c = 0; c < C; ++c)
            ig[b * C + c] += n.grad[b] * w[c];
      }
      if (T* wg = parent_grad(n, 1)) {
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t c = 0; c < C; ++c)
            wg[c] += n.grad[b] * in[b * C + c];
      }
      if (T* bg = parent_grad(n, 2)) {
        for (std::size_t b = 0; b < B; ++b) bg[0] += n.grad[b];
      }
    };
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  BRSR_REQUIRE(sa.batch == sb.batch && sa.length == sb.length, ErrorKind::Shape,
               "concat_channels: batch/length mismatch");
  auto node = make_node<T>(
      Shape{sa.batch, sa.channels + sb.channels, sa.length}, {a.node(), b.node()});
  const std::size_t L = sa.length, ca = sa.channels, cb = sb.channels;
  for (std::size_t bi = 0; bi < sa.batch; ++bi) {
    std::memcpy(node->value.data() + bi * (ca + cb) * L,
                a.data().data() + bi * ca * L, ca * L * sizeof(T));
    std::memcpy(node->value.data() + (bi * (ca + cb) + ca) * L,
                b.data().data() + bi * cb * L, cb * L * sizeof(T));
  }
  if (node->requires_grad) {
    node->backward_fn = [ca, cb, L](TensorNode<T>& n) {
      const std::size_t B = n.shape.batch;
      if (T* ga = parent_grad(n, 0)) {
        for (std::size_t bi = 0; bi < B; ++bi) {
          const T* g = n.grad.data() + bi * (ca + cb) * L;
          T* dst = ga + bi * ca * L;
          for (std::size_t i = 0; i < ca * L; ++i) dst[i] += g[i];
        }
      }
      if (T* gb = parent_grad(n, 1)) {
        for (std::size_t bi = 0; bi < B; ++bi) {
          const T* g = n.grad.data() + (bi * (ca + cb) + ca) * L;
          T* dst = gb + bi * cb * L;
          for (std::size_t i = 0; i < cb * L; ++i) dst[i] += g[i];
        }
      }
    };
  }
  return Tensor<T>(std::move(node));
}

namespace {

template <typename T, typename Fwd, typename Bwd>
Tensor<T> binary_elementwise(const Tensor<T>& a, const Tensor<T>& b, Fwd fwd,
                             Bwd bwd, const char* name) {
  BRSR_REQUIRE(a.shape() == b.shape(), ErrorKind::Shape,
               std::string(name) + ": shape mismatch " + a.shape().str() +
                   " vs " + b.shape().str());
  auto node = make_node<T>(a.shape(), {a.node(), b.node()});
  const T* pa = a.data().data();
  const T* pb = b.data().data();
  for (std::size_t i = 0; i < node->value.size(); ++i)
    node->value[i] = fwd(pa[i], pb[i]);
  if (node->requires_grad) {
    node->backward_fn = [bwd](TensorNode<T>& n) {
      T* ga = parent_grad(n, 0);
      T* gb = parent_grad(n, 1);
      for (std::size_t i = 0; i < n.grad.size(); ++i)
        bwd(n.grad[i], i, ga, gb);
    };
  }
  return Tensor<T>(std::move(node));
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_elementwise<T>(
      a, b, [](T x, T y) { return x + y; },
      [](T g, std::size_t i, T* ga, T* gb) {
        if (ga) ga[i] += g;
        if (gb) gb[i] += g;
      },
      "add");
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_elementwise<T>(
      a, b, [](T x, T y) { return x - y; },
      [](T g, std::size_t i, T* ga, T* gb) {
        if (ga) ga[i] += g;
        if (gb) gb[i] -= g;
      },
      "sub");
}

namespace {

template <typename T, typename Fwd, typename Bwd>
Tensor<T> unary_elementwise(const Tensor<T>& x, Fwd fwd, Bwd bwd) {
  auto node = make_node<T>(x.shape(), {x.node()});
  const T* in = x.data().data();
  for (std::size_t i = 0; i < node->value.size(); ++i)
    node->value[i] = fwd(in[i]);
  if (node->requires_grad) {
    node->backward_fn = [bwd](TensorNode<T>& n) {
      if (T* ig = parent_grad(n, 0)) {
        const T* in = n.parents[0]->value.data();
        for (std::size_t i = 0; i < n.grad.size(); ++i)
          ig[i] += bwd(n.grad[i], in[i]);
      }
    };
  }
  return Tensor<T>(std::move(node));
}

}  // namespace

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T s) {
  return unary_elementwise<T>(
      x, [s](T v) { return v * s; }, [s](T g, T) { return g * s; });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& x, T s) {
  return unary_elementwise<T>(
      x, [s](T v) { return v + s; }, [](T g, T) { return g; });
}

template <typename T>
Tensor<T> square(const Tensor<T>& x) {
  return unary_elementwise<T>(
      x, [](T v) { return v * v; }, [](T g, T v) { return T(2) * v * g; });
}

template <typename T>
Tensor<T> abs(const Tensor<T>& x) {
  return unary_elementwise<T>(
      x, [](T v) { return std::abs(v); },
      [](T g, T v) { return v > T(0) ? g : (v < T(0) ? -g : T(0)); });
}

template <typename T>
Tensor<T> cwise_mul_const(const Tensor<T>& x, std::vector<T> weights) {
  BRSR_REQUIRE(weights.size() == x.numel(), ErrorKind::Shape,
               "cwise_mul_const: weight count mismatch");
  auto w = std::make_shared<std::vector<T>>(std::move(weights));
  auto node = make_node<T>(x.shape(), {x.node()});
  const T* in = x.data().data();
  for (std::size_t i = 0; i < node->value.size(); ++i)
    node->value[i] = in[i] * (*w)[i];
  if (node->requires_grad) {
    node->backward_fn = [w](TensorNode<T>& n) {
      if (T* ig = parent_grad(n, 0)) {
        for (std::size_t i = 0; i < n.grad.size(); ++i)
          ig[i] += n.grad[i] * (*w)[i];
      }
    };
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> sum_all(const Tensor<T>& x) {
  auto node = make_node<T>(Shape{1, 1, 1}, {x.node()});
  double acc = 0.0;
  for (T v : x.data()) acc += v;
  node->value[0] = static_cast<T>(acc);
  if (node->requires_grad) {
    node->backward_fn = [](TensorNode<T>& n) {
      if (T* ig = parent_grad(n, 0)) {
        const T g = n.grad[0];
        for (std::size_t i = 0; i < n.parents[0]->value.size(); ++i)
          ig[i] += g;
      }
    };
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& x) {
  return scale(sum_all(x), T(1) / static_cast<T>(x.numel()));
}

template <typename T>
Tensor<T> mean_per_sample(const Tensor<T>& x) {
  const Shape& s = x.shape();
  auto node = make_node<T>(Shape{s.batch, 1, 1}, {x.node()});
  const std::size_t per = s.channels * s.length;
  const T* in = x.data().data();
  for (std::size_t b = 0; b < s.batch; ++b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < per; ++i) acc += in[b * per + i];
    node->value[b] = static_cast<T>(acc / static_cast<double>(per));
  }
  if (node->requires_grad) {
    node->backward_fn = [per](TensorNode<T>& n) {
      if (T* ig = parent_grad(n, 0)) {
        const T inv = T(1) / static_cast<T>(per);
        for (std::size_t b = 0; b < n.shape.batch; ++b) {
          const T g = n.grad[b] * inv;
          T* dst = ig + b * per;
          for (std::size_t i = 0; i < per; ++i) dst[i] += g;
        }
      }
    };
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> reduce_max_per_sample(const Tensor<T>& x) {
  const Shape& s = x.shape();
  auto node = make_node<T>(Shape{s.batch, 1, 1}, {x.node()});
  const std::size_t per = s.channels * s.length;
  auto argmax = std::make_shared<std::vector<std::size_t>>(s.batch);
  const T* in = x.data().data();
  for (std::size_t b = 0; b < s.batch; ++b) {
    const T* src = in + b * per;
    std::size_t best = 0;
    for (std::size_t i = 1; i < per; ++i)
      if (src[i] > src[best]) best = i;
    (*argmax)[b] = best;
    node->value[b] = src[best];
  }
  if (node->requires_grad) {
    node->backward_fn = [per, argmax](TensorNode<T>& n) {
      if (T* ig = parent_grad(n, 0)) {
        for (std::size_t b = 0; b < n.shape.batch; ++b)
          ig[b * per + (*argmax)[b]] += n.grad[b];
      }
    };
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> div_per_sample(const Tensor<T>& x, const Tensor<T>& denom, T floor) {
  const Shape& s = x.shape();
  BRSR_REQUIRE((denom.shape() == Shape{s.batch, 1, 1}), ErrorKind::Shape,
               "div_per_sample: denom must have shape (B,1,1)");
  BRSR_REQUIRE(floor > T(0), ErrorKind::Config,
               "div_per_sample: floor must be positive");
  auto node = make_node<T>(s, {x.node(), denom.node()});
  const std::size_t per = s.channels * s.length;
  const T* in = x.data().data();
  const T* d = denom.data().data();
  for (std::size_t b = 0; b < s.batch; ++b) {
    const T dv = std::max(d[b], floor);
    const T inv = T(1) / dv;
    for (std::size_t i = 0; i < per; ++i)
      node->value[b * per + i] = in[b * per + i] * inv;
  }
  if (node->requires_grad) {
    node->backward_fn = [per, floor](TensorNode<T>& n) {
      const T* d = n.parents[1]->value.data();
      T* gx = parent_grad(n, 0);
      T* gd = parent_grad(n, 1);
      for (std::size_t b = 0; b < n.shape.batch; ++b) {
        const bool floored = d[b] < floor;
        const T dv = floored ? floor : d[b];
        const T inv = T(1) / dv;
        const T* g = n.grad.data() + b * per;
        const T* y = n.value.data() + b * per;
        if (gx) {
          T* dst = gx + b * per;
          for (std::size_t i = 0; i < per; ++i) dst[i] += g[i] * inv;
        }
        if (gd && !floored) {
          double acc = 0.0;
          for (std::size_t i = 0; i < per; ++i) acc += g[i] * y[i];
          gd[b] -= static_cast<T>(acc) * inv;
        }
      }
    };
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> detach(const Tensor<T>& x) {
  auto node = std::make_shared<TensorNode<T>>();
  node->shape = x.shape();
  node->value.assign(x.data().begin(), x.data().end());
  node->requires_grad = false;
  return Tensor<T>(std::move(node));
}

#define BRSR_INSTANTIATE_OPS(T)                                                \
  template Tensor<T> conv1d<T>(const Tensor<T>&, const Tensor<T>&,             \
                               const std::optional<Tensor<T>>&, int, Padding); \
  template Tensor<T> elementwise_pow<T>(const Tensor<T>&, int);                \
  template Tensor<T> power_stack<T>(const Tensor<T>&, int);                    \
  template Tensor<T> selfonn_kernel<T>(const Tensor<T>&, int, int, int, int);  \
  template Tensor<T> tanh<T>(const Tensor<T>&);                                \
  template Tensor<T> instance_norm<T>(const Tensor<T>&, T);                    \
  template Tensor<T> dropout<T>(const Tensor<T>&, double, bool, Rng&);         \
  template Tensor<T> upsample_nearest<T>(const Tensor<T>&, int);               \
  template Tensor<T> decimate<T>(const Tensor<T>&, int);                       \
  template Tensor<T> adaptive_avg_pool<T>(const Tensor<T>&);                   \
  template Tensor<T> dense<T>(const Tensor<T>&, const Tensor<T>&,              \
                              const Tensor<T>&);                               \
  template Tensor<T> concat_channels<T>(const Tensor<T>&, const Tensor<T>&);   \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);               \
  template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);               \
  template Tensor<T> scale<T>(const Tensor<T>&, T);                            \
  template Tensor<T> add_scalar<T>(const Tensor<T>&, T);                       \
  template Tensor<T> square<T>(const Tensor<T>&);                              \
  template Tensor<T> abs<T>(const Tensor<T>&);                                 \
  template Tensor<T> cwise_mul_const<T>(const Tensor<T>&, std::vector<T>);     \
  template Tensor<T> sum_all<T>(const Tensor<T>&);                             \
  template Tensor<T> mean_all<T>(const Tensor<T>&);                            \
  template Tensor<T> mean_per_sample<T>(const Tensor<T>&);                     \
  template Tensor<T> reduce_max_per_sample<T>(const Tensor<T>&);               \
  template Tensor<T> div_per_sample<T>(const Tensor<T>&, const Tensor<T>&, T); \
  template Tensor<T> detach<T>(const Tensor<T>&);                              \
  template void check_finite<T>(const Tensor<T>&, const char*);

BRSR_INSTANTIATE_OPS(float)
BRSR_INSTANTIATE_OPS(double)

#undef BRSR_INSTANTIATE_OPS

}  // namespace brsr
