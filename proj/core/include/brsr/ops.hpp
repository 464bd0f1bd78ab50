#pragma once

#include <optional>
#include <vector>

#include "brsr/rng.hpp"
#include "brsr/tensor.hpp"

namespace brsr {

struct Padding {
  enum class Mode { Same, Explicit };
  Mode mode = Mode::Same;
  int amount = 0;

  static Padding same() { return {Mode::Same, 0}; }
  static Padding explicit_pad(int n) { return {Mode::Explicit, n}; }
  // Resolved pad for a given kernel size. "Same" requires an odd kernel.
  int resolve(int kernel_size) const;
};

// 1D cross-correlation over (B, Cin, L) with kernel (Cout, Cin, K), zero
// padding. out_len = (L + 2*pad - K) / stride + 1. Bias, when present, has
// shape (1, 1, Cout) and is added per output channel.
template <typename T>
Tensor<T> conv1d(const Tensor<T>& input, const Tensor<T>& kernel,
                 const std::optional<Tensor<T>>& bias, int stride, Padding pad);

template <typename T>
Tensor<T> elementwise_pow(const Tensor<T>& x, int q);

// Stacks powers x^1..x^Q along channels: (B, C, L) -> (B, C*Q, L) with output
// channel c*Q + (q-1) holding x[:, c, :]^q.
template <typename T>
Tensor<T> power_stack(const Tensor<T>& x, int q_order);

// Reorders a flat (O*I*K*Q) parameter leaf, laid out as (O, I, K, Q), into
// the (O, I*Q, K) kernel expected by conv1d over a power_stack input.
template <typename T>
Tensor<T> selfonn_kernel(const Tensor<T>& flat_weights, int out_channels,
                         int in_channels, int kernel_size, int q_order);

template <typename T>
Tensor<T> tanh(const Tensor<T>& x);

// Per (batch, channel) standardization over the length axis; biased variance
// with epsilon stabilizer, no learned affine.
template <typename T>
Tensor<T> instance_norm(const Tensor<T>& x, T eps = T(1e-5));

// Inverted dropout: train mode zeroes with probability `rate` and scales
// survivors by 1/(1-rate); eval mode is the identity.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, bool training, Rng& rng);

template <typename T>
Tensor<T> upsample_nearest(const Tensor<T>& x, int factor);

// Keeps every `factor`-th sample starting at index 0.
template <typename T>
Tensor<T> decimate(const Tensor<T>& x, int factor);

// Global average pool over length: (B, C, L) -> (B, C, 1).
template <typename T>
Tensor<T> adaptive_avg_pool(const Tensor<T>& x);

// Affine head: x (B, C, 1), weights (1, 1, C), bias (1, 1, 1) -> (B, 1, 1).
template <typename T>
Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& weights,
                const Tensor<T>& bias);

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& x, T s);
template <typename T>
Tensor<T> add_scalar(const Tensor<T>& x, T s);
template <typename T>
Tensor<T> square(const Tensor<T>& x);
template <typename T>
Tensor<T> abs(const Tensor<T>& x);

// Elementwise product with a constant tensor (no gradient to the constant);
// used to reduce non-scalar outputs to scalars in gradient checks.
template <typename T>
Tensor<T> cwise_mul_const(const Tensor<T>& x, std::vector<T> weights);

template <typename T>
Tensor<T> sum_all(const Tensor<T>& x);  // (1,1,1)
template <typename T>
Tensor<T> mean_all(const Tensor<T>& x);  // (1,1,1)
template <typename T>
Tensor<T> mean_per_sample(const Tensor<T>& x);  // (B,1,1)
template <typename T>
Tensor<T> reduce_max_per_sample(const Tensor<T>& x);  // (B,1,1)

// x[b] / max(denom[b], floor); denom shaped (B,1,1). No gradient flows to
// denom for samples where the floor is active.
template <typename T>
Tensor<T> div_per_sample(const Tensor<T>& x, const Tensor<T>& denom, T floor);

// Cuts the graph: same values, no gradient.
template <typename T>
Tensor<T> detach(const Tensor<T>& x);

// Throws ErrorKind::Numeric if any element is non-finite.
template <typename T>
void check_finite(const Tensor<T>& x, const char* what);

}  // namespace brsr
