#pragma once

#include <complex>
#include <vector>

#include "brsr/ops.hpp"
#include "brsr/tensor.hpp"
#include "brsr/waveform.hpp"

namespace brsr {

// Short-time Fourier analysis settings for the frequency-domain loss. The
// signal is treated as a single complex sequence I + jQ so the transform
// keeps the negative-frequency half that two real transforms would fold.
struct SpectrogramConfig {
  int fft_size = 64;
  int hop = 16;
  std::vector<double> window;  // length fft_size; symmetric, nonnegative

  static SpectrogramConfig hann(int fft_size = 64, int hop = 16);
  static SpectrogramConfig rectangular(int fft_size, int hop);

  int num_frames(std::size_t length) const;
  void validate() const;
};

// Complex STFT frames of one signal (analysis/oracle path; for gradients use
// the tensor ops below). frames[t * fft_size + k] = X(t, w_k).
std::vector<std::complex<double>> stft(const ComplexSignal& signal,
                                       const SpectrogramConfig& config);

// Differentiable STFT over a (B, 2, L) tensor; outputs are (B, n_frames, N).
template <typename T>
Tensor<T> stft_real(const Tensor<T>& iq, const SpectrogramConfig& config);
template <typename T>
Tensor<T> stft_imag(const Tensor<T>& iq, const SpectrogramConfig& config);

// Squared-magnitude STFT normalized by the per-sample maximum bin (with a
// 1e-12 floor, so a zero signal maps to a zero spectrogram). Differentiable,
// including through the max.
template <typename T>
Tensor<T> spectrogram(const Tensor<T>& iq, const SpectrogramConfig& config);

struct LossWeights {
  double lambda_time = 100.0;
  double lambda_freq = 200.0;
};

// Per-sample generator objective terms, each shaped (B,1,1):
//   adv  = (D(x_tilde) - 1)^2
//   time = mean |x_tilde - x|
//   freq = mean |S(x_tilde) - S(x)|   (max-normalized spectrograms)
//   total = adv + lambda_time * time + lambda_freq * freq
template <typename T>
struct GeneratorLossParts {
  Tensor<T> adv;
  Tensor<T> time;
  Tensor<T> freq;
  Tensor<T> total;
};

template <typename T>
GeneratorLossParts<T> generator_loss_parts(const Tensor<T>& x_tilde,
                                           const Tensor<T>& x_clean,
                                           const Tensor<T>& d_score,
                                           const LossWeights& weights,
                                           const SpectrogramConfig& config);

// Batch-averaged scalar L_G.
template <typename T>
Tensor<T> generator_loss(const Tensor<T>& x_tilde, const Tensor<T>& x_clean,
                         const Tensor<T>& d_score, const LossWeights& weights,
                         const SpectrogramConfig& config);

// Batch-averaged least-squares discriminator loss
//   (D(x) - 1)^2 + (D(x_tilde))^2.
template <typename T>
Tensor<T> discriminator_loss(const Tensor<T>& d_real, const Tensor<T>& d_fake);

}  // namespace brsr
