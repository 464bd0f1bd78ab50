#include "brsr/loss.hpp"

#include <Eigen/Core>
#include <cmath>

namespace brsr {

namespace {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// DFT cosine/sine tables, N x N row-major with time index n as the row and
// frequency index k as the column.
template <typename T>
void dft_tables(int n_fft, MatRM<T>& cos_t, MatRM<T>& sin_t) {
  cos_t.resize(n_fft, n_fft);
  sin_t.resize(n_fft, n_fft);
  for (int n = 0; n < n_fft; ++n)
    for (int k = 0; k < n_fft; ++k) {
      const double angle = 2.0 * M_PI * static_cast<double>(k) *
                           static_cast<double>(n) / static_cast<double>(n_fft);
      cos_t(n, k) = static_cast<T>(std::cos(angle));
      sin_t(n, k) = static_cast<T>(std::sin(angle));
    }
}

// Windowed frame matrices (B*F x N) for the I and Q channels of (B, 2, L).
template <typename T>
void build_frames(const T* data, std::size_t B, std::size_t L,
                  const SpectrogramConfig& cfg, std::size_t frames,
                  MatRM<T>& fi, MatRM<T>& fq) {
  const std::size_t N = static_cast<std::size_t>(cfg.fft_size);
  fi.resize(static_cast<Eigen::Index>(B * frames), static_cast<Eigen::Index>(N));
  fq.resize(static_cast<Eigen::Index>(B * frames), static_cast<Eigen::Index>(N));
  for (std::size_t b = 0; b < B; ++b) {
    const T* ci = data + (b * 2 + 0) * L;
    const T* cq = data + (b * 2 + 1) * L;
    for (std::size_t t = 0; t < frames; ++t) {
      const std::size_t start = t * static_cast<std::size_t>(cfg.hop);
      T* ri = fi.data() + (b * frames + t) * N;
      T* rq = fq.data() + (b * frames + t) * N;
      for (std::size_t n = 0; n < N; ++n) {
        const T w = static_cast<T>(cfg.window[n]);
        ri[n] = ci[start + n] * w;
        rq[n] = cq[start + n] * w;
      }
    }
  }
}

// Overlap-add of frame-domain gradients back onto one channel.
template <typename T>
void scatter_frames(const MatRM<T>& gframes, std::size_t b, std::size_t frames,
                    const SpectrogramConfig& cfg, std::size_t L, T* grad_ch) {
  const std::size_t N = static_cast<std::size_t>(cfg.fft_size);
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t start = t * static_cast<std::size_t>(cfg.hop);
    const T* src = gframes.data() + (b * frames + t) * N;
    for (std::size_t n = 0; n < N; ++n)
      grad_ch[start + n] += src[n] * static_cast<T>(cfg.window[n]);
  }
}

template <typename T>
std::shared_ptr<TensorNode<T>> stft_node(const Tensor<T>& iq,
                                         const SpectrogramConfig& cfg,
                                         bool imaginary) {
  cfg.validate();
  const Shape& s = iq.shape();
  BRSR_REQUIRE(s.channels == 2, ErrorKind::Shape,
               "stft: input must have exactly 2 (I/Q) channels");
  BRSR_REQUIRE(s.length >= static_cast<std::size_t>(cfg.fft_size),
               ErrorKind::Shape, "stft: signal shorter than the FFT size");
  const std::size_t B = s.batch, L = s.length;
  const std::size_t F = static_cast<std::size_t>(cfg.num_frames(L));
  const std::size_t N = static_cast<std::size_t>(cfg.fft_size);

  auto node = std::make_shared<TensorNode<T>>();
  node->shape = Shape{B, F, N};
  node->value.resize(B * F * N);
  node->requires_grad = iq.requires_grad();
  node->parents = {iq.node()};

  MatRM<T> cos_t, sin_t;
  dft_tables<T>(cfg.fft_size, cos_t, sin_t);
  MatRM<T> fi, fq;
  build_frames(iq.data().data(), B, L, cfg, F, fi, fq);
  Eigen::Map<MatRM<T>> out(node->value.data(),
                           static_cast<Eigen::Index>(B * F),
                           static_cast<Eigen::Index>(N));
  if (!imaginary)
    out.noalias() = fi * cos_t + fq * sin_t;
  else
    out.noalias() = fq * cos_t - fi * sin_t;

  if (node->requires_grad) {
    auto cfg_copy = cfg;
    node->backward_fn = [cfg_copy, B, L, F, N, imaginary](TensorNode<T>& n) {
      TensorNode<T>& parent = *n.parents[0];
      if (!parent.requires_grad) return;
      parent.ensure_grad();
      MatRM<T> cos_t, sin_t;
      dft_tables<T>(cfg_copy.fft_size, cos_t, sin_t);
      Eigen::Map<const MatRM<T>> g(n.grad.data(),
                                   static_cast<Eigen::Index>(B * F),
                                   static_cast<Eigen::Index>(N));
      MatRM<T> gfi(B * F, N), gfq(B * F, N);
      if (!imaginary) {
        gfi.noalias() = g * cos_t.transpose();
        gfq.noalias() = g * sin_t.transpose();
      } else {
        gfq.noalias() = g * cos_t.transpose();
        gfi.noalias() = -(g * sin_t.transpose());
      }
      for (std::size_t b = 0; b < B; ++b) {
        scatter_frames(gfi, b, F, cfg_copy, L,
                       parent.grad.data() + (b * 2 + 0) * L);
        scatter_frames(gfq, b, F, cfg_copy, L,
                       parent.grad.data() + (b * 2 + 1) * L);
      }
    };
  }
  return node;
}

}  // namespace

SpectrogramConfig SpectrogramConfig::hann(int fft_size, int hop) {
  SpectrogramConfig cfg;
  cfg.fft_size = fft_size;
  cfg.hop = hop;
  cfg.window.resize(static_cast<std::size_t>(fft_size));
  // Mirrored construction keeps the window bit-exactly symmetric.
  for (int n = 0; n < (fft_size + 1) / 2; ++n) {
    const double w = 0.5 * (1.0 - std::cos(2.0 * M_PI * n / (fft_size - 1)));
    cfg.window[static_cast<std::size_t>(n)] = w;
    cfg.window[static_cast<std::size_t>(fft_size - 1 - n)] = w;
  }
  return cfg;
}

SpectrogramConfig SpectrogramConfig::rectangular(int fft_size, int hop) {
  SpectrogramConfig cfg;
  cfg.fft_size = fft_size;
  cfg.hop = hop;
  cfg.window.assign(static_cast<std::size_t>(fft_size), 1.0);
  return cfg;
}

int SpectrogramConfig::num_frames(std::size_t length) const {
  return static_cast<int>((length - static_cast<std::size_t>(fft_size)) /
                              static_cast<std::size_t>(hop) +
                          1);
}

void SpectrogramConfig::validate() const {
  BRSR_REQUIRE(fft_size >= 2, ErrorKind::Config, "stft: fft_size must be >= 2");
  BRSR_REQUIRE(hop >= 1 && hop <= fft_size, ErrorKind::Config,
               "stft: hop must be in [1, fft_size]");
  BRSR_REQUIRE(window.size() == static_cast<std::size_t>(fft_size),
               ErrorKind::Config, "stft: window length must equal fft_size");
  for (std::size_t n = 0; n < window.size(); ++n) {
    BRSR_REQUIRE(window[n] >= 0.0, ErrorKind::Config,
                 "stft: window must be nonnegative");
    BRSR_REQUIRE(std::abs(window[n] - window[window.size() - 1 - n]) <= 1e-12,
                 ErrorKind::Config, "stft: window must be symmetric");
  }
}

std::vector<std::complex<double>> stft(const ComplexSignal& signal,
                                       const SpectrogramConfig& cfg) {
  cfg.validate();
  const std::size_t L = ComplexSignal::kLength;
  BRSR_REQUIRE(L >= static_cast<std::size_t>(cfg.fft_size), ErrorKind::Shape,
               "stft: signal shorter than the FFT size");
  const std::size_t F = static_cast<std::size_t>(cfg.num_frames(L));
  const std::size_t N = static_cast<std::size_t>(cfg.fft_size);
  std::vector<std::complex<double>> frames(F * N);
  for (std::size_t t = 0; t < F; ++t) {
    const std::size_t start = t * static_cast<std::size_t>(cfg.hop);
    for (std::size_t k = 0; k < N; ++k) {
      std::complex<double> acc = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        const double angle = 2.0 * M_PI * static_cast<double>(k) *
                             static_cast<double>(n) / static_cast<double>(N);
        const std::complex<double> x(signal.i[start + n], signal.q[start + n]);
        acc += x * cfg.window[n] *
               std::complex<double>(std::cos(angle), -std::sin(angle));
      }
      frames[t * N + k] = acc;
    }
  }
  return frames;
}

template <typename T>
Tensor<T> stft_real(const Tensor<T>& iq, const SpectrogramConfig& cfg) {
  return Tensor<T>(stft_node(iq, cfg, /*imaginary=*/false));
}

template <typename T>
Tensor<T> stft_imag(const Tensor<T>& iq, const SpectrogramConfig& cfg) {
  return Tensor<T>(stft_node(iq, cfg, /*imaginary=*/true));
}

template <typename T>
Tensor<T> spectrogram(const Tensor<T>& iq, const SpectrogramConfig& cfg) {
  Tensor<T> re = stft_real(iq, cfg);
  Tensor<T> im = stft_imag(iq, cfg);
  Tensor<T> power = add(square(re), square(im));
  Tensor<T> peak = reduce_max_per_sample(power);
  return div_per_sample(power, peak, static_cast<T>(1e-12));
}

template <typename T>
GeneratorLossParts<T> generator_loss_parts(const Tensor<T>& x_tilde,
                                           const Tensor<T>& x_clean,
                                           const Tensor<T>& d_score,
                                           const LossWeights& weights,
                                           const SpectrogramConfig& cfg) {
  BRSR_REQUIRE(x_tilde.shape() == x_clean.shape(), ErrorKind::Shape,
               "generator_loss: estimate/target shape mismatch");
  BRSR_REQUIRE((d_score.shape() == Shape{x_tilde.shape().batch, 1, 1}),
               ErrorKind::Shape, "generator_loss: score must be (B,1,1)");
  BRSR_REQUIRE(weights.lambda_time >= 0.0 && weights.lambda_freq >= 0.0,
               ErrorKind::Config, "loss weights must be >= 0");
  GeneratorLossParts<T> parts;
  parts.adv = square(add_scalar(d_score, T(-1)));
  parts.time = mean_per_sample(abs(sub(x_tilde, x_clean)));
  parts.freq = mean_per_sample(
      abs(sub(spectrogram(x_tilde, cfg), spectrogram(x_clean, cfg))));
  parts.total =
      add(parts.adv, add(scale(parts.time, static_cast<T>(weights.lambda_time)),
                         scale(parts.freq, static_cast<T>(weights.lambda_freq))));
  return parts;
}

template <typename T>
Tensor<T> generator_loss(const Tensor<T>& x_tilde, const Tensor<T>& x_clean,
                         const Tensor<T>& d_score, const LossWeights& weights,
                         const SpectrogramConfig& cfg) {
  return mean_all(
      generator_loss_parts(x_tilde, x_clean, d_score, weights, cfg).total);
}

template <typename T>
Tensor<T> discriminator_loss(const Tensor<T>& d_real, const Tensor<T>& d_fake) {
  BRSR_REQUIRE(d_real.shape() == d_fake.shape(), ErrorKind::Shape,
               "discriminator_loss: score shape mismatch");
  return mean_all(
      add(square(add_scalar(d_real, T(-1))), square(d_fake)));
}

#define BRSR_INSTANTIATE_LOSS(T)                                              \
  template Tensor<T> stft_real<T>(const Tensor<T>&, const SpectrogramConfig&); \
  template Tensor<T> stft_imag<T>(const Tensor<T>&, const SpectrogramConfig&); \
  template Tensor<T> spectrogram<T>(const Tensor<T>&,                         \
                                    const SpectrogramConfig&);                \
  template GeneratorLossParts<T> generator_loss_parts<T>(                     \
      const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,                   \
      const LossWeights&, const SpectrogramConfig&);                          \
  template Tensor<T> generator_loss<T>(const Tensor<T>&, const Tensor<T>&,    \
                                       const Tensor<T>&, const LossWeights&,  \
                                       const SpectrogramConfig&);             \
  template Tensor<T> discriminator_loss<T>(const Tensor<T>&, const Tensor<T>&);

BRSR_INSTANTIATE_LOSS(float)
BRSR_INSTANTIATE_LOSS(double)

#undef BRSR_INSTANTIATE_LOSS

}  // namespace brsr
