#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "brsr/selfonn.hpp"

namespace brsr {

// Channel widths chosen so the default parameter counts sit close to the
// published budget (generator ~276K, discriminator ~83K).
struct GeneratorConfig {
  int in_channels = 2;
  std::array<int, 5> encoder_channels{8, 16, 32, 64, 128};
  int q_order = 3;
  int kernel_size = 3;
  double dropout_rate = 0.25;

  bool operator==(const GeneratorConfig&) const = default;
};

struct DiscriminatorConfig {
  int in_channels = 2;
  std::array<int, 6> channels{8, 16, 32, 32, 64, 64};
  int q_order = 3;
  int kernel_size = 3;

  bool operator==(const DiscriminatorConfig&) const = default;
};

// Residual halving block: stride-2 Self-ONN plus a stride-2 projection
// shortcut (identity decimation when the channel counts match), then
// instance norm and tanh. Dropout, when enabled, follows the activation.
template <typename T>
class ResDownBlock {
 public:
  ResDownBlock(ParameterSet<T>& params, const std::string& path, int in_c,
               int out_c, int kernel_size, int q_order, bool use_dropout,
               double dropout_rate, Rng& init_rng);
  Tensor<T> forward(const Tensor<T>& x, bool training, bool build_grad,
                    Rng* dropout_rng) const;

 private:
  SelfOnn1d<T> main_;
  std::optional<SelfOnn1d<T>> shortcut_;
  bool use_dropout_;
  double dropout_rate_;
};

// Residual doubling block: nearest-neighbor x2 upsampling followed by a
// stride-1 Self-ONN with the same residual/norm/activation arrangement.
template <typename T>
class ResUpBlock {
 public:
  ResUpBlock(ParameterSet<T>& params, const std::string& path, int in_c,
             int out_c, int kernel_size, int q_order, bool use_dropout,
             double dropout_rate, Rng& init_rng);
  Tensor<T> forward(const Tensor<T>& x, bool training, bool build_grad,
                    Rng* dropout_rng) const;

 private:
  SelfOnn1d<T> main_;
  std::optional<SelfOnn1d<T>> shortcut_;
  bool use_dropout_;
  double dropout_rate_;
};

// Encoder-decoder restoration filter. Five halving blocks compress a
// (B, 2, L) segment to a length L/32 latent; five doubling blocks mirror the
// encoder with skip concatenations; a final plain convolution (no norm or
// activation) maps back to 2 channels.
template <typename T>
class Generator {
 public:
  static constexpr int kDownsampleFactor = 32;

  Generator(const GeneratorConfig& config, std::uint64_t init_seed);

  Tensor<T> forward(const Tensor<T>& x, bool training, bool build_grad,
                    Rng* dropout_rng) const;

  const GeneratorConfig& config() const { return config_; }
  ParameterSet<T>& params() { return params_; }
  const ParameterSet<T>& params() const { return params_; }
  std::int64_t parameter_count() const { return params_.total_count(); }
  static std::size_t latent_length(std::size_t input_length) {
    return input_length / kDownsampleFactor;
  }

 private:
  GeneratorConfig config_;
  ParameterSet<T> params_;
  std::vector<ResDownBlock<T>> encoder_;
  std::vector<ResUpBlock<T>> decoder_;
  Parameter<T>* final_weight_ = nullptr;
  Parameter<T>* final_bias_ = nullptr;
};

// Six halving blocks followed by adaptive average pooling and a dense head;
// emits one unbounded score per sample (least-squares adversarial loss
// operates on raw scores).
template <typename T>
class Discriminator {
 public:
  static constexpr int kDownsampleFactor = 64;

  Discriminator(const DiscriminatorConfig& config, std::uint64_t init_seed);

  Tensor<T> forward(const Tensor<T>& x, bool build_grad) const;

  const DiscriminatorConfig& config() const { return config_; }
  ParameterSet<T>& params() { return params_; }
  const ParameterSet<T>& params() const { return params_; }
  std::int64_t parameter_count() const { return params_.total_count(); }

 private:
  DiscriminatorConfig config_;
  ParameterSet<T> params_;
  std::vector<ResDownBlock<T>> blocks_;
  Parameter<T>* head_weight_ = nullptr;
  Parameter<T>* head_bias_ = nullptr;
};

template <typename T>
std::int64_t count_parameters(const Generator<T>& g) {
  return g.parameter_count();
}
template <typename T>
std::int64_t count_parameters(const Discriminator<T>& d) {
  return d.parameter_count();
}

}  // namespace brsr
