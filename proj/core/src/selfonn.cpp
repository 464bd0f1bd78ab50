#include "brsr/selfonn.hpp"

#include <cmath>

namespace brsr {

template <typename T>
SelfOnn1d<T>::SelfOnn1d(ParameterSet<T>& params, const std::string& path,
                        const SelfOnnConfig& config, Rng& init_rng)
    : config_(config) {
  BRSR_REQUIRE(config.q_order >= 1, ErrorKind::Config, "Self-ONN: Q must be >= 1");
  BRSR_REQUIRE(config.kernel_size >= 1 && config.in_channels >= 1 &&
                   config.out_channels >= 1,
               ErrorKind::Config, "Self-ONN: invalid layer dimensions");
  const std::size_t O = config.out_channels, I = config.in_channels,
                    K = config.kernel_size, Q = config.q_order;
  weight_ = &params.create(path + ".weight", {O, I, K, Q});
  const double fan_in = static_cast<double>(I * K * Q);
  const double fan_out = static_cast<double>(O * K * Q);
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (auto& w : weight_->values)
    w = static_cast<T>(init_rng.uniform(-limit, limit));
  if (config.has_bias) bias_ = &params.create(path + ".bias", {O});
}

template <typename T>
Tensor<T> SelfOnn1d<T>::forward(const Tensor<T>& input, bool build_grad) const {
  const SelfOnnConfig& c = config_;
  BRSR_REQUIRE(input.shape().channels == static_cast<std::size_t>(c.in_channels),
               ErrorKind::Shape,
               "Self-ONN: expected " + std::to_string(c.in_channels) +
                   " channels, got " + std::to_string(input.shape().channels));
  Tensor<T> powered = power_stack(input, c.q_order);
  Tensor<T> w_flat = Tensor<T>::param(
      *weight_, Shape{1, 1, weight_->numel()}, build_grad);
  Tensor<T> kernel = selfonn_kernel(w_flat, c.out_channels, c.in_channels,
                                    c.kernel_size, c.q_order);
  std::optional<Tensor<T>> bias;
  if (bias_) {
    bias = Tensor<T>::param(
        *bias_, Shape{1, 1, static_cast<std::size_t>(c.out_channels)},
        build_grad);
  }
  return conv1d(powered, kernel, bias, c.stride, c.padding);
}

template <typename T>
std::int64_t SelfOnn1d<T>::param_count(const SelfOnnConfig& config) {
  std::int64_t n = static_cast<std::int64_t>(config.out_channels) *
                   config.in_channels * config.kernel_size * config.q_order;
  if (config.has_bias) n += config.out_channels;
  return n;
}

template class SelfOnn1d<float>;
template class SelfOnn1d<double>;

}  // namespace brsr
