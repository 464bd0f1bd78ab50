#include "brsr/model.hpp"

#include <cmath>

#include "brsr/ops.hpp"

namespace brsr {

namespace {

template <typename T>
void xavier_fill(Parameter<T>& p, double fan_in, double fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (auto& v : p.values) v = static_cast<T>(rng.uniform(-limit, limit));
}

template <typename T>
Tensor<T> block_tail(Tensor<T> merged, bool use_dropout, double dropout_rate,
                     bool training, Rng* dropout_rng) {
  Tensor<T> out = tanh(instance_norm(merged));
  if (use_dropout && training) {
    BRSR_REQUIRE(dropout_rng != nullptr, ErrorKind::Config,
                 "training forward needs a dropout RNG");
    out = dropout(out, dropout_rate, true, *dropout_rng);
  }
  return out;
}

}  // namespace

template <typename T>
ResDownBlock<T>::ResDownBlock(ParameterSet<T>& params, const std::string& path,
                              int in_c, int out_c, int kernel_size, int q_order,
                              bool use_dropout, double dropout_rate,
                              Rng& init_rng)
    : main_(params, path + ".main",
            SelfOnnConfig{in_c, out_c, kernel_size, q_order, /*stride=*/2,
                          /*has_bias=*/true,
                          Padding::explicit_pad(kernel_size / 2)},
            init_rng),
      use_dropout_(use_dropout),
      dropout_rate_(dropout_rate) {
  if (in_c != out_c) {
    shortcut_.emplace(params, path + ".shortcut",
                      SelfOnnConfig{in_c, out_c, /*kernel_size=*/1, q_order,
                                    /*stride=*/2, /*has_bias=*/true,
                                    Padding::explicit_pad(0)},
                      init_rng);
  }
}

template <typename T>
Tensor<T> ResDownBlock<T>::forward(const Tensor<T>& x, bool training,
                                   bool build_grad, Rng* dropout_rng) const {
  BRSR_REQUIRE(x.shape().length % 2 == 0, ErrorKind::Shape,
               "ResDownBlock: input length must be even");
  Tensor<T> main = main_.forward(x, build_grad);
  Tensor<T> shortcut =
      shortcut_ ? shortcut_->forward(x, build_grad) : decimate(x, 2);
  return block_tail(add(main, shortcut), use_dropout_, dropout_rate_, training,
                    dropout_rng);
}

template <typename T>
ResUpBlock<T>::ResUpBlock(ParameterSet<T>& params, const std::string& path,
                          int in_c, int out_c, int kernel_size, int q_order,
                          bool use_dropout, double dropout_rate, Rng& init_rng)
    : main_(params, path + ".main",
            SelfOnnConfig{in_c, out_c, kernel_size, q_order, /*stride=*/1,
                          /*has_bias=*/true, Padding::same()},
            init_rng),
      use_dropout_(use_dropout),
      dropout_rate_(dropout_rate) {
  if (in_c != out_c) {
    shortcut_.emplace(params, path + ".shortcut",
                      SelfOnnConfig{in_c, out_c, /*kernel_size=*/1, q_order,
                                    /*stride=*/1, /*has_bias=*/true,
                                    Padding::explicit_pad(0)},
                      init_rng);
  }
}

template <typename T>
Tensor<T> ResUpBlock<T>::forward(const Tensor<T>& x, bool training,
                                 bool build_grad, Rng* dropout_rng) const {
  Tensor<T> up = upsample_nearest(x, 2);
  Tensor<T> main = main_.forward(up, build_grad);
  Tensor<T> shortcut = shortcut_ ? shortcut_->forward(up, build_grad) : up;
  return block_tail(add(main, shortcut), use_dropout_, dropout_rate_, training,
                    dropout_rng);
}

template <typename T>
Generator<T>::Generator(const GeneratorConfig& config, std::uint64_t init_seed)
    : config_(config) {
  BRSR_REQUIRE(config.in_channels >= 1 && config.q_order >= 1,
               ErrorKind::Config, "generator: invalid config");
  Rng init_rng(Rng::derive(init_seed, 0x6E5));
  const auto& e = config.encoder_channels;

  int in_c = config.in_channels;
  for (std::size_t i = 0; i < e.size(); ++i) {
    // Dropout sits on the two deepest encoder stages.
    const bool drop = i >= e.size() - 2;
    encoder_.emplace_back(params_, "enc" + std::to_string(i + 1), in_c, e[i],
                          config.kernel_size, config.q_order, drop,
                          config.dropout_rate, init_rng);
    in_c = e[i];
  }

  // Decoder mirrors the encoder; stages after the first take concatenated
  // skip channels. Dropout sits on the first two stages.
  const std::array<int, 5> dec_in = {e[4], 2 * e[3], 2 * e[2], 2 * e[1],
                                     2 * e[0]};
  const std::array<int, 5> dec_out = {e[3], e[2], e[1], e[0], e[0]};
  for (std::size_t i = 0; i < dec_in.size(); ++i) {
    const bool drop = i < 2;
    decoder_.emplace_back(params_, "dec" + std::to_string(i + 1), dec_in[i],
                          dec_out[i], config.kernel_size, config.q_order, drop,
                          config.dropout_rate, init_rng);
  }

  // Final plain convolution, no activation or normalization.
  const std::size_t K = static_cast<std::size_t>(config.kernel_size);
  final_weight_ = &params_.create(
      "final.weight",
      {static_cast<std::size_t>(config.in_channels),
       static_cast<std::size_t>(e[0]), K});
  xavier_fill(*final_weight_, static_cast<double>(e[0]) * K,
              static_cast<double>(config.in_channels) * K, init_rng);
  final_bias_ = &params_.create(
      "final.bias", {static_cast<std::size_t>(config.in_channels)});
}

template <typename T>
Tensor<T> Generator<T>::forward(const Tensor<T>& x, bool training,
                                bool build_grad, Rng* dropout_rng) const {
  const Shape& s = x.shape();
  BRSR_REQUIRE(s.channels == static_cast<std::size_t>(config_.in_channels),
               ErrorKind::Shape, "generator: wrong channel count");
  BRSR_REQUIRE(s.length % kDownsampleFactor == 0 &&
                   s.length >= kDownsampleFactor,
               ErrorKind::Shape,
               "generator: input length must be a positive multiple of " +
                   std::to_string(kDownsampleFactor));

  std::vector<Tensor<T>> stage_outputs;
  Tensor<T> h = x;
  for (const auto& block : encoder_) {
    h = block.forward(h, training, build_grad, dropout_rng);
    stage_outputs.push_back(h);
  }
  // h is the latent of length L/32.
  for (std::size_t i = 0; i < decoder_.size(); ++i) {
    h = decoder_[i].forward(h, training, build_grad, dropout_rng);
    const std::size_t skip = encoder_.size() - 2 - i;  // enc4, enc3, ...
    if (i + 1 < decoder_.size())
      h = concat_channels(h, stage_outputs[skip]);
  }
  Tensor<T> w = Tensor<T>::param(
      *final_weight_,
      Shape{static_cast<std::size_t>(config_.in_channels),
            static_cast<std::size_t>(config_.encoder_channels[0]),
            static_cast<std::size_t>(config_.kernel_size)},
      build_grad);
  Tensor<T> b = Tensor<T>::param(
      *final_bias_, Shape{1, 1, static_cast<std::size_t>(config_.in_channels)},
      build_grad);
  return conv1d(h, w, std::optional<Tensor<T>>(b), 1, Padding::same());
}

template <typename T>
Discriminator<T>::Discriminator(const DiscriminatorConfig& config,
                                std::uint64_t init_seed)
    : config_(config) {
  Rng init_rng(Rng::derive(init_seed, 0xD15C));
  int in_c = config.in_channels;
  for (std::size_t i = 0; i < config.channels.size(); ++i) {
    blocks_.emplace_back(params_, "block" + std::to_string(i + 1), in_c,
                         config.channels[i], config.kernel_size, config.q_order,
                         /*use_dropout=*/false, 0.0, init_rng);
    in_c = config.channels[i];
  }
  const std::size_t c_last = static_cast<std::size_t>(config.channels.back());
  head_weight_ = &params_.create("head.weight", {1, c_last});
  xavier_fill(*head_weight_, static_cast<double>(c_last), 1.0, init_rng);
  head_bias_ = &params_.create("head.bias", {1});
}

template <typename T>
Tensor<T> Discriminator<T>::forward(const Tensor<T>& x, bool build_grad) const {
  const Shape& s = x.shape();
  BRSR_REQUIRE(s.channels == static_cast<std::size_t>(config_.in_channels),
               ErrorKind::Shape, "discriminator: wrong channel count");
  BRSR_REQUIRE(s.length % kDownsampleFactor == 0 &&
                   s.length >= kDownsampleFactor,
               ErrorKind::Shape,
               "discriminator: input length must be a positive multiple of " +
                   std::to_string(kDownsampleFactor));
  Tensor<T> h = x;
  for (const auto& block : blocks_)
    h = block.forward(h, /*training=*/false, build_grad, nullptr);
  Tensor<T> pooled = adaptive_avg_pool(h);
  Tensor<T> w = Tensor<T>::param(
      *head_weight_,
      Shape{1, 1, static_cast<std::size_t>(config_.channels.back())},
      build_grad);
  Tensor<T> b = Tensor<T>::param(*head_bias_, Shape{1, 1, 1}, build_grad);
  return dense(pooled, w, b);
}

template class ResDownBlock<float>;
template class ResDownBlock<double>;
template class ResUpBlock<float>;
template class ResUpBlock<double>;
template class Generator<float>;
template class Generator<double>;
template class Discriminator<float>;
template class Discriminator<double>;

}  // namespace brsr
