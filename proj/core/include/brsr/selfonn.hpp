#pragma once

#include <cstdint>
#include <string>

#include "brsr/ops.hpp"
#include "brsr/rng.hpp"
#include "brsr/tensor.hpp"

namespace brsr {

// A generative-neuron 1D layer: a degree-Q polynomial nodal operator realized
// as Q parallel convolutions over elementwise powers of the input,
//   out = bias + sum_{q=1..Q} conv1d(W[:,:,:,q], input^q).
// The constant (q=0) term is omitted; the bias absorbs it. With Q=1 the layer
// is an ordinary convolution.
struct SelfOnnConfig {
  int in_channels = 0;
  int out_channels = 0;
  int kernel_size = 3;
  int q_order = 3;
  int stride = 1;
  bool has_bias = true;
  Padding padding = Padding::same();
};

template <typename T>
class SelfOnn1d {
 public:
  // Registers "<path>.weight" (out, in, K, Q) and optionally "<path>.bias"
  // (out) in `params`. Weights are Xavier-uniform with the Q powers counted
  // as extra fan-in so that tanh inputs stay unsaturated at initialization.
  SelfOnn1d(ParameterSet<T>& params, const std::string& path,
            const SelfOnnConfig& config, Rng& init_rng);

  // `build_grad` controls whether parameter leaves participate in backward.
  Tensor<T> forward(const Tensor<T>& input, bool build_grad) const;

  const SelfOnnConfig& config() const { return config_; }
  static std::int64_t param_count(const SelfOnnConfig& config);

 private:
  SelfOnnConfig config_;
  Parameter<T>* weight_ = nullptr;
  Parameter<T>* bias_ = nullptr;
};

}  // namespace brsr
