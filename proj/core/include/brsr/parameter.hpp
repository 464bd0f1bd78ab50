#pragma once

#include <cstdint>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "brsr/common.hpp"

namespace brsr {

// A trainable array with an arbitrary logical shape plus its gradient
// accumulator and Adam state. Owned by a ParameterSet; layers hold stable
// pointers into the set.
template <typename T>
struct Parameter {
  std::string name;
  std::vector<std::size_t> dims;
  std::vector<T> values;
  std::vector<T> grad;    // empty until first accumulation
  std::vector<T> adam_m;  // first moment, zero-initialized on first step
  std::vector<T> adam_v;  // second moment
  std::int64_t adam_step = 0;

  std::size_t numel() const {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
  void ensure_grad() {
    if (grad.empty()) grad.assign(numel(), T(0));
  }
};

template <typename T>
class ParameterSet {
 public:
  Parameter<T>& create(const std::string& name, std::vector<std::size_t> dims);
  Parameter<T>* find(const std::string& name);
  const Parameter<T>* find(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  Parameter<T>& at(std::size_t i) { return *params_[i]; }
  const Parameter<T>& at(std::size_t i) const { return *params_[i]; }

  std::int64_t total_count() const;
  void zero_grad();

 private:
  std::vector<std::unique_ptr<Parameter<T>>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.5;  // GAN-stability convention; the usual 0.9 is configurable
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard Adam update with bias correction over every parameter in the set.
// Parameters without an allocated gradient are treated as having zero
// gradient. All gradients are zeroed afterwards.
template <typename T>
void adam_step(ParameterSet<T>& params, const AdamConfig& cfg);

// Single-parameter variant (used by unit tests and small experiments).
template <typename T>
void adam_step(Parameter<T>& p, const AdamConfig& cfg);

}  // namespace brsr
