#include "brsr/parameter.hpp"

#include <cmath>

namespace brsr {

template <typename T>
Parameter<T>& ParameterSet<T>::create(const std::string& name,
                                      std::vector<std::size_t> dims) {
  BRSR_REQUIRE(!index_.count(name), ErrorKind::Config,
               "duplicate parameter name: " + name);
  auto p = std::make_unique<Parameter<T>>();
  p->name = name;
  p->dims = std::move(dims);
  p->values.assign(p->numel(), T(0));
  index_[name] = params_.size();
  params_.push_back(std::move(p));
  return *params_.back();
}

template <typename T>
Parameter<T>* ParameterSet<T>::find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : params_[it->second].get();
}

template <typename T>
const Parameter<T>* ParameterSet<T>::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : params_[it->second].get();
}

template <typename T>
std::int64_t ParameterSet<T>::total_count() const {
  std::int64_t n = 0;
  for (const auto& p : params_) n += static_cast<std::int64_t>(p->numel());
  return n;
}

template <typename T>
void ParameterSet<T>::zero_grad() {
  for (auto& p : params_)
    if (!p->grad.empty()) std::fill(p->grad.begin(), p->grad.end(), T(0));
}

template <typename T>
void adam_step(Parameter<T>& p, const AdamConfig& cfg) {
  const std::size_t n = p.numel();
  if (p.adam_m.empty()) {
    p.adam_m.assign(n, T(0));
    p.adam_v.assign(n, T(0));
  }
  p.adam_step += 1;
  const double b1 = cfg.beta1, b2 = cfg.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(p.adam_step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(p.adam_step));
  const bool has_grad = !p.grad.empty();
  for (std::size_t i = 0; i < n; ++i) {
    const double g = has_grad ? static_cast<double>(p.grad[i]) : 0.0;
    const double m = b1 * static_cast<double>(p.adam_m[i]) + (1.0 - b1) * g;
    const double v = b2 * static_cast<double>(p.adam_v[i]) + (1.0 - b2) * g * g;
    p.adam_m[i] = static_cast<T>(m);
    p.adam_v[i] = static_cast<T>(v);
    const double m_hat = m / bc1;
    const double v_hat = v / bc2;
    p.values[i] -=
        static_cast<T>(cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps));
  }
  if (has_grad) std::fill(p.grad.begin(), p.grad.end(), T(0));
}

template <typename T>
void adam_step(ParameterSet<T>& params, const AdamConfig& cfg) {
  for (std::size_t i = 0; i < params.size(); ++i) adam_step(params.at(i), cfg);
}

template class ParameterSet<float>;
template class ParameterSet<double>;
template void adam_step<float>(Parameter<float>&, const AdamConfig&);
template void adam_step<double>(Parameter<double>&, const AdamConfig&);
template void adam_step<float>(ParameterSet<float>&, const AdamConfig&);
template void adam_step<double>(ParameterSet<double>&, const AdamConfig&);

}  // namespace brsr
