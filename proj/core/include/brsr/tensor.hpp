#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "brsr/common.hpp"
#include "brsr/parameter.hpp"

namespace brsr {

// All activations are batched 1D feature maps: (batch, channels, length),
// stored row-major with the length axis contiguous.
struct Shape {
  std::size_t batch = 0;
  std::size_t channels = 0;
  std::size_t length = 0;

  std::size_t numel() const { return batch * channels * length; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

template <typename T>
struct TensorNode {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // allocated lazily during backward
  bool requires_grad = false;
  Parameter<T>* param = nullptr;  // set on parameter leaves
  std::vector<std::shared_ptr<TensorNode<T>>> parents;
  // Propagates this->grad into parents' grad buffers.
  std::function<void(TensorNode<T>&)> backward_fn;

  void ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), T(0));
  }
};

// Value-semantic handle onto a graph node. Copies share the node.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T fill, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<T> data,
                          bool requires_grad = false);
  // Leaf bound to a parameter; `view` must have the same element count as the
  // parameter (parameters may have arbitrary logical rank).
  static Tensor param(Parameter<T>& p, Shape view, bool requires_grad = true);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t numel() const { return node_->shape.numel(); }
  bool requires_grad() const { return node_->requires_grad; }

  std::span<const T> data() const { return node_->value; }
  // Mutable access is intended for leaves only (input loading, finite
  // difference probes); mutating an interior node invalidates the graph.
  std::span<T> mutable_data() { return node_->value; }
  std::span<const T> grad() const { return node_->grad; }

  T value_at(std::size_t b, std::size_t c, std::size_t l) const {
    const Shape& s = node_->shape;
    return node_->value[(b * s.channels + c) * s.length + l];
  }
  T scalar() const {
    BRSR_REQUIRE(numel() == 1, ErrorKind::Shape, "scalar() on non-scalar tensor");
    return node_->value[0];
  }

  std::shared_ptr<TensorNode<T>>& node() { return node_; }
  const std::shared_ptr<TensorNode<T>>& node() const { return node_; }

  explicit Tensor(std::shared_ptr<TensorNode<T>> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<TensorNode<T>> node_;
};

// Receives parameter gradients discovered during backward traversal.
template <typename T>
class GradSink {
 public:
  virtual ~GradSink() = default;
  virtual void accumulate(Parameter<T>& p, std::span<const T> grad) = 0;
};

// Accumulates straight into Parameter::grad (single-threaded use).
template <typename T>
class DirectGradSink : public GradSink<T> {
 public:
  void accumulate(Parameter<T>& p, std::span<const T> grad) override;
};

// Accumulates into private buffers; used by data-parallel training where
// per-chunk gradients are merged in a fixed order afterwards.
template <typename T>
class BufferGradSink : public GradSink<T> {
 public:
  void accumulate(Parameter<T>& p, std::span<const T> grad) override;
  // Adds scale * buffer into each parameter's grad. Deterministic: parameters
  // are visited in first-seen order.
  void merge_into_params(T scale);
  void clear();

 private:
  std::vector<std::pair<Parameter<T>*, std::vector<T>>> buffers_;
};

// Reverse-mode sweep from a scalar loss. Seeds d(loss)/d(loss) = 1, runs all
// node backward functions in reverse topological order, then hands every
// reachable parameter leaf's gradient to the sink. Repeated calls accumulate.
template <typename T>
void backward(const Tensor<T>& loss, GradSink<T>& sink);

// Convenience: accumulate into Parameter::grad directly.
template <typename T>
void backward(const Tensor<T>& loss);

bool all_finite(std::span<const float> v);
bool all_finite(std::span<const double> v);

}  // namespace brsr
