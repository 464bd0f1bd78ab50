#include "brsr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace brsr {

std::string Shape::str() const {
  std::ostringstream os;
  os << "(" << batch << ", " << channels << ", " << length << ")";
  return os.str();
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  auto node = std::make_shared<TensorNode<T>>();
  node->shape = shape;
  node->value.assign(shape.numel(), T(0));
  node->requires_grad = requires_grad;
  return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T fill, bool requires_grad) {
  auto node = std::make_shared<TensorNode<T>>();
  node->shape = shape;
  node->value.assign(shape.numel(), fill);
  node->requires_grad = requires_grad;
  return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::from_data(Shape shape, std::vector<T> data,
                               bool requires_grad) {
  BRSR_REQUIRE(data.size() == shape.numel(), ErrorKind::Shape,
               "from_data: element count mismatch for shape " + shape.str());
  auto node = std::make_shared<TensorNode<T>>();
  node->shape = shape;
  node->value = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::param(Parameter<T>& p, Shape view, bool requires_grad) {
  BRSR_REQUIRE(p.numel() == view.numel(), ErrorKind::Shape,
               "param leaf: view " + view.str() + " does not match parameter '" +
                   p.name + "'");
  auto node = std::make_shared<TensorNode<T>>();
  node->shape = view;
  node->value = p.values;
  node->requires_grad = requires_grad;
  node->param = &p;
  return Tensor<T>(std::move(node));
}

template <typename T>
void DirectGradSink<T>::accumulate(Parameter<T>& p, std::span<const T> grad) {
  p.ensure_grad();
  for (std::size_t i = 0; i < grad.size(); ++i) p.grad[i] += grad[i];
}

template <typename T>
void BufferGradSink<T>::accumulate(Parameter<T>& p, std::span<const T> grad) {
  for (auto& [param, buf] : buffers_) {
    if (param == &p) {
      for (std::size_t i = 0; i < grad.size(); ++i) buf[i] += grad[i];
      return;
    }
  }
  buffers_.emplace_back(&p, std::vector<T>(grad.begin(), grad.end()));
}

template <typename T>
void BufferGradSink<T>::merge_into_params(T scale) {
  for (auto& [param, buf] : buffers_) {
    param->ensure_grad();
    for (std::size_t i = 0; i < buf.size(); ++i)
      param->grad[i] += scale * buf[i];
  }
}

template <typename T>
void BufferGradSink<T>::clear() {
  buffers_.clear();
}

namespace {

template <typename T>
void topo_sort(TensorNode<T>* root,
               std::vector<TensorNode<T>*>& order) {
  // Iterative post-order DFS over the parent DAG.
  std::unordered_set<TensorNode<T>*> visited;
  std::vector<std::pair<TensorNode<T>*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorNode<T>* parent = node->parents[next++].get();
      if (parent->requires_grad && !visited.count(parent)) {
        visited.insert(parent);
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
}

}  // namespace

template <typename T>
void backward(const Tensor<T>& loss, GradSink<T>& sink) {
  BRSR_REQUIRE(loss.defined() && loss.numel() == 1, ErrorKind::Shape,
               "backward: loss must be a defined scalar tensor");
  TensorNode<T>* root = loss.node().get();
  if (!root->requires_grad) return;

  std::vector<TensorNode<T>*> order;
  topo_sort(root, order);

  root->ensure_grad();
  root->grad[0] += T(1);

  // order is post-order: parents before children; walk children first.
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode<T>* node = *it;
    if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
  }
  for (TensorNode<T>* node : order) {
    if (node->param && !node->grad.empty())
      sink.accumulate(*node->param, node->grad);
    // Release gradient buffers except on plain data leaves, whose gradients
    // are read back by gradient checks. Parameter leaves hand their gradient
    // to the sink above, so clearing keeps repeated backward passes additive.
    if (!node->parents.empty() || node->param) {
      node->grad.clear();
      node->grad.shrink_to_fit();
    }
  }
}

template <typename T>
void backward(const Tensor<T>& loss) {
  DirectGradSink<T> sink;
  backward(loss, sink);
}

bool all_finite(std::span<const float> v) {
  for (float x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

template class Tensor<float>;
template class Tensor<double>;
template class DirectGradSink<float>;
template class DirectGradSink<double>;
template class BufferGradSink<float>;
template class BufferGradSink<double>;
template void backward<float>(const Tensor<float>&, GradSink<float>&);
template void backward<double>(const Tensor<double>&, GradSink<double>&);
template void backward<float>(const Tensor<float>&);
template void backward<double>(const Tensor<double>&);

}  // namespace brsr
