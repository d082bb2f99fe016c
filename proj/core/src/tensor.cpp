#include "ardt/tensor.hpp"

#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace ardt::nn {
namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

}  // namespace

Tensor make_tensor(std::vector<std::size_t> shape, bool requires_grad) {
  auto node = std::make_shared<detail::TensorNode>();
  node->values.assign(shape_product(shape), 0.0);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  if (requires_grad) node->ensure_grad();
  return Tensor(std::move(node));
}

Tensor make_op_result(std::vector<std::size_t> shape,
                      std::vector<Tensor> parents,
                      std::function<void(detail::TensorNode&)> bwd) {
  bool needs_grad = false;
  for (const auto& p : parents) needs_grad = needs_grad || p.requires_grad();
  Tensor out = make_tensor(std::move(shape), false);
  out.node_->requires_grad = needs_grad;
  if (needs_grad) {
    out.node_->parents.reserve(parents.size());
    for (auto& p : parents) out.node_->parents.push_back(p.node());
    out.node_->backward_fn = std::move(bwd);
  }
  return out;
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  return make_tensor(std::move(shape), requires_grad);
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value,
                    bool requires_grad) {
  Tensor t = make_tensor(std::move(shape), requires_grad);
  for (auto& v : t.node_->values) v = value;
  return t;
}

Tensor Tensor::from_values(std::vector<std::size_t> shape,
                           std::vector<double> values, bool requires_grad) {
  if (shape_product(shape) != values.size()) {
    throw std::invalid_argument("from_values: data length does not match shape");
  }
  Tensor t = make_tensor(std::move(shape), requires_grad);
  t.node_->values = std::move(values);
  return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_values({1}, {value}, requires_grad);
}

Tensor Tensor::randn(std::vector<std::size_t> shape, Rng& rng, double stddev,
                     bool requires_grad) {
  Tensor t = make_tensor(std::move(shape), requires_grad);
  for (auto& v : t.node_->values) v = rng.normal() * stddev;
  return t;
}

double Tensor::value() const {
  if (!node_ || node_->values.size() != 1) {
    throw std::invalid_argument("value() requires a single-element tensor");
  }
  return node_->values[0];
}

std::string Tensor::shape_string() const {
  if (!node_) return "[]";
  std::string s = "[";
  for (std::size_t i = 0; i < node_->shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(node_->shape[i]);
  }
  return s + "]";
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw std::invalid_argument("backward: loss must be a scalar");
  }
  // Depth-first topological order over the tape.
  std::vector<detail::TensorNode*> order;
  std::unordered_set<detail::TensorNode*> seen;
  std::vector<std::pair<detail::TensorNode*, std::size_t>> stack;
  stack.emplace_back(loss.raw(), 0);
  seen.insert(loss.raw());
  while (!stack.empty()) {
    auto& [node, next_child] = stack.back();
    if (next_child < node->parents.size()) {
      detail::TensorNode* child = node->parents[next_child].get();
      ++next_child;
      if (child->requires_grad && !seen.count(child)) {
        seen.insert(child);
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  loss.raw()->ensure_grad();
  loss.raw()->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::TensorNode* node = *it;
    if (node->backward_fn && node->requires_grad) {
      for (auto& p : node->parents) {
        if (p->requires_grad) p->ensure_grad();
      }
      node->backward_fn(*node);
    }
  }
}

}  // namespace ardt::nn
