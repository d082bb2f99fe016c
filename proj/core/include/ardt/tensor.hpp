#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ardt/rng.hpp"

namespace ardt::nn {

class Tensor;

namespace detail {

// One tape node: values plus the closure that pushes gradients to parents.
struct TensorNode {
  std::vector<std::size_t> shape;
  std::vector<double> values;
  std::vector<double> grad;  // allocated lazily, same length as values
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward_fn;

  std::size_t size() const { return values.size(); }
  void ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
  }
};

}  // namespace detail

// Dense 64-bit float tensor with reverse-mode autodiff. Copying a Tensor
// copies the handle, not the buffer; graphs are rebuilt per training step.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
  static Tensor full(std::vector<std::size_t> shape, double value,
                     bool requires_grad = false);
  static Tensor from_values(std::vector<std::size_t> shape,
                            std::vector<double> values,
                            bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  // Gaussian init, std `stddev`.
  static Tensor randn(std::vector<std::size_t> shape, Rng& rng, double stddev,
                      bool requires_grad = true);

  bool defined() const { return node_ != nullptr; }
  const std::vector<std::size_t>& shape() const { return node_->shape; }
  std::size_t size() const { return node_->values.size(); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape[i]; }

  std::span<double> data() { return node_->values; }
  std::span<const double> data() const { return node_->values; }
  double value() const;  // requires a single-element tensor

  bool requires_grad() const { return node_->requires_grad; }
  std::span<const double> grad() const { return node_->grad; }
  void zero_grad() {
    if (node_) node_->grad.assign(node_->values.size(), 0.0);
  }

  std::shared_ptr<detail::TensorNode> node() const { return node_; }
  detail::TensorNode* raw() const { return node_.get(); }

  std::string shape_string() const;

 private:
  explicit Tensor(std::shared_ptr<detail::TensorNode> node)
      : node_(std::move(node)) {}
  friend Tensor make_tensor(std::vector<std::size_t> shape,
                            bool requires_grad);
  friend Tensor make_op_result(std::vector<std::size_t> shape,
                               std::vector<Tensor> parents,
                               std::function<void(detail::TensorNode&)> bwd);

  std::shared_ptr<detail::TensorNode> node_;
};

Tensor make_tensor(std::vector<std::size_t> shape, bool requires_grad);

// Result tensor wired into the tape. `bwd` runs during the backward sweep;
// it must accumulate (+=) into parent grads. The result requires grad iff
// any parent does.
Tensor make_op_result(std::vector<std::size_t> shape,
                      std::vector<Tensor> parents,
                      std::function<void(detail::TensorNode&)> bwd);

// Reverse-mode sweep from a scalar loss. Gradients accumulate into every
// reachable tensor with requires_grad; repeated calls without zero_grad
// keep accumulating. Throws std::invalid_argument on a non-scalar loss.
void backward(const Tensor& loss);

}  // namespace ardt::nn
