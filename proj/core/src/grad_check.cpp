#include "ardt/grad_check.hpp"

#include <cmath>
#include <stdexcept>

namespace ardt::nn {

double grad_check(
    const std::function<Tensor(const std::vector<Tensor>&)>& fn,
    const std::vector<Tensor>& inputs, double eps) {
  for (const auto& t : inputs) {
    if (!t.requires_grad()) {
      throw std::invalid_argument("grad_check: inputs must require grad");
    }
  }
  std::vector<Tensor> work = inputs;
  for (auto& t : work) t.zero_grad();
  Tensor loss = fn(work);
  if (loss.size() != 1) {
    throw std::invalid_argument("grad_check: fn must be scalar-valued");
  }
  backward(loss);

  double max_rel = 0.0;
  for (auto& t : work) {
    auto values = t.data();
    const auto grad = t.grad();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double up = fn(work).value();
      values[i] = saved - eps;
      const double down = fn(work).value();
      values[i] = saved;
      const double fd = (up - down) / (2.0 * eps);
      const double rel = std::abs(grad[i] - fd) / std::max(1.0, std::abs(fd));
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace ardt::nn
