#pragma once

#include <functional>
#include <vector>

#include "ardt/tensor.hpp"

namespace ardt::nn {

// Central finite differences against reverse-mode gradients for a
// scalar-valued function of the given inputs. Returns
// max_i |g_ad[i] - g_fd[i]| / max(1, |g_fd[i]|).
double grad_check(
    const std::function<Tensor(const std::vector<Tensor>&)>& fn,
    const std::vector<Tensor>& inputs, double eps = 1e-5);

}  // namespace ardt::nn
