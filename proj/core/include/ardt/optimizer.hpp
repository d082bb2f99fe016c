#pragma once

#include <cstdint>
#include <vector>

#include "ardt/tensor.hpp"

namespace ardt::nn {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled
  std::int64_t warmup_steps = 0;  // linear warmup, then constant
};

class AdamW {
 public:
  AdamW(std::vector<Tensor> params, AdamWConfig cfg);

  // Applies one update from the accumulated gradients.
  void step();
  void zero_grad();

  std::int64_t step_count() const { return step_; }
  double current_lr() const;
  const AdamWConfig& config() const { return cfg_; }

 private:
  std::vector<Tensor> params_;
  AdamWConfig cfg_;
  std::int64_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace ardt::nn
