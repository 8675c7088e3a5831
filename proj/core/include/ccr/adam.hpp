#pragma once

#include <cstddef>
#include <span>

#include "ccr/common.hpp"

namespace ccr {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias-corrected moment estimates over a flat parameter vector.
class Adam {
 public:
  Adam(std::size_t parameter_count, AdamConfig config = {});

  void step(std::span<double> params, std::span<const double> gradient);

  std::size_t steps_taken() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  Vector m_;
  Vector v_;
  std::size_t t_ = 0;
};

}  // namespace ccr
