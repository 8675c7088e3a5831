#include "ccr/adam.hpp"

#include <cmath>
#include <string>

namespace ccr {

Adam::Adam(std::size_t parameter_count, AdamConfig config)
    : config_(config), m_(parameter_count, 0.0), v_(parameter_count, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> gradient) {
  if (params.size() != m_.size() || gradient.size() != m_.size()) {
    throw DimensionError("Adam: expected " + std::to_string(m_.size()) + " parameters, got " +
                         std::to_string(params.size()) + " / gradient " +
                         std::to_string(gradient.size()));
  }
  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = gradient[i];
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
    const double m_hat = m_[i] / correction1;
    const double v_hat = v_[i] / correction2;
    params[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
  }
}

}  // namespace ccr
