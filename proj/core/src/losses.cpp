#include "ccr/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ccr {

void LossConfig::validate() const {
  if (!(margin >= 0.0)) throw ValidationError("margin must be >= 0");
  if (!(positive_margin >= 0.0)) throw ValidationError("positive_margin must be >= 0");
  if (!(consistency_weight >= 0.0) || !(confidence_weight >= 0.0)) {
    throw ValidationError("loss weights must be >= 0");
  }
}

namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

LossValue combine(double consistency, double confidence, Vector gradient, const LossConfig& cfg) {
  LossValue v;
  v.consistency = consistency;
  v.confidence = confidence;
  v.total = cfg.consistency_weight * consistency + cfg.confidence_weight * confidence;
  v.gradient = std::move(gradient);
  return v;
}

LossValue supervised(double value, Vector gradient) {
  LossValue v;
  v.total = value;
  v.consistency = value;
  v.gradient = std::move(gradient);
  return v;
}

constexpr double kProbFloor = 1e-15;

}  // namespace

LossValue orig_ccs(double s_pos, double s_neg, const LossConfig& cfg) {
  const double c = s_pos - (1.0 - s_neg);
  const double consistency = c * c;
  const double lo = std::min(s_pos, s_neg);
  const double confidence = lo * lo;

  Vector g(2);
  g[0] = cfg.consistency_weight * 2.0 * c;
  g[1] = cfg.consistency_weight * 2.0 * c;
  if (s_pos <= s_neg) {
    g[0] += cfg.confidence_weight * 2.0 * s_pos;
  } else {
    g[1] += cfg.confidence_weight * 2.0 * s_neg;
  }
  return combine(consistency, confidence, std::move(g), cfg);
}

LossValue margin_ccr(double s_a, double s_b, const LossConfig& cfg) {
  const double h_ab = (s_a - s_b) + cfg.margin;
  const double h_ba = (s_b - s_a) + cfg.margin;
  const double l_ab = std::max(0.0, h_ab);
  const double l_ba = std::max(0.0, h_ba);
  Vector g(2, 0.0);
  double value;
  if (l_ab <= l_ba) {
    value = l_ab;
    if (h_ab > 0.0) g = {1.0, -1.0};
  } else {
    value = l_ba;
    if (h_ba > 0.0) g = {-1.0, 1.0};
  }
  for (double& x : g) x *= cfg.consistency_weight;
  return combine(value, 0.0, std::move(g), cfg);
}

LossValue triplet_ccr(double s_anchor, double s_a, double s_b, const LossConfig& cfg) {
  const double d_a = std::abs(s_anchor - s_a);
  const double d_b = std::abs(s_anchor - s_b);
  // d(d_a)/d(s_anchor, s_a, s_b)
  const double sa = sign(s_anchor - s_a);
  const double sb = sign(s_anchor - s_b);
  const double grad_da[3] = {sa, -sa, 0.0};
  const double grad_db[3] = {sb, 0.0, -sb};

  const double h_a = (d_a - d_b) + cfg.margin;  // a as the positive
  const double h_b = (d_b - d_a) + cfg.margin;  // b as the positive
  const double r_a = std::max(0.0, h_a);
  const double r_b = std::max(0.0, h_b);

  Vector g(3, 0.0);
  double role;
  if (r_a <= r_b) {
    role = r_a;
    if (h_a > 0.0) {
      for (int i = 0; i < 3; ++i) g[i] += cfg.consistency_weight * (grad_da[i] - grad_db[i]);
    }
  } else {
    role = r_b;
    if (h_b > 0.0) {
      for (int i = 0; i < 3; ++i) g[i] += cfg.consistency_weight * (grad_db[i] - grad_da[i]);
    }
  }

  const double closest = std::min(d_a, d_b);
  const double h_pos = cfg.positive_margin - closest;
  const double pos = std::max(0.0, h_pos);
  if (h_pos > 0.0) {
    const double* grad_closest = d_a <= d_b ? grad_da : grad_db;
    for (int i = 0; i < 3; ++i) g[i] -= cfg.confidence_weight * grad_closest[i];
  }
  return combine(role, pos, std::move(g), cfg);
}

LossValue ordreg_ccr(std::span<const double> matrix, std::size_t n, std::size_t k,
                     const LossConfig& cfg) {
  if (n != k) {
    throw ValidationError("ordinal objective needs a square matrix, got " + std::to_string(n) +
                          "x" + std::to_string(k));
  }
  if (matrix.size() != n * k) throw DimensionError("score matrix has the wrong number of entries");

  Vector g(n * k, 0.0);
  double consistency = 0.0;
  for (std::size_t col = 0; col < k; ++col) {
    double sum = 0.0;
    for (std::size_t row = 0; row < n; ++row) sum += matrix[row * k + col];
    const double dev = static_cast<double>(k - col) - sum;
    double d_sum;  // d(penalty)/d(column sum)
    if (cfg.column_penalty == ConsistencyPenalty::Absolute) {
      consistency += std::abs(dev);
      d_sum = -sign(dev);
    } else {
      consistency += dev * dev;
      d_sum = -2.0 * dev;
    }
    for (std::size_t row = 0; row < n; ++row) g[row * k + col] += cfg.consistency_weight * d_sum;
  }

  double confidence = 0.0;
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    const double s = matrix[i];
    if (s < 1.0 - s) {
      confidence += s;
      g[i] += cfg.confidence_weight;
    } else {
      confidence += 1.0 - s;
      g[i] -= cfg.confidence_weight;
    }
  }
  return combine(consistency, confidence, std::move(g), cfg);
}

LossValue bce(double s, double target) {
  const double p = std::clamp(s, kProbFloor, 1.0 - kProbFloor);
  double value = 0.0;
  double grad = 0.0;
  if (target > 0.0) {
    value -= target * std::log(s >= 1.0 ? 1.0 : p);
    grad -= target / p;
  }
  if (target < 1.0) {
    value -= (1.0 - target) * std::log(s <= 0.0 ? 1.0 : 1.0 - p);
    grad += (1.0 - target) / (1.0 - p);
  }
  return supervised(value, {grad});
}

LossValue bce_pair(double s_first, double s_second, int first_higher) {
  const double t = first_higher > 0 ? 1.0 : 0.0;
  const LossValue a = bce(s_first, t);
  const LossValue b = bce(s_second, 1.0 - t);
  return supervised(0.5 * (a.total + b.total), {0.5 * a.gradient[0], 0.5 * b.gradient[0]});
}

LossValue max_margin(double s_a, double s_b, int first_higher, const LossConfig& cfg) {
  const double y = first_higher > 0 ? 1.0 : -1.0;
  const double h = cfg.margin - y * (s_a - s_b);
  if (h > 0.0) return supervised(h, {-y, y});
  return supervised(0.0, {0.0, 0.0});
}

LossValue triplet_supervised(double s_anchor, double s_positive, double s_negative,
                             const LossConfig& cfg) {
  const double sp = sign(s_anchor - s_positive);
  const double sn = sign(s_anchor - s_negative);
  const double h =
      std::abs(s_anchor - s_positive) - std::abs(s_anchor - s_negative) + cfg.margin;
  if (h > 0.0) return supervised(h, {sp - sn, -sp, sn});
  return supervised(0.0, {0.0, 0.0, 0.0});
}

LossValue coral_ordinal(std::span<const double> matrix, std::size_t n, std::size_t k,
                        std::span<const int> ranks) {
  if (matrix.size() != n * k) throw DimensionError("score matrix has the wrong number of entries");
  if (ranks.size() != n) throw ValidationError("coral_ordinal needs one gold rank per row");
  Vector g(n * k);
  double value = 0.0;
  for (std::size_t row = 0; row < n; ++row) {
    for (std::size_t col = 0; col < k; ++col) {
      const double target = static_cast<int>(col) < ranks[row] ? 1.0 : 0.0;
      const LossValue e = bce(matrix[row * k + col], target);
      value += e.total;
      g[row * k + col] = e.gradient[0];
    }
  }
  return supervised(value, std::move(g));
}

}  // namespace ccr
