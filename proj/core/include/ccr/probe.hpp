#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ccr/common.hpp"

namespace ccr {

// Affine sigmoid scorer s = sigmoid(theta . x + bias).
struct LinearProbe {
  Vector theta;
  double bias = 0.0;

  std::size_t dim() const { return theta.size(); }
  double logit(std::span<const double> x) const;
};

// CORAL-style scorer with a shared weight vector and K ordered thresholds
// generated from two positive shape parameters.
struct CoralProbe {
  Vector theta;
  double alpha = 1.0;
  double beta = 1.0;

  std::size_t dim() const { return theta.size(); }
  double logit(std::span<const double> x) const;  // theta . x, without thresholds
};

using Probe = std::variant<LinearProbe, CoralProbe>;

double score(const LinearProbe& probe, std::span<const double> x);

// Thresholds b_1 > b_2 > ... > b_K with mean zero.
struct BiasVector {
  Vector b;
  // Derivatives of every b_k with respect to alpha and beta.
  Vector d_alpha;
  Vector d_beta;
};

// Cut points delta_k = k / (K + 1) are pushed through
// delta^(alpha-1) * (1 - delta)^(beta-1), accumulated right to left, and
// centred. Requires alpha, beta > 0 and K >= 2.
BiasVector coral_biases(double alpha, double beta, std::size_t k);

// Row of K scores sigmoid(theta . x + b_k); non-increasing in k.
Vector coral_scores(const CoralProbe& probe, std::span<const double> x, std::size_t k);

// Rank in the extended binary encoding: the number of scores above 0.5,
// clamped to at least 1. [0.9, 0.7, 0.6, 0.1] -> 3.
std::size_t predict_rank(std::span<const double> row);

// Combines the scores of the "Yes" and "No" completions of one pair prompt
// into a single probability that the first item ranks higher.
double pair_score(double f_pos, double f_neg);

std::string probe_to_json(const Probe& probe, std::optional<std::size_t> k = std::nullopt);
Probe probe_from_json(std::string_view text);

}  // namespace ccr
