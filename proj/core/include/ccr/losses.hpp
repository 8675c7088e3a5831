#pragma once

#include <cstddef>
#include <span>

#include "ccr/common.hpp"

namespace ccr {

enum class ConsistencyPenalty { Absolute, Squared };

struct LossConfig {
  double margin = 0.2;
  // Keeps the anchor and the closer item of a triplet from collapsing.
  double positive_margin = 0.05;
  double consistency_weight = 1.0;
  double confidence_weight = 1.0;
  // Penalty on column-sum deviations in the ordinal objective.
  ConsistencyPenalty column_penalty = ConsistencyPenalty::Absolute;

  void validate() const;
};

// total = consistency_weight * consistency + confidence_weight * confidence.
//
// The score-level functions in this header report `gradient` with respect to
// their score arguments, in argument order (row-major for matrices). The
// probe-level objectives in objectives.hpp report it with respect to probe
// parameters.
struct LossValue {
  double total = 0.0;
  double consistency = 0.0;
  double confidence = 0.0;
  Vector gradient;
};

// (s_pos - (1 - s_neg))^2 + min(s_pos, s_neg)^2
LossValue orig_ccs(double s_pos, double s_neg, const LossConfig& cfg = {});

// min(max(0, s_a - s_b + m), max(0, s_b - s_a + m)); symmetric in (a, b).
// The whole hinge is reported as the consistency component.
LossValue margin_ccr(double s_a, double s_b, const LossConfig& cfg = {});

// Role term: min over which of a/b is treated as the positive of the triplet
// hinge |C-P| - |C-N| + m (consistency). Positive-margin term:
// max(0, m_pos - min(|C-A|, |C-B|)) (confidence).
LossValue triplet_ccr(double s_anchor, double s_a, double s_b, const LossConfig& cfg = {});

// Row-major N x K score matrix with N == K. Consistency pushes column k
// (1-based) to sum to K - k + 1; confidence sums min(s, 1 - s).
LossValue ordreg_ccr(std::span<const double> matrix, std::size_t n, std::size_t k,
                     const LossConfig& cfg = {});

// Supervised ceilings. Labels: `first_higher` is +1 when the first item ranks
// above the second and -1 otherwise.
LossValue bce(double s, double target);
LossValue bce_pair(double s_first, double s_second, int first_higher);
LossValue max_margin(double s_a, double s_b, int first_higher, const LossConfig& cfg = {});
LossValue triplet_supervised(double s_anchor, double s_positive, double s_negative,
                             const LossConfig& cfg = {});
// `ranks` holds the 1-based gold rank per row; rank r targets r ones
// followed by zeros.
LossValue coral_ordinal(std::span<const double> matrix, std::size_t n, std::size_t k,
                        std::span<const int> ranks);

}  // namespace ccr
