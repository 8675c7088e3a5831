#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ccr/losses.hpp"
#include "ccr/probe.hpp"
#include "ccr/task_model.hpp"

namespace ccr {

// Objectives that can be trained. The first four are unsupervised; the last
// four are their supervised ceilings, in the same order.
enum class LossKind {
  OrigCcs,
  MarginCcr,
  TripletCcr,
  OrdRegCcr,
  SupervisedBce,
  SupervisedMaxMargin,
  SupervisedTriplet,
  SupervisedCoral,
};

std::string_view to_string(LossKind kind);
LossKind loss_kind_from_string(std::string_view text);

bool is_supervised(LossKind kind);
// OrigCcs <-> SupervisedBce, MarginCcr <-> SupervisedMaxMargin, ...
LossKind supervised_ceiling(LossKind unsupervised);
LossKind unsupervised_counterpart(LossKind supervised);
// OrdRegCcr and SupervisedCoral train a CoralProbe; everything else a LinearProbe.
bool uses_coral_probe(LossKind kind);

enum class SampleShape { Pair, Triple, List };
SampleShape sample_shape(LossKind kind);
// Default pair enumeration for pair-shaped losses: combinations for the
// symmetric margin losses, permutations for the CCS-style ones.
PairMode default_pair_mode(LossKind kind);

// Two activation vectors scored by the same probe. For pair prompts `first`
// is the "Yes" completion and `second` the "No" completion.
// `first_higher` is +1/-1 when gold is known, 0 otherwise.
struct PairSample {
  std::span<const double> first;
  std::span<const double> second;
  int first_higher = 0;
};

// `a_closer` is +1 when `a` is the gold positive (closer to the anchor in
// gold rank), -1 when `b` is, and 0 when unknown or equidistant.
struct TripleSample {
  std::span<const double> anchor;
  std::span<const double> a;
  std::span<const double> b;
  int a_closer = 0;
};

// All items of one task; gold_ranks (1-based, N = best) only for the
// supervised ceiling.
struct ListSample {
  std::span<const Vector> items;
  std::span<const int> gold_ranks;
};

// Gradients over [theta..., bias].
LossValue pair_objective(LossKind kind, const LinearProbe& probe, const PairSample& sample,
                         const LossConfig& cfg);
LossValue triple_objective(LossKind kind, const LinearProbe& probe, const TripleSample& sample,
                           const LossConfig& cfg);
// Gradient over [theta..., alpha, beta].
LossValue list_objective(LossKind kind, const CoralProbe& probe, const ListSample& sample,
                         const LossConfig& cfg);

// N x K score matrix for a list, row-major.
Vector coral_score_matrix(const CoralProbe& probe, std::span<const Vector> items);

}  // namespace ccr
