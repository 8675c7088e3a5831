#include "ccr/objectives.hpp"

#include <string>

namespace ccr {

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::OrigCcs: return "origCCS";
    case LossKind::MarginCcr: return "MarginCCR";
    case LossKind::TripletCcr: return "TripletCCR";
    case LossKind::OrdRegCcr: return "OrdRegCCR";
    case LossKind::SupervisedBce: return "bce_pairwise";
    case LossKind::SupervisedMaxMargin: return "max_margin";
    case LossKind::SupervisedTriplet: return "triplet";
    case LossKind::SupervisedCoral: return "coral_ordinal";
  }
  return "origCCS";
}

LossKind loss_kind_from_string(std::string_view text) {
  for (LossKind k : {LossKind::OrigCcs, LossKind::MarginCcr, LossKind::TripletCcr,
                     LossKind::OrdRegCcr, LossKind::SupervisedBce, LossKind::SupervisedMaxMargin,
                     LossKind::SupervisedTriplet, LossKind::SupervisedCoral}) {
    if (to_string(k) == text) return k;
  }
  throw ParseError("unknown loss kind '" + std::string(text) + "'");
}

bool is_supervised(LossKind kind) {
  return kind == LossKind::SupervisedBce || kind == LossKind::SupervisedMaxMargin ||
         kind == LossKind::SupervisedTriplet || kind == LossKind::SupervisedCoral;
}

LossKind supervised_ceiling(LossKind kind) {
  switch (kind) {
    case LossKind::OrigCcs: return LossKind::SupervisedBce;
    case LossKind::MarginCcr: return LossKind::SupervisedMaxMargin;
    case LossKind::TripletCcr: return LossKind::SupervisedTriplet;
    case LossKind::OrdRegCcr: return LossKind::SupervisedCoral;
    default: return kind;
  }
}

LossKind unsupervised_counterpart(LossKind kind) {
  switch (kind) {
    case LossKind::SupervisedBce: return LossKind::OrigCcs;
    case LossKind::SupervisedMaxMargin: return LossKind::MarginCcr;
    case LossKind::SupervisedTriplet: return LossKind::TripletCcr;
    case LossKind::SupervisedCoral: return LossKind::OrdRegCcr;
    default: return kind;
  }
}

bool uses_coral_probe(LossKind kind) {
  return kind == LossKind::OrdRegCcr || kind == LossKind::SupervisedCoral;
}

SampleShape sample_shape(LossKind kind) {
  switch (unsupervised_counterpart(kind)) {
    case LossKind::TripletCcr: return SampleShape::Triple;
    case LossKind::OrdRegCcr: return SampleShape::List;
    default: return SampleShape::Pair;
  }
}

PairMode default_pair_mode(LossKind kind) {
  return unsupervised_counterpart(kind) == LossKind::MarginCcr ? PairMode::Combinations
                                                               : PairMode::Permutations;
}

namespace {

// Accumulates d(loss)/d(score) * d(score)/d(params) for a linear probe.
void chain_linear(Vector& grad, double d_score, double s, std::span<const double> x) {
  const double d_logit = d_score * s * (1.0 - s);
  const std::size_t d = x.size();
  for (std::size_t j = 0; j < d; ++j) grad[j] += d_logit * x[j];
  grad[d] += d_logit;
}

LossValue with_param_gradient(LossValue v, Vector grad) {
  v.gradient = std::move(grad);
  return v;
}

}  // namespace

LossValue pair_objective(LossKind kind, const LinearProbe& probe, const PairSample& sample,
                         const LossConfig& cfg) {
  const double s1 = score(probe, sample.first);
  const double s2 = score(probe, sample.second);
  LossValue v;
  switch (kind) {
    case LossKind::OrigCcs:
      v = orig_ccs(s1, s2, cfg);
      break;
    case LossKind::MarginCcr:
      v = margin_ccr(s1, s2, cfg);
      break;
    case LossKind::SupervisedBce:
      if (sample.first_higher == 0) throw ValidationError("bce_pairwise needs a gold pair label");
      v = bce_pair(s1, s2, sample.first_higher);
      break;
    case LossKind::SupervisedMaxMargin:
      if (sample.first_higher == 0) throw ValidationError("max_margin needs a gold pair label");
      v = max_margin(s1, s2, sample.first_higher, cfg);
      break;
    default:
      throw ValidationError(std::string(to_string(kind)) + " is not a pair objective");
  }
  Vector grad(probe.dim() + 1, 0.0);
  chain_linear(grad, v.gradient[0], s1, sample.first);
  chain_linear(grad, v.gradient[1], s2, sample.second);
  return with_param_gradient(std::move(v), std::move(grad));
}

LossValue triple_objective(LossKind kind, const LinearProbe& probe, const TripleSample& sample,
                           const LossConfig& cfg) {
  const double sc = score(probe, sample.anchor);
  const double sa = score(probe, sample.a);
  const double sb = score(probe, sample.b);
  LossValue v;
  if (kind == LossKind::TripletCcr) {
    v = triplet_ccr(sc, sa, sb, cfg);
  } else if (kind == LossKind::SupervisedTriplet) {
    if (sample.a_closer > 0) {
      v = triplet_supervised(sc, sa, sb, cfg);
    } else if (sample.a_closer < 0) {
      v = triplet_supervised(sc, sb, sa, cfg);
      std::swap(v.gradient[1], v.gradient[2]);
    } else {
      v.gradient = {0.0, 0.0, 0.0};
    }
  } else {
    throw ValidationError(std::string(to_string(kind)) + " is not a triplet objective");
  }
  Vector grad(probe.dim() + 1, 0.0);
  chain_linear(grad, v.gradient[0], sc, sample.anchor);
  chain_linear(grad, v.gradient[1], sa, sample.a);
  chain_linear(grad, v.gradient[2], sb, sample.b);
  return with_param_gradient(std::move(v), std::move(grad));
}

Vector coral_score_matrix(const CoralProbe& probe, std::span<const Vector> items) {
  const std::size_t n = items.size();
  const BiasVector biases = coral_biases(probe.alpha, probe.beta, n);
  Vector m(n * n);
  for (std::size_t row = 0; row < n; ++row) {
    const double z = probe.logit(items[row]);
    for (std::size_t col = 0; col < n; ++col) m[row * n + col] = sigmoid(z + biases.b[col]);
  }
  return m;
}

LossValue list_objective(LossKind kind, const CoralProbe& probe, const ListSample& sample,
                         const LossConfig& cfg) {
  const std::size_t n = sample.items.size();
  if (n < 2) throw ValidationError("ordinal objective needs at least 2 items");
  const BiasVector biases = coral_biases(probe.alpha, probe.beta, n);
  Vector m(n * n);
  Vector logits(n);
  for (std::size_t row = 0; row < n; ++row) {
    logits[row] = probe.logit(sample.items[row]);
    for (std::size_t col = 0; col < n; ++col) m[row * n + col] = sigmoid(logits[row] + biases.b[col]);
  }

  LossValue v;
  if (kind == LossKind::OrdRegCcr) {
    v = ordreg_ccr(m, n, n, cfg);
  } else if (kind == LossKind::SupervisedCoral) {
    if (sample.gold_ranks.size() != n) throw ValidationError("coral_ordinal needs gold ranks");
    v = coral_ordinal(m, n, n, sample.gold_ranks);
  } else {
    throw ValidationError(std::string(to_string(kind)) + " is not a list objective");
  }

  const std::size_t d = probe.dim();
  Vector grad(d + 2, 0.0);
  for (std::size_t row = 0; row < n; ++row) {
    double row_logit_grad = 0.0;
    for (std::size_t col = 0; col < n; ++col) {
      const double s = m[row * n + col];
      const double g = v.gradient[row * n + col] * s * (1.0 - s);
      row_logit_grad += g;
      grad[d] += g * biases.d_alpha[col];
      grad[d + 1] += g * biases.d_beta[col];
    }
    const auto& x = sample.items[row];
    for (std::size_t j = 0; j < d; ++j) grad[j] += row_logit_grad * x[j];
  }
  return with_param_gradient(std::move(v), std::move(grad));
}

}  // namespace ccr
