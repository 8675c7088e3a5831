#include "ccr/mock_lm.hpp"

#include <cmath>
#include <random>

namespace ccr::mock {

namespace {

Vector unit_vector(std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector u(dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& x : u) {
      x = normal(rng);
      norm += x * x;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (double& x : u) x /= norm;
  return u;
}

// Standard normal draw keyed on a label, independent of call order.
double keyed_normal(std::uint64_t seed, const std::string& key) {
  Rng rng(derive_seed(seed, key));
  std::normal_distribution<double> normal(0.0, 1.0);
  return normal(rng);
}

std::vector<int> require_ranks(const RankingTask& task) {
  if (!task.has_gold()) throw ValidationError("mock LM needs gold scores for task '" + task.task_id + "'");
  return task.gold_ranks();
}

}  // namespace

Vector planted_direction(std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw ValidationError("planted direction needs dim >= 1");
  return unit_vector(dim, derive_seed(seed, "direction"));
}

std::vector<ActivationRecord> embeddings(const RankingTask& task, std::span<const double> direction,
                                         double noise_sigma, std::uint64_t seed) {
  const std::vector<int> ranks = require_ranks(task);
  Rng rng(derive_seed(seed, "embeddings/" + task.task_id));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<ActivationRecord> out;
  for (std::size_t i = 0; i < task.size(); ++i) {
    ActivationRecord rec;
    rec.task_id = task.task_id;
    rec.item_index = i;
    rec.variant = PromptVariant::Single;
    rec.vector.resize(direction.size());
    for (std::size_t j = 0; j < direction.size(); ++j) {
      const double noise = noise_sigma > 0.0 ? noise_sigma * normal(rng) : 0.0;
      rec.vector[j] = ranks[i] * direction[j] + noise;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<ActivationRecord> embeddings(const RankingTask& task, std::size_t dim,
                                         double noise_sigma, std::uint64_t seed) {
  const Vector u = planted_direction(dim, seed);
  return embeddings(task, u, noise_sigma, seed);
}

std::vector<ActivationRecord> pair_embeddings(const RankingTask& task, std::size_t dim,
                                              double noise_sigma, std::uint64_t seed) {
  const std::vector<int> ranks = require_ranks(task);
  const Vector u = planted_direction(dim, seed);
  Vector yes_offset = unit_vector(dim, derive_seed(seed, "yes-cluster"));
  Vector no_offset = unit_vector(dim, derive_seed(seed, "no-cluster"));
  for (double& x : yes_offset) x *= 3.0;
  for (double& x : no_offset) x *= 3.0;

  Rng rng(derive_seed(seed, "pair-embeddings/" + task.task_id));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<ActivationRecord> out;
  for (const auto& p : enumerate_pairs(task.size(), PairMode::Permutations)) {
    const double diff = static_cast<double>(ranks[p.a] - ranks[p.b]);
    for (PromptVariant variant : {PromptVariant::PairPos, PromptVariant::PairNeg}) {
      const bool pos = variant == PromptVariant::PairPos;
      ActivationRecord rec;
      rec.task_id = task.task_id;
      rec.item_index = p.a;
      rec.pair_index = p.b;
      rec.variant = variant;
      rec.vector.resize(dim);
      for (std::size_t j = 0; j < dim; ++j) {
        const double noise = noise_sigma > 0.0 ? noise_sigma * normal(rng) : 0.0;
        rec.vector[j] = (pos ? diff : -diff) * u[j] + (pos ? yes_offset[j] : no_offset[j]) + noise;
      }
      out.push_back(std::move(rec));
    }
  }
  return out;
}

std::vector<PairLogits> pair_logits(const RankingTask& task, const LogitConfig& cfg) {
  const std::vector<int> ranks = require_ranks(task);
  const double span = static_cast<double>(std::max<std::size_t>(task.size() - 1, 1));
  std::vector<PairLogits> out;
  for (const auto& p : enumerate_pairs(task.size(), PairMode::Permutations)) {
    const double truth = static_cast<double>(ranks[p.a] - ranks[p.b]) / span;
    const double noise =
        cfg.fidelity < 1.0
            ? keyed_normal(cfg.seed, "pair/" + task.task_id + "/" + std::to_string(p.a) + "," +
                                         std::to_string(p.b))
            : 0.0;
    const double signal = cfg.fidelity * truth + (1.0 - cfg.fidelity) * noise;
    LogitRecord rec;
    rec.request_id = pair_request_id(task.task_id, p.a, p.b);
    rec.task_id = task.task_id;
    rec.variant = PromptVariant::Pair;
    rec.candidate_logits[std::string(kYesToken)] = cfg.bias + signal;
    rec.candidate_logits[std::string(kNoToken)] = -signal;
    out.push_back({p, std::move(rec)});
  }
  return out;
}

std::vector<LogitRecord> single_logits(const RankingTask& task, const LogitConfig& cfg) {
  const std::vector<int> ranks = require_ranks(task);
  const double span = static_cast<double>(std::max<std::size_t>(task.size() - 1, 1));
  std::vector<LogitRecord> out;
  for (std::size_t i = 0; i < task.size(); ++i) {
    double target = kScaleMax * static_cast<double>(ranks[i] - 1) / span;
    if (cfg.fidelity < 1.0) {
      target += (1.0 - cfg.fidelity) * 3.0 *
                keyed_normal(cfg.seed, "single/" + task.task_id + "/" + std::to_string(i));
    }
    LogitRecord rec;
    rec.request_id = single_request_id(task.task_id, i);
    rec.task_id = task.task_id;
    rec.variant = PromptVariant::Single;
    for (int v = 0; v <= kScaleMax; ++v) {
      double logit = -std::abs(static_cast<double>(v) - target);
      if (v == kScaleMax / 2) logit += cfg.bias;
      rec.candidate_logits[std::to_string(v)] = logit;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

ListwiseMock::ListwiseMock(const RankingTask& task, LogitConfig cfg)
    : task_(&task), cfg_(cfg), ranks_(require_ranks(task)) {}

LogitRecord ListwiseMock::respond(const ListwiseRequest& request) {
  if (request.candidates.size() != request.remaining.size()) {
    throw ValidationError("listwise request '" + request.request_id + "' is malformed");
  }
  const double n = static_cast<double>(task_->size());
  LogitRecord rec;
  rec.request_id = request.request_id;
  rec.task_id = request.task_id;
  rec.variant = PromptVariant::List;
  for (std::size_t pos = 0; pos < request.remaining.size(); ++pos) {
    const std::size_t item = request.remaining[pos];
    double logit = cfg_.fidelity * 4.0 * ranks_.at(item) / n;
    if (cfg_.fidelity < 1.0) {
      logit += (1.0 - cfg_.fidelity) *
               keyed_normal(cfg_.seed, "list/" + request.request_id + "/" + std::to_string(item));
    }
    if (pos == 0) logit += cfg_.bias;
    rec.candidate_logits[request.candidates[pos]] = logit;
  }
  return rec;
}

}  // namespace ccr::mock
