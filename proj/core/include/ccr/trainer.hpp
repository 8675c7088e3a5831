#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ccr/activation_store.hpp"
#include "ccr/adam.hpp"
#include "ccr/evaluation.hpp"
#include "ccr/objectives.hpp"
#include "ccr/probe.hpp"

namespace ccr {

// Which prompt the activations come from: one vector per item (ItemSingle)
// or a Yes/No vector pair per ordered item pair (ItemPair).
enum class ActivationSource { ItemSingle, ItemPair };

struct TrainConfig {
  std::size_t epochs = 200;
  AdamConfig adam;
  LossConfig loss;
  std::size_t restarts = 1;
  std::uint64_t seed = 0;
  // Overrides default_pair_mode() for pair-shaped losses on ItemSingle data.
  std::optional<PairMode> pair_mode;
  // Standard deviation of the initial weights; 1/sqrt(d) when unset.
  std::optional<double> init_scale;
  ActivationSource source = ActivationSource::ItemSingle;

  void validate() const;
};

struct TrainResult {
  Probe probe;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  Vector loss_trace;  // full-objective mean after every epoch
  std::uint64_t seed_used = 0;
  std::size_t restart_index = 0;
  std::size_t datapoints = 0;       // loss datapoints per epoch
  std::size_t optimizer_steps = 0;  // per restart
};

// The enumerated loss datapoints of a training run. Samples reference the
// activations passed to build_training_set, which must outlive this object.
class TrainingSet {
 public:
  TrainingSet() = default;
  TrainingSet(TrainingSet&&) = default;
  TrainingSet& operator=(TrainingSet&&) = default;
  TrainingSet(const TrainingSet&) = delete;
  TrainingSet& operator=(const TrainingSet&) = delete;

  std::vector<PairSample> pairs;
  std::vector<TripleSample> triples;
  std::vector<ListSample> lists;

  std::size_t size() const { return pairs.size() + triples.size() + lists.size(); }

 private:
  friend TrainingSet build_training_set(std::span<const TaskActivations>, LossKind,
                                        const TrainConfig&);
  std::vector<std::vector<int>> gold_ranks_;
};

// Enumerates datapoints: pairs (permutations or combinations), triples with
// every anchor, or one full list per task. ItemPair data contributes one
// datapoint per recorded pair prompt.
TrainingSet build_training_set(std::span<const TaskActivations> tasks, LossKind kind,
                               const TrainConfig& cfg);

// Mean loss and mean parameter gradient over a training set. Parameters are
// flattened as [theta, bias] or [theta, alpha, beta].
LossValue evaluate_training_set(const TrainingSet& set, LossKind kind, const Probe& probe,
                                const LossConfig& cfg);

// Trains on already-normalized activations (see normalize_task). One Adam
// step per datapoint; an epoch is a full pass. With restarts > 1 the run with
// the lowest final loss is returned.
TrainResult train_probe(std::span<const TaskActivations> tasks, LossKind kind,
                        const TrainConfig& cfg);

// Per-item ranking scores: sigmoid(theta . x + b) for a linear probe, the
// expected rank (row sum of the CORAL score matrix) for a CORAL probe.
Vector item_scores(const Probe& probe, std::span<const Vector> items);

struct ProbePrediction {
  RankingPrediction ranking;
  std::vector<PairDecision> decisions;  // only for ItemPair data
};

// Ranking read off a trained probe. ItemSingle: items sorted by score.
// ItemPair: each pair prompt is decided by pair_score and the decisions are
// aggregated with pairs_to_ranking.
ProbePrediction predict(const Probe& probe, const TaskActivations& task, std::size_t item_count,
                        ActivationSource source);

struct ItemScore {
  std::size_t item_index = 0;
  std::string item;
  double score = 0.0;
};

std::vector<ItemScore> export_item_scores(const Probe& probe, const RankingTask& task,
                                          const TaskActivations& activations);
void write_item_scores_csv(std::span<const ItemScore> scores, const std::filesystem::path& path);
std::vector<ItemScore> read_item_scores_csv(const std::filesystem::path& path);
void write_loss_trace_csv(const TrainResult& result, const std::filesystem::path& path);

struct FoldResult {
  std::size_t fold = 0;
  std::vector<std::string> test_task_ids;
  TrainResult train;
  std::vector<TaskMetrics> test_metrics;
  double tau_abs = 0.0;
  double pairwise_accuracy = 0.0;
};

struct KFoldResult {
  std::vector<FoldResult> folds;
  Summary tau_abs;
  Summary pairwise_accuracy;
};

// Assigns task i of a seeded shuffle to fold (i mod k).
std::vector<std::vector<std::size_t>> kfold_partition(std::size_t task_count, std::size_t k,
                                                      std::uint64_t seed);

// Trains on k-1 folds with all their datapoints pooled and evaluates on the
// held-out fold. `activations` are raw (unnormalized) and aligned with `tasks`.
KFoldResult train_kfold(std::span<const RankingTask> tasks,
                        std::span<const TaskActivations> activations, LossKind kind,
                        std::size_t k, const TrainConfig& cfg,
                        NormalizationScope scope = NormalizationScope::PerTask);

}  // namespace ccr
