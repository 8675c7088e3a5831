#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ccr {

enum class DatasetKind { FactBased, ContextBased };

std::string_view to_string(DatasetKind kind);
DatasetKind dataset_kind_from_string(std::string_view text);

// One ranking problem: a criterion, the items to order, and optionally the
// gold scores. Item order in `items` defines item indices.
struct RankingTask {
  std::string task_id;
  std::string dataset_id;
  std::string criterion;
  std::optional<std::string> context;
  std::vector<std::string> items;
  std::optional<std::vector<double>> gold_scores;
  // Item indices sorted by gold score, highest first. Present iff gold_scores is.
  std::optional<std::vector<std::size_t>> gold_ranking;

  std::size_t size() const { return items.size(); }
  bool has_gold() const { return gold_scores.has_value(); }

  // 1-based gold rank per item, 1 = lowest gold score, N = highest.
  std::vector<int> gold_ranks() const;
};

// Builds a task and derives gold_ranking from gold_scores. Throws
// ValidationError if gold_scores has the wrong length.
RankingTask make_task(std::string task_id, std::string dataset_id, std::string criterion,
                      std::optional<std::string> context, std::vector<std::string> items,
                      std::optional<std::vector<double>> gold_scores = std::nullopt);

// True when two gold scores are exactly equal.
bool has_tied_scores(const std::vector<double>& scores);

struct Dataset {
  std::string dataset_id;
  DatasetKind kind = DatasetKind::FactBased;
  std::vector<RankingTask> tasks;

  const RankingTask* find(std::string_view task_id) const;
};

struct LoadReport {
  Dataset dataset;
  // ids of tasks dropped for having fewer than four items or tied gold scores
  std::vector<std::string> removed;
};

inline constexpr std::size_t kMinTaskItems = 4;

// Reads a task-list JSON document. Tasks with fewer than kMinTaskItems items or
// tied gold scores are dropped and listed in LoadReport::removed.
LoadReport load_dataset(const std::filesystem::path& path);
LoadReport parse_dataset(std::string_view json_text);

std::string dataset_to_json(const Dataset& dataset);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

enum class SyntheticKind { SynthFacts, SynthContext };

std::string_view to_string(SyntheticKind kind);
SyntheticKind synthetic_kind_from_string(std::string_view text);

// The two built-in six-item datasets. Seed 0 keeps items in their canonical
// listing order; any other seed applies a seeded shuffle of item order within
// each task (gold scores travel with their items).
Dataset generate_synthetic(SyntheticKind kind, std::uint64_t seed);

// `task_count` tasks of `items_per_task` abstract items with distinct gold
// scores in random order. Used for planted-direction experiments.
Dataset generate_planted(std::size_t task_count, std::size_t items_per_task, std::uint64_t seed,
                         std::string dataset_id = "planted");

enum class PairMode { Combinations, Permutations };

std::string_view to_string(PairMode mode);
PairMode pair_mode_from_string(std::string_view text);

struct ItemPair {
  std::size_t a = 0;
  std::size_t b = 0;

  friend bool operator==(const ItemPair&, const ItemPair&) = default;
};

// `anchor` is compared against both `a` and `b`.
struct ItemTriple {
  std::size_t anchor = 0;
  std::size_t a = 0;
  std::size_t b = 0;

  friend bool operator==(const ItemTriple&, const ItemTriple&) = default;
};

// Lexicographic order. Permutations: n(n-1) ordered pairs. Combinations:
// n(n-1)/2 pairs with a < b.
std::vector<ItemPair> enumerate_pairs(std::size_t n, PairMode mode);
inline std::vector<ItemPair> enumerate_pairs(const RankingTask& task, PairMode mode) {
  return enumerate_pairs(task.size(), mode);
}

// Every 3-subset emitted three times, once per choice of anchor: 3 * C(n, 3).
std::vector<ItemTriple> enumerate_triples(std::size_t n);
inline std::vector<ItemTriple> enumerate_triples(const RankingTask& task) {
  return enumerate_triples(task.size());
}

}  // namespace ccr
