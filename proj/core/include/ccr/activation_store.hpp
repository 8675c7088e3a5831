#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ccr/common.hpp"
#include "ccr/task_model.hpp"

namespace ccr {

// Which prompt produced a record. `pair_pos`/`pair_neg` are the ItemPair
// prompt completed with "Yes" and "No"; `pair` and `list` only occur on logit
// records from prompting.
enum class PromptVariant { Single, PairPos, PairNeg, Pair, List };

std::string_view to_string(PromptVariant variant);
PromptVariant prompt_variant_from_string(std::string_view text);

struct ActivationRecord {
  std::string task_id;
  std::size_t item_index = 0;
  // Second item of an ItemPair prompt; item_index is the first.
  std::optional<std::size_t> pair_index;
  PromptVariant variant = PromptVariant::Single;
  Vector vector;

  friend bool operator==(const ActivationRecord&, const ActivationRecord&) = default;
};

struct LogitRecord {
  std::string request_id;
  std::string task_id;
  PromptVariant variant = PromptVariant::Single;
  std::map<std::string, double> candidate_logits;

  double logit(const std::string& token) const;
  bool has(const std::string& token) const { return candidate_logits.count(token) != 0; }

  friend bool operator==(const LogitRecord&, const LogitRecord&) = default;
};

struct DumpManifest {
  std::string model;
  std::string layer = "last";
  std::size_t dimension = 0;
  std::string template_id;
};

// JSONL readers enforce one dimension per dump and finite values. Errors name
// the 1-based line number.
std::vector<ActivationRecord> read_activation_dump(const std::filesystem::path& path);
std::vector<LogitRecord> read_logit_dump(const std::filesystem::path& path);
std::vector<ActivationRecord> parse_activation_dump(std::string_view text);
std::vector<LogitRecord> parse_logit_dump(std::string_view text);

void write_activation_dump(std::span<const ActivationRecord> records,
                           const std::filesystem::path& path);
void write_logit_dump(std::span<const LogitRecord> records, const std::filesystem::path& path);
std::string activation_record_to_json(const ActivationRecord& record);
std::string logit_record_to_json(const LogitRecord& record);

DumpManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DumpManifest& manifest, const std::filesystem::path& path);

inline constexpr double kStdFloor = 1e-8;

// Per-dimension Z-score with population standard deviation floored at
// kStdFloor. Requires at least two vectors of equal length.
std::vector<Vector> z_normalize(std::span<const Vector> batch);

// Mean and floored population std per dimension.
struct Moments {
  Vector mean;
  Vector stddev;
};
Moments batch_moments(std::span<const Vector> batch);
std::vector<Vector> apply_moments(std::span<const Vector> batch, const Moments& moments);

// Normalizes the "Yes" and "No" classes independently so they stop forming
// two clusters.
std::pair<std::vector<Vector>, std::vector<Vector>> normalize_contrast_classes(
    std::span<const Vector> pos, std::span<const Vector> neg);

struct PairActivation {
  ItemPair pair;
  Vector pos;
  Vector neg;
};

// All activations belonging to one ranking task, grouped for training.
struct TaskActivations {
  std::string task_id;
  std::vector<Vector> items;          // one per item, ItemSingle prompt
  std::vector<PairActivation> pairs;  // one per ordered pair, ItemPair prompt
  std::vector<double> gold_scores;    // empty when the task has no gold

  std::size_t dimension() const;
  bool has_gold() const { return !gold_scores.empty(); }
};

// Groups dump records for one task. Missing ItemSingle records for any item
// are an error when `require_items` is set; pair records are optional.
TaskActivations collect_task(std::span<const ActivationRecord> records, const RankingTask& task,
                             bool require_items = true);

enum class NormalizationScope { PerTask, PerFold };

std::string_view to_string(NormalizationScope scope);
NormalizationScope normalization_scope_from_string(std::string_view text);

// Z-normalizes items and, separately, the pos/neg pair classes of one task.
TaskActivations normalize_task(const TaskActivations& task);

}  // namespace ccr
