#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ccr/activation_store.hpp"
#include "ccr/prompting.hpp"
#include "ccr/task_model.hpp"
#include "ccr/trainer.hpp"

namespace ccr {

// Every method an experiment grid can contain.
enum class Method {
  OrigCcsP,
  OrigCcsS,
  MarginCcrS,
  TripletCcrS,
  OrdRegCcrS,
  PromptP,
  PromptS,
  PromptL,
  SupBceP,
  SupBceS,
  SupMaxMarginS,
  SupTripletS,
  SupCoralS,
};

std::string_view to_string(Method method);
Method method_from_string(std::string_view text);

struct MethodInfo {
  Method method;
  bool is_probe;
  LossKind loss;                 // probe methods only
  ActivationSource source;       // probe methods only
  PromptType prompt;             // prompt the method consumes
};
MethodInfo method_info(Method method);

// The five unsupervised probes followed by the three prompting strategies.
std::vector<Method> default_methods();
std::vector<Method> supervised_methods();

struct DatasetSpec {
  // Exactly one of `path` or `synthetic` is set.
  std::optional<std::filesystem::path> path;
  std::optional<std::string> synthetic;  // synthfacts | synthcontext | planted
  std::uint64_t seed = 0;
  std::size_t planted_tasks = 8;
  std::size_t planted_items = 8;
  std::string planted_id = "planted";
};

struct MockSpec {
  std::size_t dim = 16;
  double noise = 0.05;
  double fidelity = 0.9;
  double bias = 0.0;
};

struct ExperimentConfig {
  std::vector<DatasetSpec> datasets;
  std::vector<Method> methods;
  TrainConfig train;
  std::size_t runs = 5;
  std::uint64_t seed = 0;
  std::optional<std::size_t> kfold;
  NormalizationScope normalization = NormalizationScope::PerTask;
  ListwiseOptions listwise;  // `seed` is derived per run and task
  MockSpec mock;
  std::filesystem::path dumps = "dumps";
  std::filesystem::path output = "results";
  std::size_t jobs = 1;

  void validate() const;
};

// Relative dataset and dump paths are resolved against `base_dir`.
ExperimentConfig parse_experiment_config(std::string_view json_text,
                                         const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
// Canonical JSON of every field that influences results (not output or jobs).
std::string canonical_config_json(const ExperimentConfig& config);
std::string config_hash(const ExperimentConfig& config);

// Loads or synthesizes every dataset of the config.
std::vector<Dataset> materialize_datasets(const ExperimentConfig& config);

struct PlanSummary {
  std::size_t item_single_requests = 0;
  std::size_t item_pair_requests = 0;
  std::size_t item_list_requests = 0;
  std::vector<std::filesystem::path> files;
};

// Writes deterministic request JSONL files under `out_dir`/plan:
// item_single.jsonl (one per item), item_pair.jsonl (one per ordered pair)
// and item_list_round0.jsonl (first step of every run and repeat).
PlanSummary cmd_plan(const ExperimentConfig& config, const std::filesystem::path& out_dir);

// Single-prompt count per task is N and pair-prompt count N(N-1).
std::size_t planned_single_requests(const RankingTask& task);
std::size_t planned_pair_requests(const RankingTask& task);

struct RunSummary {
  std::size_t cells_total = 0;
  std::size_t cells_computed = 0;
  std::size_t cells_skipped = 0;
};

// Trains and evaluates every (dataset, method, run) cell and writes the
// result store under config.output. With `mock` set, activations and logits
// come from the mock LM; otherwise from the dump files in config.dumps.
// Cells already present with the same config hash are skipped.
RunSummary cmd_run(const ExperimentConfig& config, bool mock);

struct ReportRow {
  std::string group;  // dataset kind or dataset id
  std::string method;
  std::size_t runs = 0;
  double tau_abs_mean = 0.0;
  double tau_abs_std = 0.0;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;
};

struct Report {
  std::vector<ReportRow> by_kind;
  std::vector<ReportRow> by_dataset;
};

// Reads the result store and writes report.csv, report_by_dataset.csv,
// report.json and (when folds exist) kfold.csv into `store`.
Report cmd_report(const std::filesystem::path& store);

// Writes what the extractor would produce for the config, using the mock LM:
// activations.jsonl, logits.jsonl and manifest.json.
void write_mock_dumps(const ExperimentConfig& config, const std::filesystem::path& dir);

// Answers a listwise request file with the mock LM, appending to `responses`.
std::size_t serve_listwise_mock(const ExperimentConfig& config, const std::filesystem::path& requests,
                                const std::filesystem::path& responses);

}  // namespace ccr
