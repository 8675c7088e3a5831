// ccr: plan prompts, train and evaluate probes, and report results.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ccr/experiment.hpp"
#include "ccr/task_model.hpp"

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool mock = false;
};

ccr::ExperimentConfig load(const Options& opt) {
  ccr::ExperimentConfig cfg = ccr::load_experiment_config(opt.config);
  if (opt.seed) cfg.seed = *opt.seed;
  if (!opt.out.empty()) cfg.output = opt.out;
  return cfg;
}

void add_common(CLI::App* cmd, Options& opt, bool config_required = true) {
  auto* c = cmd->add_option("--config", opt.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  if (config_required) c->required();
  cmd->add_option("--seed", opt.seed, "Override the config seed");
  cmd->add_option("--out", opt.out, "Output directory (overrides the config)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contrast-consistent ranking: probes and prompting baselines"};
  app.require_subcommand(1);

  Options opt;
  auto* plan = app.add_subcommand("plan", "Write prompt-request files for the extractor");
  add_common(plan, opt);

  auto* run = app.add_subcommand("run", "Train and evaluate every method, dataset and run");
  add_common(run, opt);
  run->add_flag("--mock", opt.mock, "Use the built-in mock language model instead of dump files");

  auto* report = app.add_subcommand("report", "Summarize a result store into CSV/JSON tables");
  add_common(report, opt, false);

  std::string kind = "synthfacts";
  std::size_t tasks = 8, items = 8;
  auto* synth = app.add_subcommand("synth", "Write a built-in synthetic dataset as task JSON");
  synth->add_option("--kind", kind, "synthfacts | synthcontext | planted")
      ->check(CLI::IsMember({"synthfacts", "synthcontext", "planted"}));
  synth->add_option("--seed", opt.seed, "Item-order seed (0 keeps canonical order)");
  synth->add_option("--tasks", tasks, "Planted: number of tasks");
  synth->add_option("--items", items, "Planted: items per task");
  synth->add_option("--out", opt.out, "Output file")->required();

  auto* mock_dump = app.add_subcommand("mock-dump", "Write mock activation and logit dumps");
  add_common(mock_dump, opt);

  std::string requests, responses;
  auto* mock_serve = app.add_subcommand("mock-serve", "Answer listwise requests with the mock model");
  add_common(mock_serve, opt);
  mock_serve->add_option("--requests", requests, "Request JSONL")->required();
  mock_serve->add_option("--responses", responses, "Response JSONL to append to")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (plan->parsed()) {
      const auto cfg = load(opt);
      const auto s = ccr::cmd_plan(cfg, cfg.output);
      std::cout << "planned " << s.item_single_requests << " ItemSingle, " << s.item_pair_requests
                << " ItemPair, " << s.item_list_requests << " listwise requests\n";
      for (const auto& f : s.files) std::cout << "  " << f.string() << "\n";
    } else if (run->parsed()) {
      const auto cfg = load(opt);
      const auto s = ccr::cmd_run(cfg, opt.mock);
      std::cout << "cells: " << s.cells_computed << " computed, " << s.cells_skipped << " skipped, "
                << s.cells_total << " total\n";
    } else if (report->parsed()) {
      fs::path store = opt.out;
      if (store.empty()) {
        if (opt.config.empty()) throw ccr::Error("report needs --out <store> or --config <file>");
        store = load(opt).output;
      }
      const auto r = ccr::cmd_report(store);
      std::cout << "dataset_kind,method,runs,tau_abs,pairwise_accuracy\n";
      for (const auto& row : r.by_kind) {
        std::cout << row.group << "," << row.method << "," << row.runs << "," << row.tau_abs_mean << " +- "
                  << row.tau_abs_std << "," << row.accuracy_mean << " +- " << row.accuracy_std << "\n";
      }
    } else if (synth->parsed()) {
      const std::uint64_t seed = opt.seed.value_or(0);
      const ccr::Dataset ds = kind == "planted"
                                  ? ccr::generate_planted(tasks, items, seed)
                                  : ccr::generate_synthetic(ccr::synthetic_kind_from_string(kind), seed);
      ccr::save_dataset(ds, opt.out);
      std::cout << "wrote " << ds.tasks.size() << " tasks to " << opt.out << "\n";
    } else if (mock_dump->parsed()) {
      auto cfg = load(opt);
      const fs::path dir = opt.out.empty() ? cfg.dumps : fs::path(opt.out);
      ccr::write_mock_dumps(cfg, dir);
      std::cout << "wrote mock dumps to " << dir.string() << "\n";
    } else if (mock_serve->parsed()) {
      const auto n = ccr::serve_listwise_mock(load(opt), requests, responses);
      std::cout << "answered " << n << " listwise requests\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "ccr: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
