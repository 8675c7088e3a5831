// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ccr/experiment.hpp"
#include "ccr/losses.hpp"
#include "ccr/mock_lm.hpp"
#include "ccr/trainer.hpp"
#include "gradient_check.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Records the first failing check and keeps going so the detail shows all of them.
struct Checker {
  Outcome out;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (out.pass) out.detail.clear();
      out.pass = false;
      if (!out.detail.empty()) out.detail += "; ";
      out.detail += what;
    }
  }
  void note(const std::string& what) {
    if (!out.pass) return;
    if (!out.detail.empty()) out.detail += " ";
    out.detail += what;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

Outcome gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  Checker c;
  double worst = 0.0;
  for (auto kind : gradcheck::all_losses()) {
    const auto r = gradcheck::check(kind, 20240 + static_cast<int>(kind), 100, 8, 5, 1e-4);
    worst = std::max(worst, r.worst_relative_error);
    c.require(r.worst_relative_error < 1e-4,
              std::string(ccr::to_string(kind)) + " rel err " + fmt("%.3g", r.worst_relative_error));
  }
  const double s = seconds_since(t0);
  c.require(s < 10.0, "took " + fmt("%.1f", s) + "s (limit 10s)");
  c.note("8 losses x 100 instances, worst rel err " + fmt("%.2e", worst) + ", " + fmt("%.2f", s) + "s");
  return c.out;
}

// ---------------------------------------------------------------------------

struct PlantedTask {
  ccr::RankingTask task;
  ccr::TaskActivations single;
  ccr::TaskActivations pair;
};

double recovered_tau(const PlantedTask& t, ccr::LossKind kind, std::uint64_t seed) {
  const bool pairs = kind == ccr::LossKind::OrigCcs || kind == ccr::LossKind::SupervisedBce;
  const ccr::TaskActivations& acts = pairs ? t.pair : t.single;
  ccr::TrainConfig cfg;
  cfg.seed = ccr::derive_seed(seed, t.task.task_id);
  cfg.source = pairs ? ccr::ActivationSource::ItemPair : ccr::ActivationSource::ItemSingle;
  const auto r = ccr::train_probe(std::span(&acts, 1), kind, cfg);
  const auto pred = ccr::predict(r.probe, acts, t.task.size(), cfg.source);
  return ccr::tau_abs(pred.ranking.order, *t.task.gold_ranking);
}

Outcome planted_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  using K = ccr::LossKind;
  const std::vector<K> kinds{K::OrigCcs,       K::MarginCcr,          K::TripletCcr,        K::OrdRegCcr,
                             K::SupervisedBce, K::SupervisedMaxMargin, K::SupervisedTriplet, K::SupervisedCoral};
  std::map<K, double> mean;
  const int seeds = 5;
  for (int s = 0; s < seeds; ++s) {
    const std::uint64_t seed = 1000 + s;
    const ccr::Dataset ds = ccr::generate_planted(20, 8, seed);
    std::vector<PlantedTask> tasks;
    for (const auto& task : ds.tasks) {
      PlantedTask p{task, {}, {}};
      p.single = ccr::normalize_task(ccr::collect_task(ccr::mock::embeddings(task, 16, 0.05, seed), task));
      p.pair = ccr::normalize_task(ccr::collect_task(ccr::mock::pair_embeddings(task, 16, 0.05, seed), task, false));
      tasks.push_back(std::move(p));
    }
    for (K kind : kinds) {
      double total = 0.0;
      for (const auto& t : tasks) total += recovered_tau(t, kind, seed);
      mean[kind] += total / static_cast<double>(tasks.size()) / seeds;
    }
  }
  Checker c;
  c.require(mean[K::MarginCcr] >= 0.9, "MarginCCR " + fmt("%.3f", mean[K::MarginCcr]) + " < 0.9");
  c.require(mean[K::TripletCcr] >= 0.9, "TripletCCR " + fmt("%.3f", mean[K::TripletCcr]) + " < 0.9");
  c.require(mean[K::OrdRegCcr] >= 0.8, "OrdRegCCR " + fmt("%.3f", mean[K::OrdRegCcr]) + " < 0.8");
  for (K sup : {K::SupervisedBce, K::SupervisedMaxMargin, K::SupervisedTriplet, K::SupervisedCoral}) {
    const K uns = ccr::unsupervised_counterpart(sup);
    c.require(mean[sup] >= mean[uns], std::string(ccr::to_string(sup)) + " " + fmt("%.3f", mean[sup]) + " < " +
                                          std::string(ccr::to_string(uns)) + " " + fmt("%.3f", mean[uns]));
  }
  const double secs = seconds_since(t0);
  c.require(secs < 120.0, "took " + fmt("%.1f", secs) + "s (limit 120s)");
  std::string summary = "tau_abs";
  for (K kind : kinds) summary += " " + std::string(ccr::to_string(kind)) + "=" + fmt("%.3f", mean[kind]);
  c.note(summary + ", " + fmt("%.1f", secs) + "s");
  return c.out;
}

// ---------------------------------------------------------------------------

Outcome loss_zero_points() {
  Checker c;
  int checked = 0;
  auto near = [&](double got, double want, const std::string& what) {
    ++checked;
    c.require(std::abs(got - want) <= 1e-9, what + " = " + fmt("%.12g", got) + ", want " + fmt("%g", want));
  };
  const ccr::LossConfig cfg;  // m = 0.2, m_pos = 0.05
  near(ccr::orig_ccs(1.0, 0.0).total, 0.0, "orig_ccs(1,0)");
  near(ccr::orig_ccs(0.5, 0.5).total, 0.25, "orig_ccs(.5,.5)");
  near(ccr::orig_ccs(0.8, 0.3).total, 0.10, "orig_ccs(.8,.3)");
  near(ccr::margin_ccr(0.9, 0.1, cfg).total, 0.0, "margin_ccr(.9,.1)");
  near(ccr::margin_ccr(0.5, 0.5, cfg).total, 0.2, "margin_ccr(.5,.5)");
  near(ccr::margin_ccr(0.55, 0.45, cfg).total, 0.1, "margin_ccr(.55,.45)");
  near(ccr::triplet_ccr(0.5, 0.6, 0.0, cfg).total, 0.0, "triplet_ccr d=(.1,.5)");
  near(ccr::triplet_ccr(0.4, 0.4, 0.4, cfg).total, 0.25, "triplet_ccr equal scores");
  near(ccr::triplet_ccr(0.5, 0.8, 0.2, cfg).total, 0.2, "triplet_ccr d=(.3,.3)");
  const std::vector<double> k2{1, 1, 1, 0};
  near(ccr::ordreg_ccr(k2, 2, 2).total, 0.0, "ordreg_ccr K=2 staircase");
  const std::vector<double> half(4, 0.5);
  near(ccr::ordreg_ccr(half, 2, 2).total, 3.0, "ordreg_ccr K=2 all 0.5");
  near(ccr::bce(1.0, 1.0).total, 0.0, "bce(1, 1)");
  near(ccr::max_margin(0.75, 0.25, +1, cfg).total, 0.0, "max_margin gap .5");

  // Every row permutation of the staircase, K <= 4.
  std::size_t staircases = 0;
  for (std::size_t k = 1; k <= 4; ++k) {
    for (const auto& perm : oracle::all_permutations(k)) {
      std::vector<double> m(k * k, 0.0);
      std::vector<int> ranks(k);
      for (std::size_t row = 0; row < k; ++row) {
        const std::size_t ones = perm[row] + 1;
        ranks[row] = static_cast<int>(ones);
        for (std::size_t j = 0; j < ones; ++j) m[row * k + j] = 1.0;
      }
      const double v = ccr::ordreg_ccr(m, k, k).total;
      c.require(v == 0.0, "ordreg_ccr staircase K=" + std::to_string(k) + " = " + fmt("%.3g", v));
      if (k >= 2) near(ccr::coral_ordinal(m, k, k, ranks).total, 0.0, "coral_ordinal staircase");
      ++staircases;
    }
  }
  c.note(std::to_string(checked) + " examples within 1e-9, " + std::to_string(staircases) +
         " staircase permutations exactly 0");
  return c.out;
}

// ---------------------------------------------------------------------------

Outcome coral_structure() {
  Checker c;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst_mean = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double alpha = 5.0 * (1.0 - u(rng));  // (0, 5]
    const double beta = 5.0 * (1.0 - u(rng));
    const std::size_t k = 2 + static_cast<std::size_t>(i % 9);
    const auto b = ccr::coral_biases(alpha, beta, k).b;
    double mean = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      mean += b[j];
      if (j > 0 && !(b[j] < b[j - 1])) {
        c.require(false, "biases not strictly decreasing at alpha=" + fmt("%.4g", alpha) + " beta=" + fmt("%.4g", beta));
      }
    }
    mean /= static_cast<double>(k);
    worst_mean = std::max(worst_mean, std::abs(mean));
    ccr::CoralProbe probe{ccr::Vector(6), alpha, beta};
    for (double& x : probe.theta) x = normal(rng);
    ccr::Vector x(6);
    for (double& v : x) v = 2.0 * normal(rng);
    const auto row = ccr::coral_scores(probe, x, k);
    for (std::size_t j = 1; j < k; ++j) {
      if (row[j] > row[j - 1]) c.require(false, "coral_scores row increases");
    }
  }
  c.require(worst_mean < 1e-9, "bias mean " + fmt("%.3g", worst_mean));
  const auto b = ccr::coral_biases(1.0, 1.0, 4).b;
  const std::vector<double> want{1.5, 0.5, -0.5, -1.5};
  for (std::size_t j = 0; j < 4; ++j) {
    c.require(std::abs(b[j] - want[j]) < 1e-12, "alpha=beta=1, K=4 gives " + fmt("%.6g", b[j]) + " at " + std::to_string(j));
  }
  c.note("1000 samples, worst |mean| " + fmt("%.1e", worst_mean) + ", uniform case [1.5, 0.5, -0.5, -1.5]");
  return c.out;
}

// ---------------------------------------------------------------------------

Outcome metric_oracles() {
  Checker c;
  std::size_t compared = 0;
  for (std::size_t n = 1; n <= 6; ++n) {
    const auto perms = oracle::all_permutations(n);
    for (const auto& gold : perms) {
      for (const auto& pred : n >= 2 ? perms : decltype(perms){}) {
        ++compared;
        const double got = ccr::kendall_tau(pred, gold);
        if (got != oracle::kendall_tau(pred, gold)) c.require(false, "kendall_tau differs from pair counting");
      }
      // pairs_to_ranking undoes ranking_to_pairs.
      ccr::RankingPrediction p;
      p.task_id = "t";
      p.order = gold;
      const auto back = ccr::pairs_to_ranking("t", n, ccr::ranking_to_pairs(p));
      if (back.order != gold) c.require(false, "pairs_to_ranking(ranking_to_pairs) is not identity for n=" + std::to_string(n));
    }
  }
  std::mt19937_64 rng(5);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 2 + rng() % 9;
    std::vector<double> gold(n);
    for (auto& g : gold) g = static_cast<double>(rng() % 1000);
    std::vector<ccr::PairDecision> decisions;
    for (const auto& pr : ccr::enumerate_pairs(n, rng() % 2 ? ccr::PairMode::Permutations : ccr::PairMode::Combinations)) {
      decisions.push_back({pr.a, pr.b, rng() % 2 ? pr.a : pr.b, 1.0, false});
    }
    const double acc = ccr::pairwise_accuracy(decisions, gold);
    if (acc < 0.5) c.require(false, "pairwise_accuracy below 0.5");
    std::vector<std::size_t> order(n), g(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::iota(g.begin(), g.end(), std::size_t{0});
    std::shuffle(g.begin(), g.end(), rng);
    std::vector<std::size_t> reversed(order.rbegin(), order.rend());
    if (ccr::tau_abs(order, g) != ccr::tau_abs(reversed, g)) c.require(false, "tau_abs changes under reversal");
  }
  c.note(std::to_string(compared) + " permutation pairs (N<=6) match pair counting; 1000 fuzzed cases");
  return c.out;
}

// ---------------------------------------------------------------------------

Outcome calibration_property() {
  Checker c;
  std::size_t tasks = 0;
  double worst_raw = 0.0;
  for (auto kind : {ccr::SyntheticKind::SynthFacts, ccr::SyntheticKind::SynthContext}) {
    const ccr::Dataset ds = ccr::generate_synthetic(kind, 0);
    for (const auto& t : ds.tasks) {
      ++tasks;
      const auto logits = ccr::mock::pair_logits(t, {1.0, 5.0, 42});
      const auto raw = ccr::decide_pairs(ccr::uncalibrated_pairs(logits));
      const auto cal = ccr::decide_pairs(ccr::calibrate_pairwise(logits));
      const double raw_agree = ccr::raw_pairwise_agreement(raw, *t.gold_scores);
      worst_raw = std::max(worst_raw, raw_agree);
      const double acc = ccr::pairwise_accuracy(cal, *t.gold_scores);
      c.require(acc == 1.0, t.task_id + " calibrated accuracy " + fmt("%.3f", acc));
      c.require(raw_agree <= 0.5, t.task_id + " raw agreement " + fmt("%.3f", raw_agree));
    }
  }
  c.note(std::to_string(tasks) + " synthetic tasks: calibrated accuracy 1.0, raw agreement <= " + fmt("%.3f", worst_raw));
  return c.out;
}

// ---------------------------------------------------------------------------

Outcome complexity_accounting() {
  Checker c;
  const fs::path dir = fs::temp_directory_path() / "ccr_acceptance_plan";
  for (std::size_t n = 4; n <= 10; ++n) {
    ccr::ExperimentConfig cfg;
    ccr::DatasetSpec spec;
    spec.synthetic = "planted";
    spec.planted_tasks = 1;
    spec.planted_items = n;
    spec.planted_id = "n" + std::to_string(n);
    cfg.datasets = {spec};
    cfg.methods = ccr::default_methods();
    cfg.runs = 1;
    const auto plan = ccr::cmd_plan(cfg, dir);
    c.require(plan.item_single_requests == n, "ItemSingle requests for N=" + std::to_string(n));
    c.require(plan.item_pair_requests == n * (n - 1), "ItemPair requests for N=" + std::to_string(n));

    const ccr::Dataset ds = ccr::generate_planted(1, n, n);
    const auto& t = ds.tasks[0];
    const std::vector<ccr::TaskActivations> single{ccr::collect_task(ccr::mock::embeddings(t, 8, 0.1, n), t)};
    const std::vector<ccr::TaskActivations> pair{
        ccr::collect_task(ccr::mock::pair_embeddings(t, 8, 0.1, n), t, false)};
    ccr::TrainConfig tc;
    const auto margin = ccr::build_training_set(single, ccr::LossKind::MarginCcr, tc).size();
    const auto triplet = ccr::build_training_set(single, ccr::LossKind::TripletCcr, tc).size();
    tc.source = ccr::ActivationSource::ItemPair;
    const auto orig = ccr::build_training_set(pair, ccr::LossKind::OrigCcs, tc).size();
    c.require(margin == oracle::choose(n, 2), "MarginCCR datapoints for N=" + std::to_string(n));
    c.require(triplet == 3 * oracle::choose(n, 3), "TripletCCR datapoints for N=" + std::to_string(n));
    c.require(orig == n * (n - 1), "origCCS-P datapoints for N=" + std::to_string(n));
  }
  fs::remove_all(dir);
  c.note("N=4..10: N / N(N-1) requests, C(N,2) / 3C(N,3) / N(N-1) datapoints");
  return c.out;
}

// ---------------------------------------------------------------------------

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome end_to_end_grid() {
  Checker c;
  const fs::path root = fs::temp_directory_path() / "ccr_acceptance_grid";
  fs::remove_all(root);
  const std::string text = R"({
    "datasets": ["synthfacts", "synthcontext"],
    "methods": "all",
    "runs": 5,
    "seed": 0,
    "mock": {"noise": 0.01, "fidelity": 1.0},
    "output": "a"
  })";
  auto cfg = ccr::parse_experiment_config(text, root);
  const auto t0 = std::chrono::steady_clock::now();
  const auto summary = ccr::cmd_run(cfg, true);
  const double secs = seconds_since(t0);
  c.require(summary.cells_total == 2 * 8 * 5, "expected 80 cells, got " + std::to_string(summary.cells_total));
  c.require(secs < 300.0, "grid took " + fmt("%.1f", secs) + "s (limit 300s)");

  auto again = cfg;
  again.output = root / "b";
  again.jobs = 4;
  ccr::cmd_run(again, true);
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(cfg.output / "cells")) {
    ++compared;
    if (read_file(e.path()) != read_file(again.output / "cells" / e.path().filename())) {
      c.require(false, "cell " + e.path().filename().string() + " differs between runs");
    }
  }
  c.require(compared == 80, "compared " + std::to_string(compared) + " cells");

  const auto report = ccr::cmd_report(cfg.output);
  c.require(report.by_kind.size() == 16, "report has " + std::to_string(report.by_kind.size()) + " rows, want 16");
  for (const char* f : {"report.csv", "report.json", "report_by_dataset.csv"}) {
    c.require(fs::exists(cfg.output / f), std::string("missing ") + f);
  }
  std::map<std::string, std::map<std::string, double>> tau;  // kind -> method -> tau_abs
  for (const auto& r : report.by_kind) tau[r.group][r.method] = r.tau_abs_mean;
  std::string detail;
  for (const auto& [kind, by_method] : tau) {
    const double triplet = by_method.at("TripletCCR-S");
    const double listwise = by_method.at("prompt-L");
    c.require(triplet >= listwise, kind + ": TripletCCR " + fmt("%.3f", triplet) + " < prompt-L " + fmt("%.3f", listwise));
    detail += " " + kind + " TripletCCR=" + fmt("%.3f", triplet) + " prompt-L=" + fmt("%.3f", listwise);
  }
  fs::remove_all(root);
  c.note("high-fidelity mock (noise 0.01, fidelity 1), 80 cells identical across runs," + detail + ", " + fmt("%.1f", secs) + "s");
  return c.out;
}

// ---------------------------------------------------------------------------

Outcome four_fold_cv() {
  Checker c;
  const std::uint64_t seed = 31;
  const ccr::Dataset ds = ccr::generate_planted(8, 8, seed);
  std::vector<ccr::TaskActivations> raw;
  for (const auto& t : ds.tasks) raw.push_back(ccr::collect_task(ccr::mock::embeddings(t, 16, 0.05, seed), t));
  std::string detail;
  for (auto kind : {ccr::LossKind::MarginCcr, ccr::LossKind::TripletCcr}) {
    ccr::TrainConfig cfg;
    cfg.seed = seed;
    const auto r = ccr::train_kfold(ds.tasks, raw, kind, 4, cfg);
    c.require(r.folds.size() == 4, "expected 4 folds");
    c.require(r.tau_abs.mean >= 0.9,
              std::string(ccr::to_string(kind)) + " held-out tau_abs " + fmt("%.3f", r.tau_abs.mean) + " < 0.9");
    detail += " " + std::string(ccr::to_string(kind)) + "=" + fmt("%.3f", r.tau_abs.mean);
  }
  c.note("held-out mean tau_abs" + detail);
  return c.out;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gradient_correctness", gradient_correctness},
      {"planted_direction_recovery", planted_recovery},
      {"loss_zero_points", loss_zero_points},
      {"coral_structure", coral_structure},
      {"metric_oracles", metric_oracles},
      {"calibration_property", calibration_property},
      {"complexity_accounting", complexity_accounting},
      {"end_to_end_mock_grid", end_to_end_grid},
      {"four_fold_cv", four_fold_cv},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %-28s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
