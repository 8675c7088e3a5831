#include "ccr/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ccr {

bool is_permutation(std::span<const std::size_t> order) {
  std::vector<bool> seen(order.size(), false);
  for (std::size_t i : order) {
    if (i >= order.size() || seen[i]) return false;
    seen[i] = true;
  }
  return true;
}

RankingPrediction ranking_from_scores(std::string task_id, Vector scores) {
  RankingPrediction p;
  p.task_id = std::move(task_id);
  p.order.resize(scores.size());
  std::iota(p.order.begin(), p.order.end(), std::size_t{0});
  std::stable_sort(p.order.begin(), p.order.end(),
                   [&scores](std::size_t i, std::size_t j) { return scores[i] > scores[j]; });
  for (std::size_t i = 1; i < p.order.size(); ++i) {
    if (scores[p.order[i]] == scores[p.order[i - 1]]) p.residual_ties = true;
  }
  p.item_scores = std::move(scores);
  return p;
}

namespace {

std::uint64_t count_inversions(std::vector<std::size_t>& v, std::vector<std::size_t>& buf,
                               std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t inv = count_inversions(v, buf, lo, mid) + count_inversions(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[i] <= v[j]) {
      buf[k++] = v[i++];
    } else {
      inv += mid - i;
      buf[k++] = v[j++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

}  // namespace

double kendall_tau(std::span<const std::size_t> predicted, std::span<const std::size_t> gold) {
  if (predicted.size() != gold.size()) {
    throw ValidationError("kendall_tau: length mismatch (" + std::to_string(predicted.size()) +
                          " vs " + std::to_string(gold.size()) + ")");
  }
  if (predicted.size() < 2) throw ValidationError("kendall_tau needs at least 2 items");
  if (!is_permutation(predicted) || !is_permutation(gold)) {
    throw ValidationError("kendall_tau: inputs must be permutations");
  }
  const std::size_t n = gold.size();
  std::vector<std::size_t> gold_pos(n);
  for (std::size_t i = 0; i < n; ++i) gold_pos[gold[i]] = i;
  std::vector<std::size_t> seq(n), buf(n);
  for (std::size_t i = 0; i < n; ++i) seq[i] = gold_pos[predicted[i]];
  const double discordant = static_cast<double>(count_inversions(seq, buf, 0, n));
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  return (pairs - 2.0 * discordant) / pairs;
}

double tau_abs(std::span<const std::size_t> predicted, std::span<const std::size_t> gold) {
  return std::abs(kendall_tau(predicted, gold));
}

double raw_pairwise_agreement(std::span<const PairDecision> decisions,
                              std::span<const double> gold_scores) {
  if (decisions.empty()) throw ValidationError("pairwise accuracy over an empty decision set");
  std::size_t correct = 0;
  for (const auto& d : decisions) {
    if (d.a >= gold_scores.size() || d.b >= gold_scores.size() || d.a == d.b) {
      throw ValidationError("pair (" + std::to_string(d.a) + "," + std::to_string(d.b) +
                            ") has no gold label");
    }
    if (d.winner != d.a && d.winner != d.b) throw ValidationError("decision winner is not in its pair");
    const std::size_t gold_winner = gold_scores[d.a] > gold_scores[d.b] ? d.a : d.b;
    if (d.winner == gold_winner) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(decisions.size());
}

double pairwise_accuracy(std::span<const PairDecision> decisions, std::span<const double> gold_scores) {
  const double raw = raw_pairwise_agreement(decisions, gold_scores);
  return std::max(raw, 1.0 - raw);
}

RankingPrediction pairs_to_ranking(std::string task_id, std::size_t n,
                                   std::span<const PairDecision> decisions) {
  std::vector<double> wins(n, 0.0);
  std::vector<double> strength(n, 0.0);
  std::vector<bool> covered(n * n, false);
  for (const auto& d : decisions) {
    if (d.a >= n || d.b >= n || d.a == d.b) {
      throw ValidationError("decision on invalid pair (" + std::to_string(d.a) + "," +
                            std::to_string(d.b) + ")");
    }
    if (d.winner != d.a && d.winner != d.b) throw ValidationError("decision winner is not in its pair");
    wins[d.winner] += 1.0;
    strength[d.winner] += std::abs(d.score);
    covered[std::min(d.a, d.b) * n + std::max(d.a, d.b)] = true;
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (!covered[a * n + b]) {
        throw ValidationError("task '" + task_id + "': pair (" + std::to_string(a) + "," +
                              std::to_string(b) + ") was never compared");
      }
    }
  }

  RankingPrediction p;
  p.task_id = std::move(task_id);
  p.order.resize(n);
  std::iota(p.order.begin(), p.order.end(), std::size_t{0});
  auto before = [&](std::size_t i, std::size_t j) {
    if (wins[i] != wins[j]) return wins[i] > wins[j];
    return strength[i] > strength[j];
  };
  std::stable_sort(p.order.begin(), p.order.end(), before);
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t x = p.order[i - 1], y = p.order[i];
    if (wins[x] == wins[y] && strength[x] == strength[y]) p.residual_ties = true;
  }
  p.item_scores = wins;
  return p;
}

std::vector<PairDecision> ranking_to_pairs(const RankingPrediction& prediction, PairMode mode) {
  if (!is_permutation(prediction.order)) throw ValidationError("ranking_to_pairs: order is not a permutation");
  const std::size_t n = prediction.order.size();
  std::vector<std::size_t> pos(n);
  for (std::size_t i = 0; i < n; ++i) pos[prediction.order[i]] = i;
  std::vector<PairDecision> out;
  for (const auto& pair : enumerate_pairs(n, mode)) {
    out.push_back({pair.a, pair.b, pos[pair.a] < pos[pair.b] ? pair.a : pair.b, 1.0});
  }
  return out;
}

TaskMetrics evaluate_ranking(const RankingPrediction& prediction, const RankingTask& task) {
  const auto decisions = ranking_to_pairs(prediction, PairMode::Combinations);
  return evaluate_ranking(prediction, task, decisions);
}

TaskMetrics evaluate_ranking(const RankingPrediction& prediction, const RankingTask& task,
                             std::span<const PairDecision> decisions) {
  if (!task.gold_ranking) throw ValidationError("task '" + task.task_id + "' has no gold scores");
  TaskMetrics m;
  m.task_id = task.task_id;
  m.tau = kendall_tau(prediction.order, *task.gold_ranking);
  m.tau_abs = std::abs(m.tau);
  m.pairwise_accuracy = pairwise_accuracy(decisions, *task.gold_scores);
  m.residual_ties = prediction.residual_ties;
  return m;
}

Summary summarize(std::span<const double> values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(var / n);
  return s;
}

RunMetrics make_run_metrics(std::vector<TaskMetrics> tasks) {
  RunMetrics r;
  r.tasks = std::move(tasks);
  if (!r.tasks.empty()) {
    for (const auto& t : r.tasks) {
      r.tau_abs += t.tau_abs;
      r.pairwise_accuracy += t.pairwise_accuracy;
    }
    r.tau_abs /= static_cast<double>(r.tasks.size());
    r.pairwise_accuracy /= static_cast<double>(r.tasks.size());
  }
  return r;
}

MetricReport aggregate_runs(std::vector<RunMetrics> runs) {
  if (runs.empty()) throw ValidationError("aggregate_runs needs at least one run");
  std::vector<double> tau, acc;
  for (const auto& r : runs) {
    tau.push_back(r.tau_abs);
    acc.push_back(r.pairwise_accuracy);
  }
  MetricReport report;
  report.tau_abs = summarize(tau);
  report.pairwise_accuracy = summarize(acc);
  report.runs = std::move(runs);
  return report;
}

}  // namespace ccr
