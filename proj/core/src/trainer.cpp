#include "ccr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace ccr {

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (restarts < 1) throw ValidationError("restarts must be >= 1");
  if (!(adam.learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
  if (init_scale && !(*init_scale >= 0.0)) throw ValidationError("init_scale must be >= 0");
  loss.validate();
}

namespace {

std::vector<int> ranks_from_scores(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return scores[i] < scores[j]; });
  std::vector<int> ranks(scores.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) ranks[order[pos]] = static_cast<int>(pos + 1);
  return ranks;
}

int pair_label(const TaskActivations& t, std::size_t a, std::size_t b) {
  if (!t.has_gold()) return 0;
  return t.gold_scores[a] > t.gold_scores[b] ? 1 : -1;
}

void require_gold(const TaskActivations& t, LossKind kind) {
  if (is_supervised(kind) && !t.has_gold()) {
    throw ValidationError(std::string(to_string(kind)) + " needs gold scores for task '" +
                          t.task_id + "'");
  }
}

// Flat parameter vector <-> probe. CORAL shape parameters are stored as
// softplus pre-images so that alpha, beta stay positive under Adam.
Vector flatten(const Probe& probe) {
  if (const auto* lp = std::get_if<LinearProbe>(&probe)) {
    Vector p = lp->theta;
    p.push_back(lp->bias);
    return p;
  }
  const auto& cp = std::get<CoralProbe>(probe);
  Vector p = cp.theta;
  p.push_back(softplus_inverse(cp.alpha));
  p.push_back(softplus_inverse(cp.beta));
  return p;
}

Probe unflatten(std::span<const double> p, bool coral) {
  if (!coral) {
    return LinearProbe{Vector(p.begin(), p.end() - 1), p.back()};
  }
  const std::size_t d = p.size() - 2;
  return CoralProbe{Vector(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(d)),
                    softplus(p[d]), softplus(p[d + 1])};
}

// Converts a gradient over natural probe parameters to one over the flat
// optimizer parameters.
void to_raw_gradient(Vector& grad, std::span<const double> raw, bool coral) {
  if (!coral) return;
  const std::size_t d = raw.size() - 2;
  grad[d] *= sigmoid(raw[d]);
  grad[d + 1] *= sigmoid(raw[d + 1]);
}

LossValue evaluate_one_pair(LossKind kind, const Probe& probe, const PairSample& s,
                            const LossConfig& cfg) {
  return pair_objective(kind, std::get<LinearProbe>(probe), s, cfg);
}

}  // namespace

TrainingSet build_training_set(std::span<const TaskActivations> tasks, LossKind kind,
                               const TrainConfig& cfg) {
  TrainingSet set;
  const SampleShape shape = sample_shape(kind);
  if (cfg.source == ActivationSource::ItemPair && shape != SampleShape::Pair) {
    throw ValidationError(std::string(to_string(kind)) + " cannot train on ItemPair activations");
  }
  // Reserve the gold storage up front: ListSample spans point into it.
  set.gold_ranks_.reserve(tasks.size());
  for (const auto& t : tasks) {
    require_gold(t, kind);
    if (cfg.source == ActivationSource::ItemPair) {
      if (t.pairs.empty()) throw ValidationError("task '" + t.task_id + "' has no ItemPair activations");
      for (const auto& p : t.pairs) {
        set.pairs.push_back({p.pos, p.neg, pair_label(t, p.pair.a, p.pair.b)});
      }
      continue;
    }
    if (t.items.size() < 2) throw ValidationError("task '" + t.task_id + "' has fewer than 2 items");
    switch (shape) {
      case SampleShape::Pair: {
        const PairMode mode = cfg.pair_mode.value_or(default_pair_mode(kind));
        for (const auto& p : enumerate_pairs(t.items.size(), mode)) {
          set.pairs.push_back({t.items[p.a], t.items[p.b], pair_label(t, p.a, p.b)});
        }
        break;
      }
      case SampleShape::Triple: {
        std::vector<int> ranks;
        if (t.has_gold()) ranks = ranks_from_scores(t.gold_scores);
        for (const auto& tr : enumerate_triples(t.items.size())) {
          int closer = 0;
          if (!ranks.empty()) {
            const int da = std::abs(ranks[tr.anchor] - ranks[tr.a]);
            const int db = std::abs(ranks[tr.anchor] - ranks[tr.b]);
            closer = da < db ? 1 : (db < da ? -1 : 0);
          }
          set.triples.push_back({t.items[tr.anchor], t.items[tr.a], t.items[tr.b], closer});
        }
        break;
      }
      case SampleShape::List: {
        set.gold_ranks_.push_back(t.has_gold() ? ranks_from_scores(t.gold_scores) : std::vector<int>{});
        set.lists.push_back({t.items, set.gold_ranks_.back()});
        break;
      }
    }
  }
  if (set.size() == 0) throw ValidationError("no training datapoints");
  return set;
}

LossValue evaluate_training_set(const TrainingSet& set, LossKind kind, const Probe& probe,
                                const LossConfig& cfg) {
  LossValue acc;
  std::size_t count = 0;
  auto add = [&](const LossValue& v) {
    if (acc.gradient.empty()) acc.gradient.assign(v.gradient.size(), 0.0);
    acc.total += v.total;
    acc.consistency += v.consistency;
    acc.confidence += v.confidence;
    for (std::size_t i = 0; i < v.gradient.size(); ++i) acc.gradient[i] += v.gradient[i];
    ++count;
  };
  for (const auto& s : set.pairs) add(evaluate_one_pair(kind, probe, s, cfg));
  for (const auto& s : set.triples) add(triple_objective(kind, std::get<LinearProbe>(probe), s, cfg));
  for (const auto& s : set.lists) add(list_objective(kind, std::get<CoralProbe>(probe), s, cfg));
  if (count > 0) {
    const double inv = 1.0 / static_cast<double>(count);
    acc.total *= inv;
    acc.consistency *= inv;
    acc.confidence *= inv;
    for (double& g : acc.gradient) g *= inv;
  }
  return acc;
}

TrainResult train_probe(std::span<const TaskActivations> tasks, LossKind kind,
                        const TrainConfig& cfg) {
  cfg.validate();
  if (tasks.empty()) throw ValidationError("train_probe: no activations");
  std::size_t dim = 0;
  for (const auto& t : tasks) {
    const std::size_t d = t.dimension();
    if (d == 0) throw ValidationError("train_probe: task '" + t.task_id + "' has no activations");
    if (dim == 0) dim = d;
    if (d != dim) {
      throw DimensionError("train_probe: task '" + t.task_id + "' has dimension " +
                           std::to_string(d) + ", expected " + std::to_string(dim));
    }
  }

  const TrainingSet set = build_training_set(tasks, kind, cfg);
  const bool coral = uses_coral_probe(kind);
  const double init_scale = cfg.init_scale.value_or(1.0 / std::sqrt(static_cast<double>(dim)));

  std::optional<TrainResult> best;
  for (std::size_t restart = 0; restart < cfg.restarts; ++restart) {
    const std::uint64_t seed =
        restart == 0 ? cfg.seed : derive_seed(cfg.seed, "restart/" + std::to_string(restart));
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector theta(dim);
    for (double& w : theta) w = init_scale * normal(rng);
    Probe init = coral ? Probe{CoralProbe{theta, 1.0, 1.0}} : Probe{LinearProbe{theta, 0.0}};

    Vector params = flatten(init);
    Adam adam(params.size(), cfg.adam);
    TrainResult result;
    result.seed_used = seed;
    result.restart_index = restart;
    result.datapoints = set.size();
    result.initial_loss = evaluate_training_set(set, kind, init, cfg.loss).total;
    result.loss_trace.reserve(cfg.epochs);

    auto step = [&](const LossValue& v) {
      Vector grad = v.gradient;
      to_raw_gradient(grad, params, coral);
      adam.step(params, grad);
    };
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      for (const auto& s : set.pairs) step(evaluate_one_pair(kind, unflatten(params, coral), s, cfg.loss));
      for (const auto& s : set.triples) {
        step(triple_objective(kind, std::get<LinearProbe>(unflatten(params, false)), s, cfg.loss));
      }
      for (const auto& s : set.lists) {
        step(list_objective(kind, std::get<CoralProbe>(unflatten(params, true)), s, cfg.loss));
      }
      result.loss_trace.push_back(
          evaluate_training_set(set, kind, unflatten(params, coral), cfg.loss).total);
    }
    result.probe = unflatten(params, coral);
    result.final_loss = result.loss_trace.back();
    result.optimizer_steps = adam.steps_taken();
    if (!best || result.final_loss < best->final_loss) best = std::move(result);
  }
  return std::move(*best);
}

Vector item_scores(const Probe& probe, std::span<const Vector> items) {
  Vector out;
  out.reserve(items.size());
  if (const auto* lp = std::get_if<LinearProbe>(&probe)) {
    for (const auto& x : items) out.push_back(score(*lp, x));
    return out;
  }
  const auto& cp = std::get<CoralProbe>(probe);
  if (items.size() < 2) {
    for (const auto& x : items) out.push_back(sigmoid(cp.logit(x)));
    return out;
  }
  const std::size_t k = items.size();
  const BiasVector biases = coral_biases(cp.alpha, cp.beta, k);
  for (const auto& x : items) {
    const double z = cp.logit(x);
    double sum = 0.0;
    for (double b : biases.b) sum += sigmoid(z + b);
    out.push_back(sum);
  }
  return out;
}

ProbePrediction predict(const Probe& probe, const TaskActivations& task, std::size_t item_count,
                        ActivationSource source) {
  ProbePrediction out;
  if (source == ActivationSource::ItemSingle) {
    if (task.items.size() != item_count) {
      throw ValidationError("task '" + task.task_id + "': expected " + std::to_string(item_count) +
                            " item activations, got " + std::to_string(task.items.size()));
    }
    out.ranking = ranking_from_scores(task.task_id, item_scores(probe, task.items));
    return out;
  }
  const auto& lp = std::get<LinearProbe>(probe);
  for (const auto& p : task.pairs) {
    const double s = pair_score(score(lp, p.pos), score(lp, p.neg));
    out.decisions.push_back({p.pair.a, p.pair.b, s > 0.5 ? p.pair.a : p.pair.b, std::abs(s - 0.5)});
  }
  out.ranking = pairs_to_ranking(task.task_id, item_count, out.decisions);
  return out;
}

std::vector<ItemScore> export_item_scores(const Probe& probe, const RankingTask& task,
                                          const TaskActivations& activations) {
  if (activations.items.size() != task.size()) {
    throw ValidationError("task '" + task.task_id + "': item activations do not cover every item");
  }
  const Vector scores = item_scores(probe, activations.items);
  std::vector<ItemScore> out;
  for (std::size_t i = 0; i < scores.size(); ++i) out.push_back({i, task.items[i], scores[i]});
  return out;
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void write_item_scores_csv(std::span<const ItemScore> scores, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "item_index,item,score\n";
  for (const auto& s : scores) {
    out << s.item_index << ',' << csv_escape(s.item) << ',' << format_double(s.score) << '\n';
  }
}

std::vector<ItemScore> read_item_scores_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<ItemScore> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = csv_split(line);
    if (f.size() != 3) throw ParseError(path.string() + ": malformed row '" + line + "'");
    out.push_back({std::stoul(f[0]), f[1], std::stod(f[2])});
  }
  return out;
}

void write_loss_trace_csv(const TrainResult& result, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "epoch,loss\n";
  out << "0," << format_double(result.initial_loss) << '\n';
  for (std::size_t e = 0; e < result.loss_trace.size(); ++e) {
    out << e + 1 << ',' << format_double(result.loss_trace[e]) << '\n';
  }
}

std::vector<std::vector<std::size_t>> kfold_partition(std::size_t task_count, std::size_t k,
                                                      std::uint64_t seed) {
  if (k < 2) throw ValidationError("k-fold needs k >= 2, got " + std::to_string(k));
  if (task_count < k) {
    throw ValidationError("k-fold with k=" + std::to_string(k) + " needs at least " +
                          std::to_string(k) + " tasks, got " + std::to_string(task_count));
  }
  std::vector<std::size_t> order(task_count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "kfold"));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t i = 0; i < order.size(); ++i) folds[i % k].push_back(order[i]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

namespace {

// Normalizes every task with statistics pooled over `train` only.
std::vector<TaskActivations> normalize_with_pooled(std::span<const TaskActivations> all,
                                                   std::span<const std::size_t> train) {
  std::vector<Vector> items, pos, neg;
  for (std::size_t i : train) {
    items.insert(items.end(), all[i].items.begin(), all[i].items.end());
    for (const auto& p : all[i].pairs) {
      pos.push_back(p.pos);
      neg.push_back(p.neg);
    }
  }
  std::optional<Moments> mi, mp, mn;
  if (items.size() >= 2) mi = batch_moments(items);
  if (pos.size() >= 2) {
    mp = batch_moments(pos);
    mn = batch_moments(neg);
  }
  std::vector<TaskActivations> out;
  for (const auto& t : all) {
    TaskActivations z;
    z.task_id = t.task_id;
    z.gold_scores = t.gold_scores;
    if (mi && !t.items.empty()) z.items = apply_moments(t.items, *mi);
    for (const auto& p : t.pairs) {
      if (!mp) break;
      Vector zp = apply_moments(std::span<const Vector>(&p.pos, 1), *mp).front();
      Vector zn = apply_moments(std::span<const Vector>(&p.neg, 1), *mn).front();
      z.pairs.push_back({p.pair, std::move(zp), std::move(zn)});
    }
    out.push_back(std::move(z));
  }
  return out;
}

}  // namespace

KFoldResult train_kfold(std::span<const RankingTask> tasks,
                        std::span<const TaskActivations> activations, LossKind kind,
                        std::size_t k, const TrainConfig& cfg, NormalizationScope scope) {
  if (tasks.size() != activations.size()) {
    throw ValidationError("train_kfold: tasks and activations are not aligned");
  }
  for (const auto& t : tasks) {
    if (!t.has_gold()) throw ValidationError("train_kfold: task '" + t.task_id + "' has no gold scores");
  }
  const auto folds = kfold_partition(tasks.size(), k, cfg.seed);

  std::vector<TaskActivations> per_task;
  if (scope == NormalizationScope::PerTask) {
    for (const auto& a : activations) per_task.push_back(normalize_task(a));
  }

  KFoldResult result;
  std::vector<double> fold_tau, fold_acc;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<std::size_t> train_idx;
    for (std::size_t g = 0; g < folds.size(); ++g) {
      if (g != f) train_idx.insert(train_idx.end(), folds[g].begin(), folds[g].end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    const std::vector<TaskActivations> normalized =
        scope == NormalizationScope::PerTask ? per_task : normalize_with_pooled(activations, train_idx);

    std::vector<TaskActivations> train_set;
    for (std::size_t i : train_idx) train_set.push_back(normalized[i]);

    TrainConfig fold_cfg = cfg;
    fold_cfg.seed = derive_seed(cfg.seed, "fold/" + std::to_string(f));
    FoldResult fr;
    fr.fold = f;
    fr.train = train_probe(train_set, kind, fold_cfg);
    for (std::size_t i : folds[f]) {
      fr.test_task_ids.push_back(tasks[i].task_id);
      const ProbePrediction pred = predict(fr.train.probe, normalized[i], tasks[i].size(), cfg.source);
      fr.test_metrics.push_back(pred.decisions.empty()
                                    ? evaluate_ranking(pred.ranking, tasks[i])
                                    : evaluate_ranking(pred.ranking, tasks[i], pred.decisions));
    }
    const RunMetrics rm = make_run_metrics(fr.test_metrics);
    fr.tau_abs = rm.tau_abs;
    fr.pairwise_accuracy = rm.pairwise_accuracy;
    fold_tau.push_back(fr.tau_abs);
    fold_acc.push_back(fr.pairwise_accuracy);
    result.folds.push_back(std::move(fr));
  }
  result.tau_abs = summarize(fold_tau);
  result.pairwise_accuracy = summarize(fold_acc);
  return result;
}

}  // namespace ccr
