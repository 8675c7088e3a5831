#include "ccr/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "ccr/mock_lm.hpp"

namespace ccr {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct MethodEntry {
  Method method;
  std::string_view name;
  bool is_probe;
  LossKind loss;
  ActivationSource source;
  PromptType prompt;
};

constexpr MethodEntry kMethods[] = {
    {Method::OrigCcsP, "origCCS-P", true, LossKind::OrigCcs, ActivationSource::ItemPair, PromptType::ItemPair},
    {Method::OrigCcsS, "origCCS-S", true, LossKind::OrigCcs, ActivationSource::ItemSingle, PromptType::ItemSingle},
    {Method::MarginCcrS, "MarginCCR-S", true, LossKind::MarginCcr, ActivationSource::ItemSingle,
     PromptType::ItemSingle},
    {Method::TripletCcrS, "TripletCCR-S", true, LossKind::TripletCcr, ActivationSource::ItemSingle,
     PromptType::ItemSingle},
    {Method::OrdRegCcrS, "OrdRegCCR-S", true, LossKind::OrdRegCcr, ActivationSource::ItemSingle,
     PromptType::ItemSingle},
    {Method::PromptP, "prompt-P", false, LossKind::OrigCcs, ActivationSource::ItemPair, PromptType::ItemPair},
    {Method::PromptS, "prompt-S", false, LossKind::OrigCcs, ActivationSource::ItemSingle, PromptType::ItemSingle},
    {Method::PromptL, "prompt-L", false, LossKind::OrigCcs, ActivationSource::ItemSingle, PromptType::ItemList},
    {Method::SupBceP, "sup-BCE-P", true, LossKind::SupervisedBce, ActivationSource::ItemPair,
     PromptType::ItemPair},
    {Method::SupBceS, "sup-BCE-S", true, LossKind::SupervisedBce, ActivationSource::ItemSingle,
     PromptType::ItemSingle},
    {Method::SupMaxMarginS, "sup-MaxMargin-S", true, LossKind::SupervisedMaxMargin,
     ActivationSource::ItemSingle, PromptType::ItemSingle},
    {Method::SupTripletS, "sup-Triplet-S", true, LossKind::SupervisedTriplet, ActivationSource::ItemSingle,
     PromptType::ItemSingle},
    {Method::SupCoralS, "sup-CORAL-S", true, LossKind::SupervisedCoral, ActivationSource::ItemSingle,
     PromptType::ItemSingle},
};

const MethodEntry& entry(Method method) {
  for (const auto& e : kMethods) {
    if (e.method == method) return e;
  }
  throw ValidationError("unknown method");
}

std::size_t method_order(Method method) { return static_cast<std::size_t>(method); }

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes through a temporary file and a rename so readers never see a
// partially written file.
void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp" + to_hex(fnv1a64(path.string() + std::to_string(std::hash<std::thread::id>{}(
                                                    std::this_thread::get_id()))));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

// File-name-safe form of an id.
std::string safe_name(std::string_view id) {
  std::string out;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                    c == '_' || c == '.';
    out += ok ? c : '_';
  }
  return out;
}

// Number formatting shared by JSON and CSV so both carry identical values.
std::string number_text(double v) { return json(v).dump(); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// ---------------------------------------------------------------- config

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key) || obj[key].is_null()) return fallback;
  try {
    return obj[key].get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string("config: field '") + key + "' has the wrong type");
  }
}

void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> known,
                         const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      throw ParseError(where + ": unknown field '" + it.key() + "'");
    }
  }
}

DatasetSpec parse_dataset_spec(const json& d, const fs::path& base_dir, std::size_t index) {
  const std::string where = "config: datasets[" + std::to_string(index) + "]";
  if (d.is_string()) {
    const std::string s = d.get<std::string>();
    DatasetSpec spec;
    if (s == "synthfacts" || s == "synthcontext" || s == "planted") {
      spec.synthetic = s;
    } else {
      spec.path = base_dir / s;
    }
    return spec;
  }
  if (!d.is_object()) throw ParseError(where + " must be an object or string");
  reject_unknown_keys(d, {"path", "synthetic", "seed", "tasks", "items", "id"}, where);
  DatasetSpec spec;
  if (d.contains("path") == d.contains("synthetic")) {
    throw ParseError(where + " needs exactly one of 'path' or 'synthetic'");
  }
  if (d.contains("path")) {
    spec.path = base_dir / get_or<std::string>(d, "path", "");
  } else {
    spec.synthetic = get_or<std::string>(d, "synthetic", "");
    if (*spec.synthetic != "synthfacts" && *spec.synthetic != "synthcontext" && *spec.synthetic != "planted") {
      throw ParseError(where + ": unknown synthetic dataset '" + *spec.synthetic + "'");
    }
  }
  spec.seed = get_or<std::uint64_t>(d, "seed", 0);
  spec.planted_tasks = get_or<std::size_t>(d, "tasks", spec.planted_tasks);
  spec.planted_items = get_or<std::size_t>(d, "items", spec.planted_items);
  spec.planted_id = get_or<std::string>(d, "id", spec.planted_id);
  return spec;
}

void parse_train(const json& t, TrainConfig& cfg) {
  if (!t.is_object()) throw ParseError("config: 'train' must be an object");
  reject_unknown_keys(t,
                      {"epochs", "learning_rate", "beta1", "beta2", "epsilon", "margin", "positive_margin",
                       "consistency_weight", "confidence_weight", "column_penalty", "restarts", "pair_mode",
                       "init_scale"},
                      "config: train");
  cfg.epochs = get_or(t, "epochs", cfg.epochs);
  cfg.adam.learning_rate = get_or(t, "learning_rate", cfg.adam.learning_rate);
  cfg.adam.beta1 = get_or(t, "beta1", cfg.adam.beta1);
  cfg.adam.beta2 = get_or(t, "beta2", cfg.adam.beta2);
  cfg.adam.epsilon = get_or(t, "epsilon", cfg.adam.epsilon);
  cfg.loss.margin = get_or(t, "margin", cfg.loss.margin);
  cfg.loss.positive_margin = get_or(t, "positive_margin", cfg.loss.positive_margin);
  cfg.loss.consistency_weight = get_or(t, "consistency_weight", cfg.loss.consistency_weight);
  cfg.loss.confidence_weight = get_or(t, "confidence_weight", cfg.loss.confidence_weight);
  if (t.contains("column_penalty")) {
    const auto p = get_or<std::string>(t, "column_penalty", "absolute");
    if (p == "absolute") {
      cfg.loss.column_penalty = ConsistencyPenalty::Absolute;
    } else if (p == "squared") {
      cfg.loss.column_penalty = ConsistencyPenalty::Squared;
    } else {
      throw ParseError("config: train.column_penalty must be 'absolute' or 'squared'");
    }
  }
  cfg.restarts = get_or(t, "restarts", cfg.restarts);
  if (t.contains("pair_mode") && !t["pair_mode"].is_null()) {
    cfg.pair_mode = pair_mode_from_string(get_or<std::string>(t, "pair_mode", ""));
  }
  if (t.contains("init_scale") && !t["init_scale"].is_null()) cfg.init_scale = get_or(t, "init_scale", 0.0);
}

json dataset_spec_json(const DatasetSpec& spec) {
  json d;
  if (spec.path) {
    d["path"] = spec.path->lexically_normal().generic_string();
  } else {
    d["synthetic"] = *spec.synthetic;
    d["seed"] = spec.seed;
    if (*spec.synthetic == "planted") {
      d["tasks"] = spec.planted_tasks;
      d["items"] = spec.planted_items;
      d["id"] = spec.planted_id;
    }
  }
  return d;
}

json train_json(const TrainConfig& t) {
  json j;
  j["epochs"] = t.epochs;
  j["learning_rate"] = t.adam.learning_rate;
  j["beta1"] = t.adam.beta1;
  j["beta2"] = t.adam.beta2;
  j["epsilon"] = t.adam.epsilon;
  j["margin"] = t.loss.margin;
  j["positive_margin"] = t.loss.positive_margin;
  j["consistency_weight"] = t.loss.consistency_weight;
  j["confidence_weight"] = t.loss.confidence_weight;
  j["column_penalty"] = t.loss.column_penalty == ConsistencyPenalty::Absolute ? "absolute" : "squared";
  j["restarts"] = t.restarts;
  j["pair_mode"] = t.pair_mode ? json(std::string(to_string(*t.pair_mode))) : json(nullptr);
  j["init_scale"] = t.init_scale ? json(*t.init_scale) : json(nullptr);
  return j;
}

// Everything except datasets, methods, runs, output and jobs.
json shared_settings_json(const ExperimentConfig& c) {
  json j;
  j["train"] = train_json(c.train);
  j["seed"] = c.seed;
  j["kfold"] = c.kfold ? json(*c.kfold) : json(nullptr);
  j["normalization"] = std::string(to_string(c.normalization));
  j["listwise"] = {{"repeats", c.listwise.repeats},
                   {"aggregation", c.listwise.aggregation == RepeatAggregation::MeanRank ? "mean_rank" : "borda"}};
  j["mock"] = {{"dim", c.mock.dim}, {"noise", c.mock.noise}, {"fidelity", c.mock.fidelity}, {"bias", c.mock.bias}};
  j["dumps"] = c.dumps.lexically_normal().generic_string();
  return j;
}

// ---------------------------------------------------------------- data

struct PendingResponse : Error {
  using Error::Error;
};

// Where activations and logits come from.
class DataSource {
 public:
  virtual ~DataSource() = default;
  virtual TaskActivations activations(const RankingTask& task, ActivationSource source) = 0;
  virtual std::vector<PairLogits> pair_logits(const RankingTask& task) = 0;
  virtual std::vector<LogitRecord> single_logits(const RankingTask& task) = 0;
  virtual std::unique_ptr<ListwiseModel> listwise(const RankingTask& task) = 0;
};

mock::LogitConfig mock_logit_config(const ExperimentConfig& c) {
  return {c.mock.fidelity, c.mock.bias, derive_seed(c.seed, "mock-logits")};
}

std::uint64_t mock_seed(const ExperimentConfig& c) { return derive_seed(c.seed, "mock-lm"); }

std::vector<ActivationRecord> mock_activation_records(const ExperimentConfig& c, const RankingTask& task,
                                                      bool items, bool pairs) {
  std::vector<ActivationRecord> out;
  if (items) out = mock::embeddings(task, c.mock.dim, c.mock.noise, mock_seed(c));
  if (pairs) {
    auto p = mock::pair_embeddings(task, c.mock.dim, c.mock.noise, mock_seed(c));
    out.insert(out.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
  }
  return out;
}

class MockSource : public DataSource {
 public:
  explicit MockSource(const ExperimentConfig& c) : c_(c) {}

  TaskActivations activations(const RankingTask& task, ActivationSource source) override {
    const bool single = source == ActivationSource::ItemSingle;
    const auto records = mock_activation_records(c_, task, single, !single);
    return collect_task(records, task, single);
  }
  std::vector<PairLogits> pair_logits(const RankingTask& task) override {
    return mock::pair_logits(task, mock_logit_config(c_));
  }
  std::vector<LogitRecord> single_logits(const RankingTask& task) override {
    return mock::single_logits(task, mock_logit_config(c_));
  }
  std::unique_ptr<ListwiseModel> listwise(const RankingTask& task) override {
    return std::make_unique<mock::ListwiseMock>(task, mock_logit_config(c_));
  }

 private:
  const ExperimentConfig& c_;
};

fs::path plan_dir(const ExperimentConfig& c) { return c.output / "plan"; }
fs::path pending_path(const ExperimentConfig& c) { return c.output / "pending" / "item_list_requests.jsonl"; }
fs::path responses_path(const ExperimentConfig& c) { return c.dumps / "item_list_responses.jsonl"; }

// A listwise model that answers from a response file and records every
// request it has no answer for.
class ResponseFileModel : public ListwiseModel {
 public:
  ResponseFileModel(const std::unordered_map<std::string, LogitRecord>* responses,
                    std::vector<std::string>* pending, std::mutex* mu)
      : responses_(responses), pending_(pending), mu_(mu) {}

  LogitRecord respond(const ListwiseRequest& request) override {
    const auto it = responses_->find(request.request_id);
    if (it != responses_->end()) return it->second;
    {
      std::lock_guard lock(*mu_);
      pending_->push_back(request_to_json(request));
    }
    throw PendingResponse("no response for listwise request " + request.request_id);
  }

 private:
  const std::unordered_map<std::string, LogitRecord>* responses_;
  std::vector<std::string>* pending_;
  std::mutex* mu_;
};

class DumpSource : public DataSource {
 public:
  explicit DumpSource(const ExperimentConfig& c) : c_(c) {}

  TaskActivations activations(const RankingTask& task, ActivationSource source) override {
    ensure_activations();
    const bool single = source == ActivationSource::ItemSingle;
    const auto it = activations_.find(task.task_id);
    static const std::vector<ActivationRecord> kEmpty;
    const auto& records = it == activations_.end() ? kEmpty : it->second;
    const fs::path plan = plan_dir(c_) / (single ? "item_single.jsonl" : "item_pair.jsonl");
    try {
      TaskActivations out = collect_task(records, task, single);
      if (!single && out.pairs.size() != task.size() * (task.size() - 1)) {
        throw ValidationError("task '" + task.task_id + "': pair activations are incomplete");
      }
      return out;
    } catch (const ValidationError& e) {
      throw ValidationError(std::string(e.what()) + " in " + activation_file().string() +
                            "; run the extractor on " + plan.string());
    }
  }

  std::vector<PairLogits> pair_logits(const RankingTask& task) override {
    ensure_logits();
    std::vector<PairLogits> out;
    for (const auto& p : enumerate_pairs(task.size(), PairMode::Permutations)) {
      const auto it = logits_.find(pair_request_id(task.task_id, p.a, p.b));
      if (it == logits_.end()) missing_logits(task, "item_pair.jsonl");
      out.push_back({p, it->second});
    }
    return out;
  }

  std::vector<LogitRecord> single_logits(const RankingTask& task) override {
    ensure_logits();
    std::vector<LogitRecord> out;
    for (std::size_t i = 0; i < task.size(); ++i) {
      const auto it = logits_.find(single_request_id(task.task_id, i));
      if (it == logits_.end()) missing_logits(task, "item_single.jsonl");
      out.push_back(it->second);
    }
    return out;
  }

  std::unique_ptr<ListwiseModel> listwise(const RankingTask&) override {
    ensure_responses();
    return std::make_unique<ResponseFileModel>(&responses_, &pending_, &pending_mu_);
  }

  std::vector<std::string> take_pending() {
    std::lock_guard lock(pending_mu_);
    std::vector<std::string> out = std::move(pending_);
    pending_.clear();
    return out;
  }

 private:
  fs::path activation_file() const { return c_.dumps / "activations.jsonl"; }
  fs::path logit_file() const { return c_.dumps / "logits.jsonl"; }

  void require(const fs::path& file, const std::string& plan_file) const {
    if (!fs::exists(file)) {
      throw Error("missing dump " + file.string() + ": run the extractor on " +
                  (plan_dir(c_) / plan_file).string() + " (write it with `ccr plan`) or pass --mock");
    }
  }

  void ensure_activations() {
    std::call_once(activations_once_, [&] {
      require(activation_file(), "item_single.jsonl");
      for (auto& rec : read_activation_dump(activation_file())) {
        activations_[rec.task_id].push_back(std::move(rec));
      }
    });
  }

  void ensure_logits() {
    std::call_once(logits_once_, [&] {
      require(logit_file(), "item_pair.jsonl");
      for (auto& rec : read_logit_dump(logit_file())) logits_[rec.request_id] = std::move(rec);
    });
  }

  void ensure_responses() {
    std::call_once(responses_once_, [&] {
      if (!fs::exists(responses_path(c_))) return;  // every request becomes pending
      for (auto& rec : read_logit_dump(responses_path(c_))) responses_[rec.request_id] = std::move(rec);
    });
  }

  [[noreturn]] void missing_logits(const RankingTask& task, const std::string& plan_file) const {
    throw Error("task '" + task.task_id + "' has no logits in " + logit_file().string() +
                "; run the extractor on " + (plan_dir(c_) / plan_file).string());
  }

  const ExperimentConfig& c_;
  std::once_flag activations_once_, logits_once_, responses_once_;
  std::unordered_map<std::string, std::vector<ActivationRecord>> activations_;
  std::unordered_map<std::string, LogitRecord> logits_;
  std::unordered_map<std::string, LogitRecord> responses_;
  std::mutex pending_mu_;
  std::vector<std::string> pending_;
};

// ---------------------------------------------------------------- cells

struct Cell {
  const Dataset* dataset;
  const DatasetSpec* spec;
  Method method;
  std::size_t run;
};

std::string cell_name(const Cell& cell) {
  return safe_name(cell.dataset->dataset_id) + "__" + std::string(entry(cell.method).name) + "__run" +
         std::to_string(cell.run);
}

std::uint64_t run_seed(const ExperimentConfig& c, std::size_t run) {
  return derive_seed(c.seed, "run/" + std::to_string(run));
}

std::string cell_hash(const ExperimentConfig& c, const Cell& cell, bool mock) {
  json j = shared_settings_json(c);
  j["dataset"] = dataset_spec_json(*cell.spec);
  j["method"] = std::string(entry(cell.method).name);
  j["run"] = cell.run;
  j["mock"] = mock;
  if (mock) j.erase("dumps");
  return to_hex(fnv1a64(j.dump()));
}

json metrics_json(const TaskMetrics& m) {
  return {{"task_id", m.task_id},
          {"tau", m.tau},
          {"tau_abs", m.tau_abs},
          {"pairwise_accuracy", m.pairwise_accuracy},
          {"residual_ties", m.residual_ties}};
}

// Per-item scores for export: the method's own scores when it has them,
// otherwise N minus the predicted position.
Vector export_scores(const RankingPrediction& pred, std::size_t n) {
  if (pred.item_scores && pred.item_scores->size() == n) return *pred.item_scores;
  Vector s(n, 0.0);
  for (std::size_t p = 0; p < pred.order.size(); ++p) s[pred.order[p]] = static_cast<double>(n - p);
  return s;
}

std::vector<ItemScore> to_item_scores(const RankingTask& task, const Vector& scores) {
  std::vector<ItemScore> out;
  for (std::size_t i = 0; i < task.size(); ++i) out.push_back({i, task.items[i], scores[i]});
  return out;
}

class CellRunner {
 public:
  CellRunner(const ExperimentConfig& c, DataSource& source) : c_(c), source_(source) {}

  // Returns the cell document, or nothing when listwise responses are pending.
  std::optional<json> run(const Cell& cell, const std::string& hash) {
    const MethodEntry& m = entry(cell.method);
    const std::string name = cell_name(cell);
    std::vector<const RankingTask*> tasks;
    for (const auto& t : cell.dataset->tasks) {
      if (t.has_gold()) tasks.push_back(&t);
    }
    if (tasks.empty()) {
      throw ValidationError("dataset '" + cell.dataset->dataset_id + "' has no tasks with gold scores");
    }

    json doc;
    doc["dataset_id"] = cell.dataset->dataset_id;
    doc["dataset_kind"] = std::string(to_string(cell.dataset->kind));
    doc["method"] = std::string(m.name);
    doc["run"] = cell.run;
    doc["seed"] = run_seed(c_, cell.run);
    doc["config_hash"] = hash;
    doc["tasks"] = json::array();

    std::vector<TaskMetrics> metrics;
    if (m.is_probe && c_.kfold) {
      run_kfold(cell, m, name, tasks, doc, metrics);
    } else {
      bool pending = false;
      for (const RankingTask* task : tasks) {
        try {
          auto [tm, scores] = m.is_probe ? run_probe_task(cell, m, name, *task) : run_prompt_task(cell, m, *task);
          json tj = metrics_json(tm);
          tj["items"] = task->items;
          tj["scores"] = scores;
          doc["tasks"].push_back(std::move(tj));
          write_item_scores_csv(to_item_scores(*task, scores),
                                c_.output / "scores" / (name + "__" + safe_name(task->task_id) + ".csv"));
          metrics.push_back(std::move(tm));
        } catch (const PendingResponse&) {
          pending = true;
        }
      }
      if (pending) return std::nullopt;
    }
    const RunMetrics rm = make_run_metrics(metrics);
    doc["tau_abs"] = rm.tau_abs;
    doc["pairwise_accuracy"] = rm.pairwise_accuracy;
    return doc;
  }

 private:
  TrainConfig train_config(const Cell& cell, const MethodEntry& m, const std::string& key) const {
    TrainConfig cfg = c_.train;
    cfg.source = m.source;
    cfg.seed = derive_seed(run_seed(c_, cell.run), key);
    return cfg;
  }

  void write_probe(const Probe& probe, std::size_t k, const fs::path& path) const {
    const bool coral = std::holds_alternative<CoralProbe>(probe);
    write_atomic(path, probe_to_json(probe, coral ? std::optional<std::size_t>(k) : std::nullopt) + "\n");
  }

  std::pair<TaskMetrics, Vector> run_probe_task(const Cell& cell, const MethodEntry& m, const std::string& name,
                                                const RankingTask& task) {
    const TaskActivations normalized = normalize_task(source_.activations(task, m.source));
    const TrainConfig cfg = train_config(cell, m, cell.dataset->dataset_id + "/" + task.task_id);
    const TrainResult result = train_probe(std::span(&normalized, 1), m.loss, cfg);
    const ProbePrediction pred = predict(result.probe, normalized, task.size(), m.source);
    const std::string stem = name + "__" + safe_name(task.task_id);
    write_probe(result.probe, task.size(), c_.output / "probes" / (stem + ".json"));
    fs::create_directories(c_.output / "traces");
    write_loss_trace_csv(result, c_.output / "traces" / (stem + ".csv"));
    TaskMetrics tm = m.source == ActivationSource::ItemPair ? evaluate_ranking(pred.ranking, task, pred.decisions)
                                                            : evaluate_ranking(pred.ranking, task);
    Vector scores = m.source == ActivationSource::ItemSingle ? item_scores(result.probe, normalized.items)
                                                             : export_scores(pred.ranking, task.size());
    return {std::move(tm), std::move(scores)};
  }

  std::pair<TaskMetrics, Vector> run_prompt_task(const Cell& cell, const MethodEntry& m, const RankingTask& task) {
    switch (m.prompt) {
      case PromptType::ItemPair: {
        const auto logits = source_.pair_logits(task);
        const auto decisions = decide_pairs(calibrate_pairwise(logits));
        const RankingPrediction pred = pairs_to_ranking(task.task_id, task.size(), decisions);
        return {evaluate_ranking(pred, task, decisions), export_scores(pred, task.size())};
      }
      case PromptType::ItemSingle: {
        std::vector<PointwiseScore> scores;
        for (const auto& rec : source_.single_logits(task)) scores.push_back(pointwise_score(rec));
        const RankingPrediction pred = pointwise_ranking(task.task_id, scores);
        Vector values(task.size());
        for (std::size_t i = 0; i < task.size(); ++i) values[i] = scores[i].rank_value;
        return {evaluate_ranking(pred, task), values};
      }
      case PromptType::ItemList: {
        ListwiseOptions opts = c_.listwise;
        opts.seed = derive_seed(run_seed(c_, cell.run), "listwise/" + task.task_id);
        auto model = source_.listwise(task);
        // Advance every repeat as far as the responses allow, so one exchange
        // round collects the next step of all repeats at once.
        bool waiting = false;
        for (std::size_t r = 0; r < opts.repeats; ++r) {
          ListwiseSession session(task, r, opts.seed + r);
          try {
            while (!session.done()) session.apply(model->respond(session.next_request()));
          } catch (const PendingResponse&) {
            waiting = true;
          }
        }
        if (waiting) throw PendingResponse("listwise responses pending for " + task.task_id);
        const RankingPrediction pred = listwise_decode(task, *model, opts);
        return {evaluate_ranking(pred, task), export_scores(pred, task.size())};
      }
    }
    throw ValidationError("unknown prompt type");
  }

  void run_kfold(const Cell& cell, const MethodEntry& m, const std::string& name,
                 const std::vector<const RankingTask*>& tasks, json& doc, std::vector<TaskMetrics>& metrics) {
    std::vector<RankingTask> task_copies;
    std::vector<TaskActivations> raw;
    for (const RankingTask* t : tasks) {
      task_copies.push_back(*t);
      raw.push_back(source_.activations(*t, m.source));
    }
    const TrainConfig cfg = train_config(cell, m, "kfold/" + cell.dataset->dataset_id);
    const KFoldResult kf = train_kfold(task_copies, raw, m.loss, *c_.kfold, cfg, c_.normalization);
    doc["folds"] = json::array();
    fs::create_directories(c_.output / "traces");
    for (const FoldResult& fr : kf.folds) {
      const std::string stem = name + "__fold" + std::to_string(fr.fold);
      const std::size_t k = task_copies.front().size();
      write_probe(fr.train.probe, k, c_.output / "probes" / (stem + ".json"));
      write_loss_trace_csv(fr.train, c_.output / "traces" / (stem + ".csv"));
      doc["folds"].push_back({{"fold", fr.fold},
                              {"test_task_ids", fr.test_task_ids},
                              {"tau_abs", fr.tau_abs},
                              {"pairwise_accuracy", fr.pairwise_accuracy},
                              {"final_loss", fr.train.final_loss}});
      for (const TaskMetrics& tm : fr.test_metrics) {
        json tj = metrics_json(tm);
        tj["fold"] = fr.fold;
        doc["tasks"].push_back(std::move(tj));
        metrics.push_back(tm);
      }
    }
    doc["kfold_tau_abs"] = {{"mean", kf.tau_abs.mean}, {"std", kf.tau_abs.stddev}};
    doc["kfold_pairwise_accuracy"] = {{"mean", kf.pairwise_accuracy.mean}, {"std", kf.pairwise_accuracy.stddev}};
  }

  const ExperimentConfig& c_;
  DataSource& source_;
};

// ---------------------------------------------------------------- plan helpers

bool needs_prompt(const ExperimentConfig& c, PromptType type) {
  return std::any_of(c.methods.begin(), c.methods.end(), [&](Method m) { return entry(m).prompt == type; });
}

json single_request(const RankingTask& task, std::size_t item) {
  return {{"request_id", single_request_id(task.task_id, item)},
          {"dataset_id", task.dataset_id},
          {"task_id", task.task_id},
          {"prompt_type", "ItemSingle"},
          {"item_index", item},
          {"prompt_text", render_single_prompt(task, item, true, kMaskToken)},
          {"candidates", scale_candidates()},
          {"capture", {"activation", "logits"}}};
}

json pair_request(const RankingTask& task, const ItemPair& p) {
  return {{"request_id", pair_request_id(task.task_id, p.a, p.b)},
          {"dataset_id", task.dataset_id},
          {"task_id", task.task_id},
          {"prompt_type", "ItemPair"},
          {"pair", {p.a, p.b}},
          {"prompt_text", render_pair_prompt(task, p.a, p.b, "")},
          {"completions",
           {{"pair_pos", render_pair_prompt(task, p.a, p.b, kYesToken)},
            {"pair_neg", render_pair_prompt(task, p.a, p.b, kNoToken)}}},
          {"candidates", {std::string(kYesToken), std::string(kNoToken)}},
          {"capture", {"activation", "logits"}}};
}

}  // namespace

// ---------------------------------------------------------------- public API

std::string_view to_string(Method method) { return entry(method).name; }

Method method_from_string(std::string_view text) {
  for (const auto& e : kMethods) {
    if (e.name == text) return e.method;
  }
  throw ParseError("unknown method '" + std::string(text) + "'");
}

MethodInfo method_info(Method method) {
  const MethodEntry& e = entry(method);
  return {e.method, e.is_probe, e.loss, e.source, e.prompt};
}

std::vector<Method> default_methods() {
  return {Method::OrigCcsP,    Method::OrigCcsS, Method::MarginCcrS, Method::TripletCcrS,
          Method::OrdRegCcrS, Method::PromptP,  Method::PromptS,    Method::PromptL};
}

std::vector<Method> supervised_methods() {
  return {Method::SupBceP, Method::SupBceS, Method::SupMaxMarginS, Method::SupTripletS, Method::SupCoralS};
}

void ExperimentConfig::validate() const {
  if (datasets.empty()) throw ValidationError("config: at least one dataset is required");
  if (methods.empty()) throw ValidationError("config: at least one method is required");
  if (runs < 1) throw ValidationError("config: runs must be >= 1");
  if (jobs < 1) throw ValidationError("config: jobs must be >= 1");
  if (kfold && *kfold < 2) throw ValidationError("config: kfold must be >= 2");
  if (listwise.repeats < 1) throw ValidationError("config: listwise.repeats must be >= 1");
  if (mock.dim < 1) throw ValidationError("config: mock.dim must be >= 1");
  if (!(mock.noise >= 0.0)) throw ValidationError("config: mock.noise must be >= 0");
  if (!(mock.fidelity >= 0.0 && mock.fidelity <= 1.0)) {
    throw ValidationError("config: mock.fidelity must lie in [0, 1]");
  }
  train.validate();
}

ExperimentConfig parse_experiment_config(std::string_view json_text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("config: top level must be an object");
  reject_unknown_keys(doc,
                      {"datasets", "methods", "train", "runs", "seed", "kfold", "normalization", "listwise",
                       "mock", "dumps", "output", "jobs"},
                      "config");

  ExperimentConfig c;
  if (!doc.contains("datasets") || !doc["datasets"].is_array()) {
    throw ParseError("config: 'datasets' must be an array");
  }
  for (std::size_t i = 0; i < doc["datasets"].size(); ++i) {
    c.datasets.push_back(parse_dataset_spec(doc["datasets"][i], base_dir, i));
  }

  if (!doc.contains("methods")) {
    c.methods = default_methods();
  } else {
    // A bare string is shorthand for a one-element list ("all", "supervised").
    const json methods = doc["methods"].is_string() ? json::array({doc["methods"]}) : doc["methods"];
    if (!methods.is_array()) throw ParseError("config: 'methods' must be an array or a string");
    for (const auto& m : methods) {
      if (!m.is_string()) throw ParseError("config: method names must be strings");
      const std::string name = m.get<std::string>();
      if (name == "all") {
        for (Method x : default_methods()) c.methods.push_back(x);
      } else if (name == "supervised") {
        for (Method x : supervised_methods()) c.methods.push_back(x);
      } else {
        c.methods.push_back(method_from_string(name));
      }
    }
    std::set<Method> seen;
    std::vector<Method> unique;
    for (Method m : c.methods) {
      if (seen.insert(m).second) unique.push_back(m);
    }
    c.methods = std::move(unique);
  }

  if (doc.contains("train")) parse_train(doc["train"], c.train);
  c.runs = get_or(doc, "runs", c.runs);
  c.seed = get_or(doc, "seed", c.seed);
  if (doc.contains("kfold") && !doc["kfold"].is_null()) c.kfold = get_or<std::size_t>(doc, "kfold", 0);
  if (doc.contains("normalization")) {
    c.normalization = normalization_scope_from_string(get_or<std::string>(doc, "normalization", ""));
  }
  if (doc.contains("listwise")) {
    const json& l = doc["listwise"];
    if (!l.is_object()) throw ParseError("config: 'listwise' must be an object");
    reject_unknown_keys(l, {"repeats", "aggregation"}, "config: listwise");
    c.listwise.repeats = get_or(l, "repeats", c.listwise.repeats);
    const auto agg = get_or<std::string>(l, "aggregation", "mean_rank");
    if (agg == "mean_rank") {
      c.listwise.aggregation = RepeatAggregation::MeanRank;
    } else if (agg == "borda") {
      c.listwise.aggregation = RepeatAggregation::Borda;
    } else {
      throw ParseError("config: listwise.aggregation must be 'mean_rank' or 'borda'");
    }
  }
  if (doc.contains("mock")) {
    const json& m = doc["mock"];
    if (!m.is_object()) throw ParseError("config: 'mock' must be an object");
    reject_unknown_keys(m, {"dim", "noise", "fidelity", "bias"}, "config: mock");
    c.mock.dim = get_or(m, "dim", c.mock.dim);
    c.mock.noise = get_or(m, "noise", c.mock.noise);
    c.mock.fidelity = get_or(m, "fidelity", c.mock.fidelity);
    c.mock.bias = get_or(m, "bias", c.mock.bias);
  }
  c.dumps = base_dir / get_or<std::string>(doc, "dumps", c.dumps.string());
  c.output = base_dir / get_or<std::string>(doc, "output", c.output.string());
  c.jobs = get_or(doc, "jobs", c.jobs);
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  if (!fs::exists(path)) throw Error("config file not found: " + path.string());
  return parse_experiment_config(read_text(path), path.parent_path());
}

std::string canonical_config_json(const ExperimentConfig& c) {
  json j = shared_settings_json(c);
  j["datasets"] = json::array();
  for (const auto& d : c.datasets) j["datasets"].push_back(dataset_spec_json(d));
  j["methods"] = json::array();
  for (Method m : c.methods) j["methods"].push_back(std::string(to_string(m)));
  j["runs"] = c.runs;
  return j.dump();
}

std::string config_hash(const ExperimentConfig& c) { return to_hex(fnv1a64(canonical_config_json(c))); }

std::vector<Dataset> materialize_datasets(const ExperimentConfig& c) {
  std::vector<Dataset> out;
  for (const auto& spec : c.datasets) {
    if (spec.path) {
      out.push_back(load_dataset(*spec.path).dataset);
    } else if (*spec.synthetic == "planted") {
      out.push_back(generate_planted(spec.planted_tasks, spec.planted_items, spec.seed, spec.planted_id));
    } else {
      out.push_back(generate_synthetic(synthetic_kind_from_string(*spec.synthetic), spec.seed));
    }
  }
  // Dump records are keyed by task id alone, so ids must be unique overall.
  std::set<std::string> dataset_ids, task_ids;
  for (const auto& d : out) {
    if (!dataset_ids.insert(d.dataset_id).second) {
      throw ValidationError("config: dataset id '" + d.dataset_id + "' appears twice");
    }
    for (const auto& t : d.tasks) {
      if (!task_ids.insert(t.task_id).second) {
        throw ValidationError("config: task id '" + t.task_id + "' appears in more than one dataset");
      }
    }
  }
  return out;
}

std::size_t planned_single_requests(const RankingTask& task) { return task.size(); }
std::size_t planned_pair_requests(const RankingTask& task) { return task.size() * (task.size() - 1); }

PlanSummary cmd_plan(const ExperimentConfig& config, const fs::path& out_dir) {
  config.validate();
  const std::vector<Dataset> datasets = materialize_datasets(config);
  const fs::path dir = out_dir / "plan";
  PlanSummary summary;

  // Probing methods need the ItemSingle/ItemPair activations as well, so the
  // same request files serve both probes and prompting.
  if (needs_prompt(config, PromptType::ItemSingle)) {
    std::string text;
    for (const auto& d : datasets) {
      for (const auto& t : d.tasks) {
        for (std::size_t i = 0; i < t.size(); ++i) text += single_request(t, i).dump() + "\n";
        summary.item_single_requests += planned_single_requests(t);
      }
    }
    write_atomic(dir / "item_single.jsonl", text);
    summary.files.push_back(dir / "item_single.jsonl");
  }
  if (needs_prompt(config, PromptType::ItemPair)) {
    std::string text;
    for (const auto& d : datasets) {
      for (const auto& t : d.tasks) {
        for (const auto& p : enumerate_pairs(t.size(), PairMode::Permutations)) {
          text += pair_request(t, p).dump() + "\n";
        }
        summary.item_pair_requests += planned_pair_requests(t);
      }
    }
    write_atomic(dir / "item_pair.jsonl", text);
    summary.files.push_back(dir / "item_pair.jsonl");
  }
  if (needs_prompt(config, PromptType::ItemList)) {
    std::string text;
    std::set<std::string> seen;
    for (std::size_t run = 0; run < config.runs; ++run) {
      for (const auto& d : datasets) {
        for (const auto& t : d.tasks) {
          const std::uint64_t seed = derive_seed(run_seed(config, run), "listwise/" + t.task_id);
          for (std::size_t r = 0; r < config.listwise.repeats; ++r) {
            const ListwiseRequest req = ListwiseSession(t, r, seed + r).next_request();
            if (!seen.insert(req.request_id).second) continue;
            text += request_to_json(req) + "\n";
            ++summary.item_list_requests;
          }
        }
      }
    }
    write_atomic(dir / "item_list_round0.jsonl", text);
    summary.files.push_back(dir / "item_list_round0.jsonl");
  }
  json manifest = {{"config_hash", config_hash(config)},
                   {"item_single_requests", summary.item_single_requests},
                   {"item_pair_requests", summary.item_pair_requests},
                   {"item_list_requests", summary.item_list_requests}};
  write_atomic(dir / "plan.json", manifest.dump(2) + "\n");
  return summary;
}

RunSummary cmd_run(const ExperimentConfig& config, bool mock) {
  config.validate();
  const std::vector<Dataset> datasets = materialize_datasets(config);

  std::vector<Cell> cells;
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    for (Method m : config.methods) {
      for (std::size_t r = 0; r < config.runs; ++r) cells.push_back({&datasets[d], &config.datasets[d], m, r});
    }
  }

  MockSource mock_source(config);
  DumpSource dump_source(config);
  DataSource& source = mock ? static_cast<DataSource&>(mock_source) : dump_source;
  const fs::path cell_dir = config.output / "cells";
  fs::create_directories(cell_dir);

  RunSummary summary;
  summary.cells_total = cells.size();
  std::vector<std::exception_ptr> errors(cells.size());
  std::vector<char> computed(cells.size(), 0), skipped(cells.size(), 0);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    CellRunner runner(config, source);
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        const Cell& cell = cells[i];
        const std::string hash = cell_hash(config, cell, mock);
        const fs::path path = cell_dir / (cell_name(cell) + ".json");
        if (fs::exists(path)) {
          try {
            if (json::parse(read_text(path)).value("config_hash", "") == hash) {
              skipped[i] = 1;
              continue;
            }
          } catch (const json::exception&) {
            // unreadable cell files are recomputed
          }
        }
        if (auto doc = runner.run(cell, hash)) {
          write_atomic(path, doc->dump(2) + "\n");
          computed[i] = 1;
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const std::size_t threads = std::min(config.jobs, cells.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    summary.cells_computed += computed[i];
    summary.cells_skipped += skipped[i];
  }

  if (!mock) {
    std::vector<std::string> pending = dump_source.take_pending();
    if (!pending.empty()) {
      std::sort(pending.begin(), pending.end());
      pending.erase(std::unique(pending.begin(), pending.end()), pending.end());
      std::string text;
      for (const auto& line : pending) text += line + "\n";
      write_atomic(pending_path(config), text);
      throw Error(std::to_string(pending.size()) + " listwise requests await responses: serve " +
                  pending_path(config).string() + " with the extractor, append the responses to " +
                  responses_path(config).string() + " and run again");
    }
    if (fs::exists(pending_path(config))) fs::remove(pending_path(config));
  }
  return summary;
}

Report cmd_report(const fs::path& store) {
  const fs::path cell_dir = store / "cells";
  std::vector<fs::path> files;
  if (fs::is_directory(cell_dir)) {
    for (const auto& e : fs::directory_iterator(cell_dir)) {
      if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
  }
  if (files.empty()) throw Error("result store " + store.string() + " is empty; run `ccr run` first");
  std::sort(files.begin(), files.end());

  struct CellRecord {
    std::string dataset_id, kind, method;
    std::size_t run;
    double tau_abs, accuracy;
    json doc;
  };
  std::vector<CellRecord> cells;
  for (const auto& f : files) {
    json doc;
    try {
      doc = json::parse(read_text(f));
      cells.push_back({doc.at("dataset_id").get<std::string>(), doc.at("dataset_kind").get<std::string>(),
                       doc.at("method").get<std::string>(), doc.at("run").get<std::size_t>(),
                       doc.at("tau_abs").get<double>(), doc.at("pairwise_accuracy").get<double>(), doc});
    } catch (const json::exception& e) {
      throw ParseError("result cell " + f.string() + ": " + e.what());
    }
  }

  auto method_rank = [](const std::string& name) {
    try {
      return method_order(method_from_string(name));
    } catch (const ParseError&) {
      return std::size_t{1000};
    }
  };
  using Key = std::tuple<std::string, std::size_t, std::string>;  // group, method order, method

  auto build = [&](bool by_kind) {
    // group -> method -> run -> values (averaged over datasets of the group)
    std::map<Key, std::map<std::size_t, std::pair<std::vector<double>, std::vector<double>>>> acc;
    for (const auto& c : cells) {
      auto& slot = acc[{by_kind ? c.kind : c.dataset_id, method_rank(c.method), c.method}][c.run];
      slot.first.push_back(c.tau_abs);
      slot.second.push_back(c.accuracy);
    }
    std::vector<ReportRow> rows;
    for (const auto& [key, runs] : acc) {
      std::vector<double> taus, accs;
      for (const auto& [run, v] : runs) {
        taus.push_back(summarize(v.first).mean);
        accs.push_back(summarize(v.second).mean);
      }
      const Summary ts = summarize(taus), as = summarize(accs);
      rows.push_back({std::get<0>(key), std::get<2>(key), runs.size(), ts.mean, ts.stddev, as.mean, as.stddev});
    }
    return rows;
  };

  Report report;
  report.by_kind = build(true);
  report.by_dataset = build(false);

  auto rows_csv = [](const std::vector<ReportRow>& rows, const char* group_name) {
    std::string out = std::string(group_name) +
                      ",method,runs,tau_abs_mean,tau_abs_std,pairwise_accuracy_mean,pairwise_accuracy_std\n";
    for (const auto& r : rows) {
      out += csv_field(r.group) + "," + csv_field(r.method) + "," + std::to_string(r.runs) + "," +
             number_text(r.tau_abs_mean) + "," + number_text(r.tau_abs_std) + "," + number_text(r.accuracy_mean) +
             "," + number_text(r.accuracy_std) + "\n";
    }
    return out;
  };
  auto rows_json = [](const std::vector<ReportRow>& rows, const char* group_name) {
    json arr = json::array();
    for (const auto& r : rows) {
      arr.push_back({{group_name, r.group},
                     {"method", r.method},
                     {"runs", r.runs},
                     {"tau_abs_mean", r.tau_abs_mean},
                     {"tau_abs_std", r.tau_abs_std},
                     {"pairwise_accuracy_mean", r.accuracy_mean},
                     {"pairwise_accuracy_std", r.accuracy_std}});
    }
    return arr;
  };

  write_atomic(store / "report.csv", rows_csv(report.by_kind, "dataset_kind"));
  write_atomic(store / "report_by_dataset.csv", rows_csv(report.by_dataset, "dataset_id"));
  json rj = {{"by_kind", rows_json(report.by_kind, "dataset_kind")},
             {"by_dataset", rows_json(report.by_dataset, "dataset_id")}};

  std::string kfold_csv = "dataset_id,method,run,fold,tau_abs,pairwise_accuracy\n";
  std::string item_csv = "dataset_id,method,run,task_id,item_index,item,score\n";
  bool any_folds = false;
  for (const auto& c : cells) {
    const std::string prefix = csv_field(c.dataset_id) + "," + csv_field(c.method) + "," + std::to_string(c.run) + ",";
    if (c.doc.contains("folds")) {
      any_folds = true;
      for (const auto& f : c.doc["folds"]) {
        kfold_csv += prefix + std::to_string(f.at("fold").get<std::size_t>()) + "," +
                     number_text(f.at("tau_abs").get<double>()) + "," +
                     number_text(f.at("pairwise_accuracy").get<double>()) + "\n";
      }
    }
    for (const auto& t : c.doc.at("tasks")) {
      if (!t.contains("scores")) continue;
      const auto& items = t.at("items");
      const auto& scores = t.at("scores");
      for (std::size_t i = 0; i < scores.size(); ++i) {
        item_csv += prefix + csv_field(t.at("task_id").get<std::string>()) + "," + std::to_string(i) + "," +
                    csv_field(items.at(i).get<std::string>()) + "," + number_text(scores[i].get<double>()) + "\n";
      }
    }
  }
  if (any_folds) write_atomic(store / "kfold.csv", kfold_csv);
  write_atomic(store / "item_scores.csv", item_csv);
  write_atomic(store / "report.json", rj.dump(2) + "\n");
  return report;
}

void write_mock_dumps(const ExperimentConfig& config, const fs::path& dir) {
  config.validate();
  const std::vector<Dataset> datasets = materialize_datasets(config);
  const bool single = needs_prompt(config, PromptType::ItemSingle);
  const bool pair = needs_prompt(config, PromptType::ItemPair);
  std::vector<ActivationRecord> acts;
  std::vector<LogitRecord> logits;
  for (const auto& d : datasets) {
    for (const auto& t : d.tasks) {
      if (!t.has_gold()) continue;
      auto a = mock_activation_records(config, t, single, pair);
      acts.insert(acts.end(), std::make_move_iterator(a.begin()), std::make_move_iterator(a.end()));
      if (single) {
        for (auto& rec : mock::single_logits(t, mock_logit_config(config))) logits.push_back(std::move(rec));
      }
      if (pair) {
        for (auto& pl : mock::pair_logits(t, mock_logit_config(config))) logits.push_back(std::move(pl.record));
      }
    }
  }
  fs::create_directories(dir);
  write_activation_dump(acts, dir / "activations.jsonl");
  write_logit_dump(logits, dir / "logits.jsonl");
  write_manifest({"mock", "last", config.mock.dim, "ccr-default"}, dir / "manifest.json");
}

std::size_t serve_listwise_mock(const ExperimentConfig& config, const fs::path& requests,
                                const fs::path& responses) {
  const std::vector<Dataset> datasets = materialize_datasets(config);
  std::map<std::string, const RankingTask*> by_id;
  for (const auto& d : datasets) {
    for (const auto& t : d.tasks) by_id[t.task_id] = &t;
  }
  std::ifstream in(requests);
  if (!in) throw Error("cannot open " + requests.string());
  std::vector<LogitRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ListwiseRequest req;
    try {
      req = request_from_json(line);
    } catch (const Error& e) {
      throw ParseError(requests.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    const auto it = by_id.find(req.task_id);
    if (it == by_id.end()) throw ValidationError("listwise request for unknown task '" + req.task_id + "'");
    mock::ListwiseMock model(*it->second, mock_logit_config(config));
    out.push_back(model.respond(req));
  }
  if (responses.has_parent_path()) fs::create_directories(responses.parent_path());
  std::ofstream o(responses, std::ios::app);
  if (!o) throw Error("cannot write " + responses.string());
  for (const auto& rec : out) o << logit_record_to_json(rec) << "\n";
  return out.size();
}

}  // namespace ccr
