#include "ccr/task_model.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "ccr/common.hpp"
#include "json.hpp"

namespace ccr {

using nlohmann::json;

std::string_view to_string(DatasetKind kind) {
  return kind == DatasetKind::FactBased ? "fact-based" : "context-based";
}

DatasetKind dataset_kind_from_string(std::string_view text) {
  if (text == "fact-based") return DatasetKind::FactBased;
  if (text == "context-based") return DatasetKind::ContextBased;
  throw ParseError("unknown dataset kind '" + std::string(text) +
                   "' (expected fact-based or context-based)");
}

std::vector<int> RankingTask::gold_ranks() const {
  if (!gold_ranking) throw ValidationError("task '" + task_id + "' has no gold scores");
  std::vector<int> ranks(size());
  const auto& order = *gold_ranking;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    ranks[order[pos]] = static_cast<int>(order.size() - pos);
  }
  return ranks;
}

RankingTask make_task(std::string task_id, std::string dataset_id, std::string criterion,
                      std::optional<std::string> context, std::vector<std::string> items,
                      std::optional<std::vector<double>> gold_scores) {
  RankingTask task;
  task.task_id = std::move(task_id);
  task.dataset_id = std::move(dataset_id);
  task.criterion = std::move(criterion);
  task.context = std::move(context);
  task.items = std::move(items);
  if (gold_scores) {
    if (gold_scores->size() != task.items.size()) {
      throw ValidationError("task '" + task.task_id + "': " +
                            std::to_string(gold_scores->size()) + " gold scores for " +
                            std::to_string(task.items.size()) + " items");
    }
    std::vector<std::size_t> order(task.items.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto& s = *gold_scores;
    std::stable_sort(order.begin(), order.end(),
                     [&s](std::size_t i, std::size_t j) { return s[i] > s[j]; });
    task.gold_scores = std::move(gold_scores);
    task.gold_ranking = std::move(order);
  }
  return task;
}

bool has_tied_scores(const std::vector<double>& scores) {
  std::vector<double> sorted = scores;
  std::sort(sorted.begin(), sorted.end());
  return std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
}

const RankingTask* Dataset::find(std::string_view task_id) const {
  for (const auto& t : tasks) {
    if (t.task_id == task_id) return &t;
  }
  return nullptr;
}

namespace {

std::string record_name(std::size_t index, const json& record) {
  std::string name = "tasks[" + std::to_string(index) + "]";
  if (record.is_object() && record.contains("task_id") && record["task_id"].is_string()) {
    name += " ('" + record["task_id"].get<std::string>() + "')";
  }
  return name;
}

RankingTask parse_task(const json& record, std::size_t index, const std::string& dataset_id) {
  const std::string where = record_name(index, record);
  if (!record.is_object()) throw ParseError(where + ": expected an object");
  auto require_string = [&](const char* key) {
    if (!record.contains(key) || !record[key].is_string()) {
      throw ParseError(where + ": missing or non-string field '" + key + "'");
    }
    return record[key].get<std::string>();
  };
  std::string task_id = require_string("task_id");
  std::string criterion = require_string("criterion");

  std::optional<std::string> context;
  if (record.contains("context") && !record["context"].is_null()) {
    if (!record["context"].is_string()) throw ParseError(where + ": 'context' must be a string");
    context = record["context"].get<std::string>();
  }

  if (!record.contains("items") || !record["items"].is_array()) {
    throw ParseError(where + ": missing array field 'items'");
  }
  std::vector<std::string> items;
  for (const auto& item : record["items"]) {
    if (item.is_string()) {
      items.push_back(item.get<std::string>());
    } else if (item.is_number()) {
      items.push_back(item.dump());
    } else {
      throw ParseError(where + ": items must be strings or numbers");
    }
  }

  std::optional<std::vector<double>> gold;
  if (record.contains("gold_scores") && !record["gold_scores"].is_null()) {
    if (!record["gold_scores"].is_array()) throw ParseError(where + ": 'gold_scores' must be an array");
    std::vector<double> scores;
    for (const auto& v : record["gold_scores"]) {
      if (!v.is_number()) throw ParseError(where + ": gold_scores must be numeric");
      scores.push_back(v.get<double>());
    }
    if (scores.size() != items.size()) {
      throw ParseError(where + ": " + std::to_string(scores.size()) + " gold_scores for " +
                       std::to_string(items.size()) + " items");
    }
    gold = std::move(scores);
  }
  return make_task(std::move(task_id), dataset_id, std::move(criterion), std::move(context),
                   std::move(items), std::move(gold));
}

}  // namespace

LoadReport parse_dataset(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("task document is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("task document: top level must be an object");
  if (!doc.contains("dataset_id") || !doc["dataset_id"].is_string()) {
    throw ParseError("task document: missing string field 'dataset_id'");
  }
  if (!doc.contains("tasks") || !doc["tasks"].is_array()) {
    throw ParseError("task document: missing array field 'tasks'");
  }

  LoadReport report;
  report.dataset.dataset_id = doc["dataset_id"].get<std::string>();
  if (doc.contains("kind")) {
    if (!doc["kind"].is_string()) throw ParseError("task document: 'kind' must be a string");
    report.dataset.kind = dataset_kind_from_string(doc["kind"].get<std::string>());
  }

  std::set<std::string> seen;
  const auto& tasks = doc["tasks"];
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    RankingTask task = parse_task(tasks[i], i, report.dataset.dataset_id);
    if (!seen.insert(task.task_id).second) {
      throw ValidationError("duplicate task_id '" + task.task_id + "' in dataset '" +
                            report.dataset.dataset_id + "'");
    }
    const bool too_small = task.size() < kMinTaskItems;
    const bool tied = task.gold_scores && has_tied_scores(*task.gold_scores);
    if (too_small || tied) {
      report.removed.push_back(task.task_id);
      continue;
    }
    report.dataset.tasks.push_back(std::move(task));
  }
  return report;
}

LoadReport load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open task file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str());
}

std::string dataset_to_json(const Dataset& dataset) {
  json doc;
  doc["dataset_id"] = dataset.dataset_id;
  doc["kind"] = std::string(to_string(dataset.kind));
  doc["tasks"] = json::array();
  for (const auto& task : dataset.tasks) {
    json t;
    t["task_id"] = task.task_id;
    t["criterion"] = task.criterion;
    if (task.context) t["context"] = *task.context;
    t["items"] = task.items;
    if (task.gold_scores) t["gold_scores"] = *task.gold_scores;
    doc["tasks"].push_back(std::move(t));
  }
  return doc.dump(2) + "\n";
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write task file " + path.string());
  out << dataset_to_json(dataset);
}

std::string_view to_string(SyntheticKind kind) {
  return kind == SyntheticKind::SynthFacts ? "synthfacts" : "synthcontext";
}

SyntheticKind synthetic_kind_from_string(std::string_view text) {
  if (text == "synthfacts") return SyntheticKind::SynthFacts;
  if (text == "synthcontext") return SyntheticKind::SynthContext;
  throw ParseError("unknown synthetic dataset '" + std::string(text) +
                   "' (expected synthfacts or synthcontext)");
}

namespace {

struct SyntheticSpec {
  const char* task_id;
  const char* criterion;
  const char* context;
  std::vector<std::string> items;
  std::vector<double> gold;
};

RankingTask build_synthetic(const SyntheticSpec& spec, const std::string& dataset_id,
                            std::uint64_t seed) {
  std::vector<std::size_t> perm(spec.items.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  if (seed != 0) {
    Rng rng(derive_seed(seed, spec.task_id));
    // Fisher-Yates with our own index draw so the result is stdlib-independent.
    for (std::size_t i = perm.size(); i > 1; --i) {
      std::swap(perm[i - 1], perm[rng() % i]);
    }
  }
  std::vector<std::string> items;
  std::vector<double> gold;
  for (std::size_t idx : perm) {
    items.push_back(spec.items[idx]);
    gold.push_back(spec.gold[idx]);
  }
  std::optional<std::string> context;
  if (spec.context) context = spec.context;
  return make_task(spec.task_id, dataset_id, spec.criterion, std::move(context), std::move(items),
                   std::move(gold));
}

}  // namespace

Dataset generate_synthetic(SyntheticKind kind, std::uint64_t seed) {
  Dataset ds;
  ds.dataset_id = std::string(to_string(kind));
  std::vector<SyntheticSpec> specs;
  if (kind == SyntheticKind::SynthFacts) {
    ds.kind = DatasetKind::FactBased;
    specs.push_back({"sentiment", "sentiment of the adjective", nullptr,
                     {"horrible", "bad", "okay", "good", "great", "awesome"},
                     {1, 2, 3, 4, 5, 6}});
    specs.push_back({"cardinality", "cardinality of the number", nullptr,
                     {"1", "10", "100", "500", "1000", "10000"},
                     {1, 10, 100, 500, 1000, 10000}});
  } else {
    ds.kind = DatasetKind::ContextBased;
    specs.push_back({"color popularity", "popularity of the color",
                     "Most students selected blue as their favourite color, followed by red, then "
                     "yellow. Brown ranked lowest, green second lowest and purple third lowest;",
                     {"brown", "green", "purple", "yellow", "red", "blue"},
                     {1, 2, 3, 4, 5, 6}});
    specs.push_back({"wealth", "wealth of people",
                     "An owns 100 dollar, Tom owns 50 dollars more and Sam 75 dollars more. Jenny "
                     "is the richest owning 1000 dollar. Emily and Muhammad are at the lower end "
                     "owning only 5 dollar and 10 dollars respectively.",
                     {"Emily", "Muhammad", "An", "Tom", "Sam", "Jenny"},
                     {5, 10, 100, 150, 175, 1000}});
  }
  for (const auto& spec : specs) ds.tasks.push_back(build_synthetic(spec, ds.dataset_id, seed));
  return ds;
}

Dataset generate_planted(std::size_t task_count, std::size_t items_per_task, std::uint64_t seed,
                         std::string dataset_id) {
  Dataset ds;
  ds.dataset_id = std::move(dataset_id);
  ds.kind = DatasetKind::FactBased;
  Rng rng(derive_seed(seed, "planted/" + ds.dataset_id));
  for (std::size_t t = 0; t < task_count; ++t) {
    std::vector<std::string> items;
    std::vector<double> gold(items_per_task);
    std::iota(gold.begin(), gold.end(), 1.0);
    for (std::size_t i = gold.size(); i > 1; --i) std::swap(gold[i - 1], gold[rng() % i]);
    for (std::size_t i = 0; i < items_per_task; ++i) items.push_back("item_" + std::to_string(i));
    char suffix[32];
    std::snprintf(suffix, sizeof(suffix), "_%03zu", t);
    const std::string id = ds.dataset_id + suffix;
    ds.tasks.push_back(
        make_task(id, ds.dataset_id, "planted attribute", std::nullopt, std::move(items), gold));
  }
  return ds;
}

std::string_view to_string(PairMode mode) {
  return mode == PairMode::Combinations ? "combinations" : "permutations";
}

PairMode pair_mode_from_string(std::string_view text) {
  if (text == "combinations") return PairMode::Combinations;
  if (text == "permutations") return PairMode::Permutations;
  throw ParseError("unknown pair mode '" + std::string(text) + "'");
}

std::vector<ItemPair> enumerate_pairs(std::size_t n, PairMode mode) {
  std::vector<ItemPair> pairs;
  pairs.reserve(mode == PairMode::Permutations ? n * (n - (n > 0)) : n * (n - (n > 0)) / 2);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      if (mode == PairMode::Combinations && b < a) continue;
      pairs.push_back({a, b});
    }
  }
  return pairs;
}

std::vector<ItemTriple> enumerate_triples(std::size_t n) {
  std::vector<ItemTriple> triples;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t k = j + 1; k < n; ++k) {
        triples.push_back({i, j, k});
        triples.push_back({j, i, k});
        triples.push_back({k, i, j});
      }
    }
  }
  return triples;
}

}  // namespace ccr
