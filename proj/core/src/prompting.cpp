#include "ccr/prompting.hpp"

#include <algorithm>
#include <numeric>

#include "json.hpp"

namespace ccr {

using nlohmann::json;

std::string_view to_string(PromptType type) {
  switch (type) {
    case PromptType::ItemPair: return "ItemPair";
    case PromptType::ItemSingle: return "ItemSingle";
    case PromptType::ItemList: return "ItemList";
  }
  return "ItemSingle";
}

PromptType prompt_type_from_string(std::string_view text) {
  if (text == "ItemPair") return PromptType::ItemPair;
  if (text == "ItemSingle") return PromptType::ItemSingle;
  if (text == "ItemList") return PromptType::ItemList;
  throw ParseError("unknown prompt type '" + std::string(text) + "'");
}

std::vector<std::string> scale_candidates() {
  std::vector<std::string> out;
  for (int v = 0; v <= kScaleMax; ++v) out.push_back(std::to_string(v));
  return out;
}

std::string option_label(std::size_t position) {
  std::string label;
  std::size_t n = position + 1;
  while (n > 0) {
    --n;
    label.insert(label.begin(), static_cast<char>('A' + n % 26));
    n /= 26;
  }
  return label;
}

namespace {

std::string with_context(const RankingTask& task, std::string body) {
  if (!task.context || task.context->empty()) return body;
  return *task.context + " " + body;
}

void append_completion(std::string& text, std::string_view completion) {
  if (completion.empty()) return;
  text += ' ';
  text += completion;
}

}  // namespace

std::string render_pair_prompt(const RankingTask& task, std::size_t a, std::size_t b,
                               std::string_view completion) {
  std::string text = "Is " + task.items.at(a) + " more in terms of " + task.criterion + " than " +
                     task.items.at(b) + "?";
  append_completion(text, completion);
  return with_context(task, std::move(text));
}

std::string render_single_prompt(const RankingTask& task, std::size_t item, bool with_scale,
                                 std::string_view completion) {
  std::string text = with_scale ? "On a scale from 0 to 10, the " : "The ";
  text += task.criterion + " of " + task.items.at(item) + " is";
  append_completion(text, completion);
  return with_context(task, std::move(text));
}

std::string render_list_prompt(const RankingTask& task, std::span<const std::size_t> presented,
                               std::span<const std::string> chosen_labels) {
  std::string text;
  if (task.context && !task.context->empty()) text = *task.context + " ";
  text += "Order by " + task.criterion + ". Options:";
  for (std::size_t pos = 0; pos < presented.size(); ++pos) {
    text += (pos == 0 ? " \"" : ", \"") + option_label(pos) + "\" " + task.items.at(presented[pos]);
  }
  text += ". The correct ordering is:";
  for (std::size_t i = 0; i < chosen_labels.size(); ++i) {
    text += (i == 0 ? " " : ", ") + chosen_labels[i];
  }
  return text;
}

namespace {

CalibratedPair raw_pair(const PairLogits& p) {
  const std::string yes(kYesToken), no(kNoToken);
  if (!p.record.has(yes) || !p.record.has(no)) {
    throw ValidationError("pair record '" + p.record.request_id + "' lacks a Yes or No logit");
  }
  return {p.record.task_id, p.pair, p.record.logit(yes), p.record.logit(no)};
}

}  // namespace

std::vector<CalibratedPair> uncalibrated_pairs(std::span<const PairLogits> records) {
  std::vector<CalibratedPair> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(raw_pair(r));
  return out;
}

std::vector<CalibratedPair> calibrate_pairwise(std::span<const PairLogits> records) {
  std::vector<CalibratedPair> out = uncalibrated_pairs(records);
  if (out.empty()) return out;
  double yes_mean = 0.0, no_mean = 0.0;
  for (const auto& p : out) {
    yes_mean += p.yes_score;
    no_mean += p.no_score;
  }
  yes_mean /= static_cast<double>(out.size());
  no_mean /= static_cast<double>(out.size());
  for (auto& p : out) {
    p.yes_score -= yes_mean;
    p.no_score -= no_mean;
  }
  return out;
}

PairDecision decide_pair(const CalibratedPair& p) {
  PairDecision d;
  d.a = p.pair.a;
  d.b = p.pair.b;
  d.score = p.yes_score - p.no_score;
  d.winner = p.yes_score > p.no_score ? p.pair.a : p.pair.b;
  d.tie = p.yes_score == p.no_score;
  return d;
}

std::vector<PairDecision> decide_pairs(std::span<const CalibratedPair> pairs) {
  std::vector<PairDecision> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(decide_pair(p));
  return out;
}

PointwiseScore pointwise_score(const LogitRecord& record) {
  PointwiseScore best;
  bool first = true;
  for (int v = 0; v <= kScaleMax; ++v) {
    const std::string token = std::to_string(v);
    if (!record.has(token)) {
      throw ValidationError("pointwise record '" + record.request_id + "' lacks candidate '" +
                            token + "'");
    }
    const double logit = record.logit(token);
    if (first || logit > best.tiebreak) {
      best.rank_value = v;
      best.tiebreak = logit;
      best.argmax_tie = false;
      first = false;
    } else if (logit == best.tiebreak) {
      best.argmax_tie = true;
    }
  }
  return best;
}

RankingPrediction pointwise_ranking(std::string task_id, std::span<const PointwiseScore> scores) {
  RankingPrediction p;
  p.task_id = std::move(task_id);
  p.order.resize(scores.size());
  std::iota(p.order.begin(), p.order.end(), std::size_t{0});
  std::stable_sort(p.order.begin(), p.order.end(), [&](std::size_t i, std::size_t j) {
    if (scores[i].rank_value != scores[j].rank_value) return scores[i].rank_value > scores[j].rank_value;
    return scores[i].tiebreak > scores[j].tiebreak;
  });
  Vector item_scores(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    item_scores[i] = scores[i].rank_value;
    if (scores[i].argmax_tie) p.residual_ties = true;
  }
  for (std::size_t i = 1; i < p.order.size(); ++i) {
    const auto& x = scores[p.order[i - 1]];
    const auto& y = scores[p.order[i]];
    if (x.rank_value == y.rank_value && x.tiebreak == y.tiebreak) p.residual_ties = true;
  }
  p.item_scores = std::move(item_scores);
  return p;
}

std::string listwise_request_id(const std::string& task_id, std::size_t repeat,
                                std::span<const std::size_t> presented,
                                std::span<const std::size_t> chosen) {
  std::string key = task_id + "|ItemList|" + std::to_string(repeat) + "|";
  for (std::size_t i : presented) key += std::to_string(i) + ",";
  key += "|";
  for (std::size_t i : chosen) key += std::to_string(i) + ",";
  return "L-" + to_hex(fnv1a64(key));
}

std::string pair_request_id(const std::string& task_id, std::size_t a, std::size_t b) {
  return "P-" + to_hex(fnv1a64(task_id + "|ItemPair|" + std::to_string(a) + "," + std::to_string(b)));
}

std::string single_request_id(const std::string& task_id, std::size_t item) {
  return "S-" + to_hex(fnv1a64(task_id + "|ItemSingle|" + std::to_string(item)));
}

std::string request_to_json(const ListwiseRequest& r) {
  json doc;
  doc["request_id"] = r.request_id;
  doc["task_id"] = r.task_id;
  doc["repeat"] = r.repeat;
  doc["step"] = r.step;
  doc["presented"] = r.presented;
  doc["remaining"] = r.remaining;
  doc["chosen_labels"] = r.chosen_labels;
  doc["prompt_text"] = r.prompt_text;
  doc["candidates"] = r.candidates;
  return doc.dump();
}

ListwiseRequest request_from_json(std::string_view line) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("listwise request: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("request_id") || !doc.contains("candidates")) {
    throw ParseError("listwise request: missing request_id or candidates");
  }
  ListwiseRequest r;
  r.request_id = doc["request_id"].get<std::string>();
  r.task_id = doc.value("task_id", std::string{});
  r.repeat = doc.value("repeat", std::size_t{0});
  r.step = doc.value("step", std::size_t{0});
  r.presented = doc.value("presented", std::vector<std::size_t>{});
  r.remaining = doc.value("remaining", std::vector<std::size_t>{});
  r.chosen_labels = doc.value("chosen_labels", std::vector<std::string>{});
  r.prompt_text = doc.value("prompt_text", std::string{});
  r.candidates = doc["candidates"].get<std::vector<std::string>>();
  return r;
}

ListwiseSession::ListwiseSession(const RankingTask& task, std::size_t repeat,
                                 std::uint64_t shuffle_seed)
    : task_(&task), repeat_(repeat) {
  presented_.resize(task.size());
  std::iota(presented_.begin(), presented_.end(), std::size_t{0});
  Rng rng(shuffle_seed);
  for (std::size_t i = presented_.size(); i > 1; --i) std::swap(presented_[i - 1], presented_[rng() % i]);
  remaining_ = presented_;
  labels_.resize(task.size());
  for (std::size_t pos = 0; pos < presented_.size(); ++pos) labels_[presented_[pos]] = option_label(pos);
}

ListwiseRequest ListwiseSession::next_request() const {
  ListwiseRequest r;
  r.task_id = task_->task_id;
  r.repeat = repeat_;
  r.step = chosen_.size();
  r.presented = presented_;
  r.remaining = remaining_;
  for (std::size_t i : chosen_) r.chosen_labels.push_back(labels_[i]);
  for (std::size_t i : remaining_) r.candidates.push_back(labels_[i]);
  r.prompt_text = render_list_prompt(*task_, presented_, r.chosen_labels);
  r.request_id = listwise_request_id(task_->task_id, repeat_, presented_, chosen_);
  return r;
}

void ListwiseSession::apply(const LogitRecord& response) {
  if (done()) throw ValidationError("listwise session for '" + task_->task_id + "' is finished");
  if (response.candidate_logits.size() != remaining_.size()) {
    throw ValidationError("listwise response '" + response.request_id + "' has " +
                          std::to_string(response.candidate_logits.size()) +
                          " candidates, expected " + std::to_string(remaining_.size()));
  }
  std::size_t best = 0;
  double best_logit = 0.0;
  std::size_t at_best = 0;
  for (std::size_t pos = 0; pos < remaining_.size(); ++pos) {
    const std::string& label = labels_[remaining_[pos]];
    if (!response.has(label)) {
      throw ValidationError("listwise response '" + response.request_id +
                            "' is missing remaining option '" + label + "'");
    }
    const double logit = response.logit(label);
    if (pos == 0 || logit > best_logit) {
      best = pos;
      best_logit = logit;
      at_best = 1;
    } else if (logit == best_logit) {
      ++at_best;
    }
  }
  if (at_best > 1) ++ties_;
  chosen_.push_back(remaining_[best]);
  remaining_.erase(remaining_.begin() + static_cast<std::ptrdiff_t>(best));
}

RankingPrediction listwise_decode(const RankingTask& task, ListwiseModel& model,
                                  const ListwiseOptions& options) {
  if (options.repeats < 1) throw ValidationError("listwise decoding needs at least one repeat");
  const std::size_t n = task.size();
  std::vector<std::vector<std::size_t>> positions;  // [repeat][item]
  bool ties = false;
  for (std::size_t r = 0; r < options.repeats; ++r) {
    ListwiseSession session(task, r, options.seed + r);
    while (!session.done()) {
      const ListwiseRequest request = session.next_request();
      LogitRecord response = model.respond(request);
      if (response.request_id != request.request_id) {
        throw ValidationError("listwise response id '" + response.request_id +
                              "' does not match request '" + request.request_id + "'");
      }
      session.apply(response);
    }
    ties = ties || session.tie_count() > 0;
    std::vector<std::size_t> pos(n);
    for (std::size_t p = 0; p < n; ++p) pos[session.chosen()[p]] = p;
    positions.push_back(std::move(pos));
  }

  Vector merit(n, 0.0);  // higher is better
  for (const auto& pos : positions) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = static_cast<double>(pos[i]);
      merit[i] += options.aggregation == RepeatAggregation::Borda ? static_cast<double>(n - 1) - p : -p;
    }
  }
  if (options.aggregation == RepeatAggregation::MeanRank) {
    for (double& m : merit) m = static_cast<double>(n - 1) + m / static_cast<double>(positions.size());
  }

  RankingPrediction out;
  out.task_id = task.task_id;
  out.order.resize(n);
  std::iota(out.order.begin(), out.order.end(), std::size_t{0});
  const auto& first = positions.front();
  std::stable_sort(out.order.begin(), out.order.end(), [&](std::size_t i, std::size_t j) {
    if (merit[i] != merit[j]) return merit[i] > merit[j];
    return first[i] < first[j];
  });
  out.residual_ties = ties;
  out.item_scores = std::move(merit);
  return out;
}

}  // namespace ccr
