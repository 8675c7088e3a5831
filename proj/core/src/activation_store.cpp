#include "ccr/activation_store.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ccr {

using nlohmann::json;

std::string_view to_string(PromptVariant variant) {
  switch (variant) {
    case PromptVariant::Single: return "single";
    case PromptVariant::PairPos: return "pair_pos";
    case PromptVariant::PairNeg: return "pair_neg";
    case PromptVariant::Pair: return "pair";
    case PromptVariant::List: return "list";
  }
  return "single";
}

PromptVariant prompt_variant_from_string(std::string_view text) {
  if (text == "single") return PromptVariant::Single;
  if (text == "pair_pos") return PromptVariant::PairPos;
  if (text == "pair_neg") return PromptVariant::PairNeg;
  if (text == "pair") return PromptVariant::Pair;
  if (text == "list") return PromptVariant::List;
  throw ParseError("unknown prompt_variant '" + std::string(text) + "'");
}

double LogitRecord::logit(const std::string& token) const {
  auto it = candidate_logits.find(token);
  if (it == candidate_logits.end()) {
    throw ValidationError("record '" + request_id + "' has no logit for candidate '" + token + "'");
  }
  return it->second;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open dump " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

template <typename Fn>
void for_each_jsonl(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    ++line_no;
    start = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
    if (!record.is_object()) throw ParseError("line " + std::to_string(line_no) + ": expected object");
    fn(record, line_no);
    if (end == text.size()) break;
  }
}

std::string where(std::size_t line_no) { return "line " + std::to_string(line_no); }

std::string get_string(const json& r, const char* key, std::size_t line_no) {
  if (!r.contains(key) || !r[key].is_string()) {
    throw ParseError(where(line_no) + ": missing string field '" + key + "'");
  }
  return r[key].get<std::string>();
}

double get_finite(const json& v, std::size_t line_no, const std::string& what) {
  if (!v.is_number()) throw ParseError(where(line_no) + ": " + what + " is not a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ValidationError(where(line_no) + ": " + what + " is not finite");
  return x;
}

}  // namespace

std::vector<ActivationRecord> parse_activation_dump(std::string_view text) {
  std::vector<ActivationRecord> out;
  std::optional<std::size_t> dim;
  for_each_jsonl(text, [&](const json& r, std::size_t line_no) {
    ActivationRecord rec;
    rec.task_id = get_string(r, "task_id", line_no);
    if (!r.contains("item_index") || !r["item_index"].is_number_unsigned()) {
      throw ParseError(where(line_no) + ": missing non-negative integer 'item_index'");
    }
    rec.item_index = r["item_index"].get<std::size_t>();
    if (r.contains("pair") && !r["pair"].is_null()) {
      const auto& p = r["pair"];
      if (!p.is_array() || p.size() != 2 || !p[0].is_number_unsigned() ||
          !p[1].is_number_unsigned()) {
        throw ParseError(where(line_no) + ": 'pair' must be [a, b]");
      }
      if (p[0].get<std::size_t>() != rec.item_index) {
        throw ParseError(where(line_no) + ": 'pair'[0] disagrees with item_index");
      }
      rec.pair_index = p[1].get<std::size_t>();
    }
    rec.variant = prompt_variant_from_string(get_string(r, "prompt_variant", line_no));
    if (!r.contains("vector") || !r["vector"].is_array()) {
      throw ParseError(where(line_no) + ": missing array field 'vector'");
    }
    rec.vector.reserve(r["vector"].size());
    for (const auto& v : r["vector"]) rec.vector.push_back(get_finite(v, line_no, "vector entry"));
    if (!dim) {
      dim = rec.vector.size();
    } else if (*dim != rec.vector.size()) {
      throw DimensionError(where(line_no) + " (task '" + rec.task_id + "', item " +
                           std::to_string(rec.item_index) + "): vector has dimension " +
                           std::to_string(rec.vector.size()) + ", dump dimension is " +
                           std::to_string(*dim));
    }
    out.push_back(std::move(rec));
  });
  return out;
}

std::vector<LogitRecord> parse_logit_dump(std::string_view text) {
  std::vector<LogitRecord> out;
  for_each_jsonl(text, [&](const json& r, std::size_t line_no) {
    LogitRecord rec;
    rec.request_id = get_string(r, "request_id", line_no);
    rec.task_id = get_string(r, "task_id", line_no);
    rec.variant = prompt_variant_from_string(get_string(r, "prompt_variant", line_no));
    if (!r.contains("candidate_logits") || !r["candidate_logits"].is_object()) {
      throw ParseError(where(line_no) + ": missing object field 'candidate_logits'");
    }
    for (const auto& [token, value] : r["candidate_logits"].items()) {
      rec.candidate_logits[token] = get_finite(value, line_no, "logit for '" + token + "'");
    }
    if (rec.candidate_logits.empty()) {
      throw ValidationError(where(line_no) + ": empty candidate_logits");
    }
    out.push_back(std::move(rec));
  });
  return out;
}

std::vector<ActivationRecord> read_activation_dump(const std::filesystem::path& path) {
  try {
    return parse_activation_dump(read_file(path));
  } catch (const DimensionError& e) {
    throw DimensionError(path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::vector<LogitRecord> read_logit_dump(const std::filesystem::path& path) {
  try {
    return parse_logit_dump(read_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string activation_record_to_json(const ActivationRecord& rec) {
  json r;
  r["task_id"] = rec.task_id;
  r["item_index"] = rec.item_index;
  if (rec.pair_index) r["pair"] = {rec.item_index, *rec.pair_index};
  r["prompt_variant"] = std::string(to_string(rec.variant));
  r["vector"] = rec.vector;
  return r.dump();
}

std::string logit_record_to_json(const LogitRecord& rec) {
  json r;
  r["request_id"] = rec.request_id;
  r["task_id"] = rec.task_id;
  r["prompt_variant"] = std::string(to_string(rec.variant));
  r["candidate_logits"] = json::object();
  for (const auto& [token, value] : rec.candidate_logits) r["candidate_logits"][token] = value;
  return r.dump();
}

void write_activation_dump(std::span<const ActivationRecord> records,
                           const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write dump " + path.string());
  for (const auto& rec : records) out << activation_record_to_json(rec) << '\n';
}

void write_logit_dump(std::span<const LogitRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write dump " + path.string());
  for (const auto& rec : records) out << logit_record_to_json(rec) << '\n';
}

DumpManifest read_manifest(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": invalid manifest JSON: " + e.what());
  }
  DumpManifest m;
  m.model = doc.value("model", std::string{});
  m.layer = doc.value("layer", std::string{"last"});
  m.dimension = doc.value("dimension", std::size_t{0});
  m.template_id = doc.value("template_id", std::string{});
  return m;
}

void write_manifest(const DumpManifest& m, const std::filesystem::path& path) {
  json doc{{"model", m.model}, {"layer", m.layer}, {"dimension", m.dimension},
           {"template_id", m.template_id}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write manifest " + path.string());
  out << doc.dump(2) << '\n';
}

Moments batch_moments(std::span<const Vector> batch) {
  if (batch.size() < 2) {
    throw ValidationError("z-normalization needs at least 2 vectors, got " +
                          std::to_string(batch.size()));
  }
  const std::size_t d = batch.front().size();
  Moments m{Vector(d, 0.0), Vector(d, 0.0)};
  for (const auto& v : batch) {
    if (v.size() != d) {
      throw DimensionError("batch mixes dimensions " + std::to_string(d) + " and " +
                           std::to_string(v.size()));
    }
    for (std::size_t j = 0; j < d; ++j) m.mean[j] += v[j];
  }
  const double n = static_cast<double>(batch.size());
  for (auto& x : m.mean) x /= n;
  for (const auto& v : batch) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = v[j] - m.mean[j];
      m.stddev[j] += c * c;
    }
  }
  for (auto& s : m.stddev) s = std::max(std::sqrt(s / n), kStdFloor);
  return m;
}

std::vector<Vector> apply_moments(std::span<const Vector> batch, const Moments& m) {
  std::vector<Vector> out;
  out.reserve(batch.size());
  for (const auto& v : batch) {
    if (v.size() != m.mean.size()) {
      throw DimensionError("vector of dimension " + std::to_string(v.size()) +
                           " does not match moments of dimension " +
                           std::to_string(m.mean.size()));
    }
    Vector z(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) z[j] = (v[j] - m.mean[j]) / m.stddev[j];
    out.push_back(std::move(z));
  }
  return out;
}

std::vector<Vector> z_normalize(std::span<const Vector> batch) {
  return apply_moments(batch, batch_moments(batch));
}

std::pair<std::vector<Vector>, std::vector<Vector>> normalize_contrast_classes(
    std::span<const Vector> pos, std::span<const Vector> neg) {
  if (pos.size() != neg.size()) {
    throw ValidationError("contrast classes differ in size: " + std::to_string(pos.size()) +
                          " vs " + std::to_string(neg.size()));
  }
  return {z_normalize(pos), z_normalize(neg)};
}

std::size_t TaskActivations::dimension() const {
  if (!items.empty()) return items.front().size();
  if (!pairs.empty()) return pairs.front().pos.size();
  return 0;
}

TaskActivations collect_task(std::span<const ActivationRecord> records, const RankingTask& task,
                             bool require_items) {
  TaskActivations out;
  out.task_id = task.task_id;
  if (task.gold_scores) out.gold_scores = *task.gold_scores;
  const std::size_t n = task.size();
  std::vector<std::optional<Vector>> items(n);
  std::map<std::pair<std::size_t, std::size_t>, PairActivation> pairs;
  for (const auto& rec : records) {
    if (rec.task_id != task.task_id) continue;
    if (rec.item_index >= n || (rec.pair_index && *rec.pair_index >= n)) {
      throw ValidationError("task '" + task.task_id + "': record index out of range");
    }
    switch (rec.variant) {
      case PromptVariant::Single:
        items[rec.item_index] = rec.vector;
        break;
      case PromptVariant::PairPos:
      case PromptVariant::PairNeg: {
        if (!rec.pair_index) {
          throw ValidationError("task '" + task.task_id + "': pair record without 'pair'");
        }
        auto& slot = pairs[{rec.item_index, *rec.pair_index}];
        slot.pair = {rec.item_index, *rec.pair_index};
        (rec.variant == PromptVariant::PairPos ? slot.pos : slot.neg) = rec.vector;
        break;
      }
      default:
        break;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (items[i]) {
      out.items.push_back(std::move(*items[i]));
    } else if (require_items) {
      throw ValidationError("task '" + task.task_id + "': no ItemSingle activation for item " +
                            std::to_string(i));
    }
  }
  if (!require_items && out.items.size() != n) out.items.clear();
  for (auto& [key, pa] : pairs) {
    if (pa.pos.empty() || pa.neg.empty()) {
      throw ValidationError("task '" + task.task_id + "': pair (" + std::to_string(key.first) +
                            "," + std::to_string(key.second) + ") lacks a pos or neg record");
    }
    out.pairs.push_back(std::move(pa));
  }
  return out;
}

std::string_view to_string(NormalizationScope scope) {
  return scope == NormalizationScope::PerTask ? "per_task" : "per_fold";
}

NormalizationScope normalization_scope_from_string(std::string_view text) {
  if (text == "per_task") return NormalizationScope::PerTask;
  if (text == "per_fold") return NormalizationScope::PerFold;
  throw ParseError("unknown normalization scope '" + std::string(text) + "'");
}

TaskActivations normalize_task(const TaskActivations& task) {
  TaskActivations out;
  out.task_id = task.task_id;
  out.gold_scores = task.gold_scores;
  if (!task.items.empty()) out.items = z_normalize(task.items);
  if (!task.pairs.empty()) {
    std::vector<Vector> pos, neg;
    for (const auto& p : task.pairs) {
      pos.push_back(p.pos);
      neg.push_back(p.neg);
    }
    auto [zp, zn] = normalize_contrast_classes(pos, neg);
    for (std::size_t i = 0; i < task.pairs.size(); ++i) {
      out.pairs.push_back({task.pairs[i].pair, std::move(zp[i]), std::move(zn[i])});
    }
  }
  return out;
}

}  // namespace ccr
