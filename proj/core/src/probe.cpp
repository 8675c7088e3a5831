#include "ccr/probe.hpp"

#include <cmath>

#include "json.hpp"

namespace ccr {

using nlohmann::json;

namespace {

void check_dim(std::size_t expected, std::size_t got) {
  if (expected != got) {
    throw DimensionError("probe expects dimension " + std::to_string(expected) + ", got " +
                         std::to_string(got));
  }
}

}  // namespace

double LinearProbe::logit(std::span<const double> x) const {
  check_dim(theta.size(), x.size());
  return dot(theta, x) + bias;
}

double CoralProbe::logit(std::span<const double> x) const {
  check_dim(theta.size(), x.size());
  return dot(theta, x);
}

double score(const LinearProbe& probe, std::span<const double> x) {
  return sigmoid(probe.logit(x));
}

BiasVector coral_biases(double alpha, double beta, std::size_t k) {
  if (!(alpha > 0.0) || !(beta > 0.0)) {
    throw ValidationError("coral_biases requires alpha, beta > 0");
  }
  if (k < 2) throw ValidationError("coral_biases requires K >= 2");

  Vector shaped(k), shaped_da(k), shaped_db(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double delta = static_cast<double>(i + 1) / static_cast<double>(k + 1);
    const double la = std::log(delta);
    const double lb = std::log1p(-delta);
    shaped[i] = std::exp((alpha - 1.0) * la + (beta - 1.0) * lb);
    shaped_da[i] = shaped[i] * la;
    shaped_db[i] = shaped[i] * lb;
  }

  BiasVector out{Vector(k), Vector(k), Vector(k)};
  double acc = 0.0, acc_a = 0.0, acc_b = 0.0;
  for (std::size_t i = k; i-- > 0;) {
    acc += shaped[i];
    acc_a += shaped_da[i];
    acc_b += shaped_db[i];
    out.b[i] = acc;
    out.d_alpha[i] = acc_a;
    out.d_beta[i] = acc_b;
  }
  auto centre = [k](Vector& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(k);
    for (double& x : v) x -= mean;
  };
  centre(out.b);
  centre(out.d_alpha);
  centre(out.d_beta);
  return out;
}

Vector coral_scores(const CoralProbe& probe, std::span<const double> x, std::size_t k) {
  const double z = probe.logit(x);
  const BiasVector biases = coral_biases(probe.alpha, probe.beta, k);
  Vector row(k);
  for (std::size_t i = 0; i < k; ++i) row[i] = sigmoid(z + biases.b[i]);
  return row;
}

std::size_t predict_rank(std::span<const double> row) {
  std::size_t count = 0;
  for (double s : row) count += s > 0.5 ? 1 : 0;
  return count == 0 ? 1 : count;
}

double pair_score(double f_pos, double f_neg) { return 0.5 * (f_pos + (1.0 - f_neg)); }

std::string probe_to_json(const Probe& probe, std::optional<std::size_t> k) {
  json doc;
  if (const auto* lp = std::get_if<LinearProbe>(&probe)) {
    doc["kind"] = "linear";
    doc["theta"] = lp->theta;
    doc["bias"] = lp->bias;
    doc["dim"] = lp->dim();
  } else {
    const auto& cp = std::get<CoralProbe>(probe);
    doc["kind"] = "coral";
    doc["theta"] = cp.theta;
    doc["alpha"] = cp.alpha;
    doc["beta"] = cp.beta;
    doc["dim"] = cp.dim();
    if (k) doc["K"] = *k;
  }
  return doc.dump(2) + "\n";
}

Probe probe_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("probe JSON: ") + e.what());
  }
  const std::string kind = doc.value("kind", std::string{});
  if (!doc.contains("theta") || !doc["theta"].is_array()) throw ParseError("probe JSON: missing theta");
  Vector theta = doc["theta"].get<Vector>();
  if (doc.contains("dim") && doc["dim"].get<std::size_t>() != theta.size()) {
    throw DimensionError("probe JSON: dim disagrees with theta length");
  }
  if (kind == "linear") {
    return LinearProbe{std::move(theta), doc.value("bias", 0.0)};
  }
  if (kind == "coral") {
    CoralProbe cp{std::move(theta), doc.value("alpha", 1.0), doc.value("beta", 1.0)};
    if (!(cp.alpha > 0.0) || !(cp.beta > 0.0)) throw ValidationError("probe JSON: alpha, beta must be > 0");
    return cp;
  }
  throw ParseError("probe JSON: unknown kind '" + kind + "'");
}

}  // namespace ccr
