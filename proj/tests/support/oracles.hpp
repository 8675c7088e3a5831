#pragma once

// Independent reference implementations used to check the library. They are
// written for clarity, not speed, and share no code with ccr_core.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

// Kendall's tau by counting every pair: (concordant - discordant) / C(n,2).
inline double kendall_tau(const std::vector<std::size_t>& predicted, const std::vector<std::size_t>& gold) {
  const std::size_t n = gold.size();
  std::vector<std::size_t> pos_p(n), pos_g(n);
  for (std::size_t i = 0; i < n; ++i) {
    pos_p[predicted[i]] = i;
    pos_g[gold[i]] = i;
  }
  long concordant = 0, discordant = 0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const bool p = pos_p[a] < pos_p[b];
      const bool g = pos_g[a] < pos_g[b];
      (p == g ? concordant : discordant) += 1;
    }
  }
  const double pairs = static_cast<double>(n * (n - 1) / 2);
  return pairs == 0 ? 0.0 : (concordant - discordant) / pairs;
}

// Gold order (best first) from scores.
inline std::vector<std::size_t> order_desc(const std::vector<double>& scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

// Fraction of ordered item pairs whose order in `order` agrees with gold.
inline double pair_agreement(const std::vector<std::size_t>& order, const std::vector<double>& gold) {
  std::size_t agree = 0, total = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      ++total;
      if (gold[order[i]] > gold[order[j]]) ++agree;
    }
  }
  return total == 0 ? 1.0 : static_cast<double>(agree) / total;
}

inline std::size_t choose(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// CORAL thresholds straight from the definition: delta_k = k/(K+1),
// increments delta^(a-1) (1-delta)^(b-1), reverse cumulative sum, centered.
inline std::vector<double> coral_biases(double alpha, double beta, std::size_t k) {
  std::vector<double> inc(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double d = static_cast<double>(i + 1) / static_cast<double>(k + 1);
    inc[i] = std::pow(d, alpha - 1.0) * std::pow(1.0 - d, beta - 1.0);
  }
  std::vector<double> b(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) b[i] += inc[j];
  }
  const double mean = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(k);
  for (double& x : b) x -= mean;
  return b;
}

// Central finite-difference gradient.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// True when f is smooth around x along every coordinate at step h: the two
// one-sided difference quotients agree. Instances at a hinge or min/max kink
// fail this and are resampled, because no derivative exists there.
inline bool is_smooth_at(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
                         double h, double tol = 1e-6) {
  const double f0 = f(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double fwd = (f(x) - f0) / h;
    x[i] = keep - h;
    const double bwd = (f0 - f(x)) / h;
    x[i] = keep;
    if (std::abs(fwd - bwd) > tol * std::max(1.0, std::abs(fwd) + std::abs(bwd)) + 50.0 * h) return false;
  }
  return true;
}

// Largest relative error |a - n| / max(|a|, |n|, 1e-6) over coordinates.
inline double max_relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-6});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

inline std::vector<std::vector<std::size_t>> all_permutations(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  std::vector<std::vector<std::size_t>> out;
  do out.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  return out;
}

inline std::vector<double> population_moments(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / n)};
}

}  // namespace oracle
