#include "ccr/common.hpp"

#include <cmath>
#include <cstdio>
#include <string>

namespace ccr {

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string to_hex(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return std::string(buf, 16);
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view label) {
  std::string key = std::to_string(base);
  key.push_back('/');
  key.append(label);
  // splitmix64 finalizer on top of FNV to spread nearby bases.
  std::uint64_t z = fnv1a64(key) + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("dot product of vectors with dimensions " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) {
  if (z > 30.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

double softplus_inverse(double y) {
  if (y > 30.0) return y + std::log(-std::expm1(-y));
  return std::log(std::expm1(y));
}

}  // namespace ccr
