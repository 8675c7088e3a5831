#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ccr {

using Vector = std::vector<double>;

// Error hierarchy. Everything thrown by the library derives from ccr::Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input document or record.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Vector length disagrees with the expected dimension.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// 64-bit FNV-1a. Used for request ids and seed derivation, so the value must
// never depend on platform or library version.
std::uint64_t fnv1a64(std::string_view data);

// 16 lowercase hex digits.
std::string to_hex(std::uint64_t value);

// Mixes a base seed with a label into an independent stream seed.
std::uint64_t derive_seed(std::uint64_t base, std::string_view label);

using Rng = std::mt19937_64;

double dot(std::span<const double> a, std::span<const double> b);

// Logistic function, stable for large |z|.
double sigmoid(double z);

// log(1 + exp(z)), stable for large |z|.
double softplus(double z);

// Inverse of softplus for y > 0.
double softplus_inverse(double y);

}  // namespace ccr
