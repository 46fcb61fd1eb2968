#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace seqdmg {

/// Error categories. They map one-to-one onto the C API status codes and,
/// through those, onto the CLI exit codes (data errors exit 2, model and
/// validation errors exit 3).
enum class ErrorKind {
  InvalidArgument,
  Data,
  Model,
  Numeric,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

using VarId = int;
using SensorId = int;
/// Sorted, duplicate-free list of damage-variable ids.
using VarSet = std::vector<VarId>;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)) without overflow; -inf is the additive identity.
inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

/// log(sum(exp(v))). Returns -inf for an empty or all -inf input.
inline double log_sum_exp(const std::vector<double>& v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

/// Formats a set as "{1,3}".
std::string format_set(const VarSet& s);
/// Formats a set as the registry key "1,3".
std::string set_key(const VarSet& s);
/// Parses "1,3" (whitespace tolerated) into a sorted set. Throws on bad input.
VarSet parse_set_key(const std::string& key);

bool is_subset(const VarSet& inner, const VarSet& outer);
VarSet set_intersection(const VarSet& a, const VarSet& b);
VarSet set_difference(const VarSet& a, const VarSet& b);

}  // namespace seqdmg
