#pragma once

#include <vector>

#include "common.hpp"

namespace seqdmg {

/// Dense table of log-values over change-time bins of a set of damage
/// variables. Every axis has the same number of bins (all variables share the
/// time clock). Layout is row-major over the sorted variable ids, the first id
/// being the slowest-varying axis.
class LogTable {
 public:
  LogTable() = default;
  LogTable(VarSet vars, size_t bins, double fill = 0.0);

  const VarSet& vars() const { return vars_; }
  size_t bins() const { return bins_; }
  size_t size() const { return data_.size(); }
  size_t rank() const { return vars_.size(); }

  double& operator[](size_t flat) { return data_[flat]; }
  double operator[](size_t flat) const { return data_[flat]; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  size_t flat_index(const std::vector<size_t>& coords) const;
  std::vector<size_t> coords(size_t flat) const;
  /// Axis position of `var`, or -1.
  int axis_of(VarId var) const;

  /// this += other broadcast along the axes `other` lacks. other.vars() must be
  /// a subset of vars() and bins must agree.
  void add(const LogTable& other);
  /// log-sum-exp over every axis not in `keep`. `keep` must be a subset of vars().
  LogTable marginalize_to(const VarSet& keep) const;
  /// log of the total mass.
  double log_total() const;
  /// Subtracts log_total(); throws Numeric if the table has no mass.
  void normalize();

 private:
  VarSet vars_;
  size_t bins_ = 1;
  std::vector<double> data_{0.0};
};

/// Walks all coordinates of a rank-k grid with `bins` per axis in row-major
/// order, tracking the flat offset into a second table whose per-axis strides
/// are given (0 for absent axes).
class Odometer {
 public:
  Odometer(size_t rank, size_t bins, std::vector<size_t> other_strides);
  const std::vector<size_t>& coords() const { return coords_; }
  size_t other_index() const { return other_; }
  /// Advances; returns false after the last coordinate.
  bool next();

 private:
  std::vector<size_t> coords_;
  size_t bins_;
  std::vector<size_t> strides_;
  size_t other_ = 0;
};

}  // namespace seqdmg
