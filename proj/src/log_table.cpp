#include "log_table.hpp"

#include <algorithm>

namespace seqdmg {

namespace {

size_t ipow(size_t base, size_t exp) {
  size_t r = 1;
  for (size_t k = 0; k < exp; ++k) r *= base;
  return r;
}

std::vector<size_t> strides_for(size_t rank, size_t bins) {
  std::vector<size_t> s(rank, 1);
  for (size_t k = rank; k-- > 1;) s[k - 1] = s[k] * bins;
  return s;
}

// Strides of `sub` laid along the axes of `full` (0 where `full` has an axis
// that `sub` lacks).
std::vector<size_t> embedded_strides(const VarSet& full, const VarSet& sub, size_t bins) {
  const auto sub_strides = strides_for(sub.size(), bins);
  std::vector<size_t> out(full.size(), 0);
  for (size_t k = 0; k < full.size(); ++k) {
    auto it = std::lower_bound(sub.begin(), sub.end(), full[k]);
    if (it != sub.end() && *it == full[k]) out[k] = sub_strides[static_cast<size_t>(it - sub.begin())];
  }
  return out;
}

}  // namespace

LogTable::LogTable(VarSet vars, size_t bins, double fill) : vars_(std::move(vars)), bins_(bins) {
  if (bins_ == 0) fail(ErrorKind::InvalidArgument, "table needs at least one bin");
  if (!std::is_sorted(vars_.begin(), vars_.end()) ||
      std::adjacent_find(vars_.begin(), vars_.end()) != vars_.end())
    fail(ErrorKind::InvalidArgument, "table variables must be sorted and unique");
  data_.assign(ipow(bins_, vars_.size()), fill);
}

size_t LogTable::flat_index(const std::vector<size_t>& coords) const {
  size_t idx = 0;
  for (size_t c : coords) idx = idx * bins_ + c;
  return idx;
}

std::vector<size_t> LogTable::coords(size_t flat) const {
  std::vector<size_t> c(vars_.size());
  for (size_t k = vars_.size(); k-- > 0;) {
    c[k] = flat % bins_;
    flat /= bins_;
  }
  return c;
}

int LogTable::axis_of(VarId var) const {
  auto it = std::lower_bound(vars_.begin(), vars_.end(), var);
  return (it != vars_.end() && *it == var) ? static_cast<int>(it - vars_.begin()) : -1;
}

void LogTable::add(const LogTable& other) {
  if (other.bins_ != bins_ && other.rank() > 0) fail(ErrorKind::InvalidArgument, "bin count mismatch in table product");
  if (!is_subset(other.vars_, vars_)) fail(ErrorKind::InvalidArgument, "table scope is not a subset");
  if (other.rank() == 0) {
    for (double& v : data_) v += other.data_[0];
    return;
  }
  Odometer it(rank(), bins_, embedded_strides(vars_, other.vars_, bins_));
  size_t flat = 0;
  do {
    data_[flat++] += other.data_[it.other_index()];
  } while (it.next());
}

LogTable LogTable::marginalize_to(const VarSet& keep) const {
  if (!is_subset(keep, vars_)) fail(ErrorKind::InvalidArgument, "marginal scope is not a subset");
  LogTable out(keep, bins_, kNegInf);
  const auto strides = embedded_strides(vars_, keep, bins_);
  {
    Odometer it(rank(), bins_, strides);
    size_t flat = 0;
    do {
      double& m = out.data_[it.other_index()];
      m = std::max(m, data_[flat++]);
    } while (it.next());
  }
  std::vector<double> acc(out.size(), 0.0);
  {
    Odometer it(rank(), bins_, strides);
    size_t flat = 0;
    do {
      const double m = out.data_[it.other_index()];
      const double v = data_[flat++];
      if (m != kNegInf) acc[it.other_index()] += std::exp(v - m);
    } while (it.next());
  }
  for (size_t k = 0; k < out.size(); ++k)
    if (out.data_[k] != kNegInf) out.data_[k] += std::log(acc[k]);
  return out;
}

double LogTable::log_total() const { return log_sum_exp(data_); }

void LogTable::normalize() {
  const double z = log_total();
  if (z == kNegInf || !std::isfinite(z)) fail(ErrorKind::Numeric, "belief has no finite mass (impossible evidence)");
  for (double& v : data_) v -= z;
}

Odometer::Odometer(size_t rank, size_t bins, std::vector<size_t> other_strides)
    : coords_(rank, 0), bins_(bins), strides_(std::move(other_strides)) {}

bool Odometer::next() {
  for (size_t k = coords_.size(); k-- > 0;) {
    if (++coords_[k] < bins_) {
      other_ += strides_[k];
      return true;
    }
    coords_[k] = 0;
    other_ -= strides_[k] * (bins_ - 1);
  }
  return false;
}

}  // namespace seqdmg
