#include "kernel.hpp"

#include <algorithm>

namespace seqdmg {

namespace {

// Merges indices 0 and 1 along `axis` of a row-major array with shape `dims`.
void merge_front(std::vector<double>& data, std::vector<size_t>& dims, size_t axis, bool sum) {
  size_t outer = 1, inner = 1;
  for (size_t k = 0; k < axis; ++k) outer *= dims[k];
  for (size_t k = axis + 1; k < dims.size(); ++k) inner *= dims[k];
  const size_t n = dims[axis];
  std::vector<double> out(outer * (n - 1) * inner);
  for (size_t o = 0; o < outer; ++o) {
    const double* src = data.data() + o * n * inner;
    double* dst = out.data() + o * (n - 1) * inner;
    for (size_t i = 0; i < inner; ++i) dst[i] = sum ? log_add(src[i], src[inner + i]) : std::max(src[i], src[inner + i]);
    std::copy(src + 2 * inner, src + n * inner, dst + inner);
  }
  data.swap(out);
  dims[axis] = n - 1;
}

}  // namespace

LocalKernel::LocalKernel(const DamageModel& model, SensorId id, std::optional<int> window)
    : registry_(&model.registry), id_(id), window_(window) {
  const auto& node = model.sensor(id);
  domain_ = node.domain;
  if (window_ && *window_ < 1) fail(ErrorKind::InvalidArgument, "window must be at least 1");
  for (VarId j : domain_) {
    if (std::binary_search(node.owned_priors.begin(), node.owned_priors.end(), j))
      owned_.emplace_back(model.variable(j).prior);
    else
      owned_.emplace_back(std::nullopt);
  }
  const size_t k = domain_.size();
  by_mask_.resize(size_t{1} << k);
  for (size_t mask = 0; mask < by_mask_.size(); ++mask) {
    VarSet active;
    for (size_t a = 0; a < k; ++a)
      if (mask & (size_t{1} << a)) active.push_back(domain_[a]);
    by_mask_[mask] = &registry_->model_for(id_, active);
  }
  table_ = LogTable(domain_, 1, 0.0);
}

void LocalKernel::step(const Eigen::VectorXd& x) {
  if (!x.allFinite()) fail(ErrorKind::Data, "non-finite feature at sensor " + std::to_string(id_));
  const size_t k = domain_.size();
  std::vector<double> dens(by_mask_.size());
  for (size_t mask = 0; mask < dens.size(); ++mask) dens[mask] = by_mask_[mask]->log_density(x);

  const size_t old_bins = table_.bins();
  const size_t bins = old_bins + 1;
  const size_t split = old_bins - 1;  // new "changed at N+1" bin; `bins - 1` is the new "not yet"
  std::vector<size_t> old_stride(k, 1);
  for (size_t a = k; a-- > 1;) old_stride[a - 1] = old_stride[a] * old_bins;

  LogTable next(domain_, bins);
  Odometer it(k, bins, std::vector<size_t>(k, 0));
  size_t flat = 0;
  do {
    const auto& c = it.coords();
    size_t old_index = 0;
    size_t mask = 0;
    double v = 0.0;
    for (size_t a = 0; a < k; ++a) {
      old_index += std::min(c[a], split) * old_stride[a];
      if (c[a] <= split) mask |= size_t{1} << a;
      if (owned_[a]) {
        if (c[a] == split) v += owned_[a]->log_rho();
        else if (c[a] == bins - 1) v += owned_[a]->log_one_minus_rho();
      }
    }
    next[flat++] = table_[old_index] + v + dens[mask];
  } while (it.next());

  ++horizon_;
  if (window_ && bins > static_cast<size_t>(*window_) + 1) {
    std::vector<double> data = std::move(next.data());
    std::vector<size_t> dims(k, bins);
    for (size_t a = 0; a < k; ++a) merge_front(data, dims, a, owned_[a].has_value());
    LogTable merged(domain_, bins - 1);
    merged.data() = std::move(data);
    table_ = std::move(merged);
    merged_ = true;
  } else {
    table_ = std::move(next);
  }
}

}  // namespace seqdmg
