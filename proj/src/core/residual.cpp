#include "hybrid/core/residual.hpp"

#include <algorithm>

namespace hybrid {

ResidualModel::ResidualModel(IndexSet input_filter) : filter_(std::move(input_filter)) {
  std::sort(filter_.begin(), filter_.end());
  filter_.erase(std::unique(filter_.begin(), filter_.end()), filter_.end());
  if (!filter_.empty() && filter_.front() < 0) throw ConfigError("negative index in input filter");
}

bool ResidualModel::reads(int feature) const {
  return !std::binary_search(filter_.begin(), filter_.end(), feature);
}

void ResidualModel::check_dim(const Matrix& x) const {
  if (x.cols() != input_dim_) {
    throw ConfigError(kind() + " residual was fit on " + std::to_string(input_dim_) + " features, got " +
                      std::to_string(x.cols()));
  }
}

Matrix ResidualModel::effective(const Matrix& x) const {
  if (filter_.empty()) return x;
  if (filter_.back() >= x.cols()) throw ConfigError("input filter index out of range");
  Matrix out(x.rows(), x.cols() - static_cast<Eigen::Index>(filter_.size()));
  Eigen::Index c = 0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (reads(static_cast<int>(j))) out.col(c++) = x.col(j);
  }
  return out;
}

void ResidualModel::fit(const Matrix& x, const Vector& y, Validation val) {
  if (x.rows() != y.size()) throw ConfigError("residual fit: rows != targets");
  if (x.rows() < 1) throw DataError("residual fit on empty data");
  input_dim_ = static_cast<int>(x.cols());
  if (val) {
    check_dim(*val.x);
    const Matrix vx = effective(*val.x);
    do_fit(effective(x), y, &vx, val.y);
  } else {
    do_fit(effective(x), y, nullptr, nullptr);
  }
}

void ResidualModel::partial_fit(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) throw ConfigError("residual fit: rows != targets");
  if (!fitted()) input_dim_ = static_cast<int>(x.cols());
  check_dim(x);
  do_partial_fit(effective(x), y);
}

Vector ResidualModel::predict(const Matrix& x) const {
  if (!fitted()) throw ConfigError(kind() + " residual used before fit");
  check_dim(x);
  return do_predict(effective(x));
}

HybridModel::HybridModel(std::optional<ParametricPrior> prior, std::unique_ptr<ResidualModel> residual)
    : prior_(std::move(prior)), residual_(std::move(residual)) {}

HybridModel::HybridModel(const HybridModel& other)
    : prior_(other.prior_), residual_(other.residual_ ? other.residual_->clone() : nullptr) {}

HybridModel& HybridModel::operator=(const HybridModel& other) {
  if (this != &other) {
    prior_ = other.prior_;
    residual_ = other.residual_ ? other.residual_->clone() : nullptr;
  }
  return *this;
}

const ParametricPrior& HybridModel::prior() const {
  if (!prior_) throw ConfigError("hybrid model has no prior");
  return *prior_;
}

ParametricPrior& HybridModel::prior() {
  if (!prior_) throw ConfigError("hybrid model has no prior");
  return *prior_;
}

const ResidualModel& HybridModel::residual() const {
  if (!residual_) throw ConfigError("hybrid model has no residual");
  return *residual_;
}

ResidualModel& HybridModel::residual() {
  if (!residual_) throw ConfigError("hybrid model has no residual");
  return *residual_;
}

Vector HybridModel::predict(const Matrix& x) const {
  Vector out = prior_ ? prior_->predict(x) : Vector::Zero(x.rows());
  if (residual_) out += residual_->predict(x);
  return out;
}

}  // namespace hybrid
