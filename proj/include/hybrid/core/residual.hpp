#pragma once

#include <memory>
#include <string>

#include "hybrid/core/prior.hpp"
#include "hybrid/core/types.hpp"

namespace hybrid {

// Optional held-out set used for best-epoch selection.
struct Validation {
  const Matrix* x = nullptr;
  const Vector* y = nullptr;

  explicit operator bool() const { return x != nullptr && y != nullptr; }
};

// Learned residual h_a. Columns listed in the input filter are dropped before
// the underlying learner ever sees the data.
class ResidualModel {
 public:
  explicit ResidualModel(IndexSet input_filter = {});
  virtual ~ResidualModel() = default;

  virtual std::string kind() const = 0;
  virtual bool differentiable() const { return false; }
  virtual std::unique_ptr<ResidualModel> clone() const = 0;

  // Fresh fit. When `val` is set, iterative learners keep the epoch with the
  // lowest validation MSE.
  void fit(const Matrix& x, const Vector& y, Validation val = {});
  // One unit of further training: a single epoch for nets, a full refit for trees.
  void partial_fit(const Matrix& x, const Vector& y);
  Vector predict(const Matrix& x) const;

  const IndexSet& input_filter() const { return filter_; }
  bool reads(int feature) const;
  bool fitted() const { return input_dim_ >= 0; }
  int input_dim() const { return input_dim_; }

 protected:
  virtual void do_fit(const Matrix& x, const Vector& y, const Matrix* val_x, const Vector* val_y) = 0;
  virtual void do_partial_fit(const Matrix& x, const Vector& y) { do_fit(x, y, nullptr, nullptr); }
  virtual Vector do_predict(const Matrix& x) const = 0;

 private:
  Matrix effective(const Matrix& x) const;
  void check_dim(const Matrix& x) const;

  IndexSet filter_;
  int input_dim_ = -1;
};

// h_a == 0. Used for prior-only baselines and zero-capacity checks.
class ZeroResidual final : public ResidualModel {
 public:
  using ResidualModel::ResidualModel;
  std::string kind() const override { return "zero"; }
  std::unique_ptr<ResidualModel> clone() const override { return std::make_unique<ZeroResidual>(*this); }

 protected:
  void do_fit(const Matrix&, const Vector&, const Matrix*, const Vector*) override {}
  Vector do_predict(const Matrix& x) const override { return Vector::Zero(x.rows()); }
};

// h(x) = h_k(x_k) + gamma + h_a(x). Either part may be absent.
class HybridModel {
 public:
  HybridModel() = default;
  HybridModel(std::optional<ParametricPrior> prior, std::unique_ptr<ResidualModel> residual);
  HybridModel(const HybridModel& other);
  HybridModel& operator=(const HybridModel& other);
  HybridModel(HybridModel&&) noexcept = default;
  HybridModel& operator=(HybridModel&&) noexcept = default;

  bool has_prior() const { return prior_.has_value(); }
  bool has_residual() const { return residual_ != nullptr; }
  const ParametricPrior& prior() const;
  ParametricPrior& prior();
  const ResidualModel& residual() const;
  ResidualModel& residual();
  void set_prior(ParametricPrior prior) { prior_ = std::move(prior); }
  void set_residual(std::unique_ptr<ResidualModel> residual) { residual_ = std::move(residual); }

  Vector predict(const Matrix& x) const;

 private:
  std::optional<ParametricPrior> prior_;
  std::unique_ptr<ResidualModel> residual_;
};

}  // namespace hybrid
