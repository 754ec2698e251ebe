#pragma once

#include <memory>
#include <string>

#include "hybrid/core/types.hpp"

namespace hybrid::nets {

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual std::string kind() const = 0;
  virtual std::unique_ptr<Optimizer> clone() const = 0;
  // Moments are sized on the first call; the parameter count must stay fixed after that.
  virtual void step(Eigen::Ref<Vector> params, const Vector& grad) = 0;
  virtual void reset() = 0;
  long steps() const { return t_; }
  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }

 protected:
  explicit Optimizer(double lr);
  double lr_;
  long t_ = 0;
};

class Sgd final : public Optimizer {
 public:
  explicit Sgd(double lr) : Optimizer(lr) {}
  std::string kind() const override { return "sgd"; }
  std::unique_ptr<Optimizer> clone() const override { return std::make_unique<Sgd>(*this); }
  void step(Eigen::Ref<Vector> params, const Vector& grad) override;
  void reset() override { t_ = 0; }
};

class Adam final : public Optimizer {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  std::string kind() const override { return "adam"; }
  std::unique_ptr<Optimizer> clone() const override { return std::make_unique<Adam>(*this); }
  void step(Eigen::Ref<Vector> params, const Vector& grad) override;
  void reset() override;

 private:
  double beta1_, beta2_, eps_;
  Vector m_, v_;
};

std::unique_ptr<Optimizer> make_optimizer(const std::string& kind, double lr);

}  // namespace hybrid::nets
