#include "hybrid/nets/optim.hpp"

#include <cmath>

namespace hybrid::nets {

Optimizer::Optimizer(double lr) : lr_(lr) {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be positive");
}

void Sgd::step(Eigen::Ref<Vector> params, const Vector& grad) {
  if (grad.size() != params.size()) throw ConfigError("sgd: gradient size mismatch");
  params -= lr_ * grad;
  ++t_;
}

Adam::Adam(double lr, double beta1, double beta2, double eps)
    : Optimizer(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::reset() {
  t_ = 0;
  m_.resize(0);
  v_.resize(0);
}

void Adam::step(Eigen::Ref<Vector> params, const Vector& grad) {
  if (grad.size() != params.size()) throw ConfigError("adam: gradient size mismatch");
  if (m_.size() == 0) {
    m_ = Vector::Zero(params.size());
    v_ = Vector::Zero(params.size());
  } else if (m_.size() != params.size()) {
    throw ConfigError("adam: parameter count changed between steps");
  }
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const double step = lr_ / c1;
  params.array() -= step * m_.array() / ((v_.array() / c2).sqrt() + eps_);
}

std::unique_ptr<Optimizer> make_optimizer(const std::string& kind, double lr) {
  if (kind == "adam") return std::make_unique<Adam>(lr);
  if (kind == "sgd") return std::make_unique<Sgd>(lr);
  throw ConfigError("unknown optimizer '" + kind + "'");
}

}  // namespace hybrid::nets
