#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "hybrid/core/prior.hpp"
#include "hybrid/dyn/integrator.hpp"
#include "hybrid/nets/net.hpp"

namespace hybrid::dyn {

// dx/dt = h_k(x) + gamma + h_a(x); either term may be absent.
class HybridDynamics {
 public:
  // What the backward pass needs from one field evaluation.
  struct Record {
    Matrix x;
    nets::Activations acts;
  };

  HybridDynamics() = default;
  HybridDynamics(std::optional<ParametricPrior> prior, std::unique_ptr<nets::DiffNet> net);
  HybridDynamics(const HybridDynamics& other);
  HybridDynamics& operator=(const HybridDynamics& other);
  HybridDynamics(HybridDynamics&&) noexcept = default;
  HybridDynamics& operator=(HybridDynamics&&) noexcept = default;

  int state_dim() const;
  bool has_prior() const { return prior_.has_value(); }
  bool has_net() const { return net_ != nullptr; }
  const ParametricPrior& prior() const;
  ParametricPrior& prior();
  const nets::DiffNet& net() const;
  nets::DiffNet& net();
  void set_prior(ParametricPrior p) { prior_ = std::move(p); }
  // A disabled prior contributes nothing to eval() and receives no gradient.
  bool prior_enabled() const { return prior_.has_value() && prior_enabled_; }
  void set_prior_enabled(bool on) { prior_enabled_ = on; }

  void eval(const Matrix& x, Matrix& dx, Record* rec) const;
  // h_a alone (zeros without a net).
  Matrix eval_net(const Matrix& x) const;
  Field field() const;

  // Accumulates parameter gradients of <g, f(x)> into the requested groups
  // (null skips a group) and the state gradient into grad_x.
  void vjp(const Record& rec, const Matrix& g, Vector* grad_prior, Vector* grad_net, Matrix& grad_x) const;

 private:
  std::optional<ParametricPrior> prior_;
  std::unique_ptr<nets::DiffNet> net_;
  bool prior_enabled_ = true;
};

struct RolloutGrad {
  double loss = 0.0;
  Vector prior;  // d loss / d prior.packed()
  Vector net;    // d loss / d net params
};

// Loss of a batch of windows: rollout from x0 and compare with targets[t] at
// observation t + 1. Mean over steps, rows and state components. Gradients
// by backpropagation through the unrolled fixed-step integrator.
RolloutGrad rollout_loss_grad(const HybridDynamics& model, const Matrix& x0, const std::vector<Matrix>& targets,
                              const IntegratorCfg& cfg, bool want_prior, bool want_net);

// Loss only.
double rollout_loss(const HybridDynamics& model, const Matrix& x0, const std::vector<Matrix>& targets,
                    const IntegratorCfg& cfg);

}  // namespace hybrid::dyn
