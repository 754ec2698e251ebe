#include "hybrid/dyn/dynamics.hpp"

#include <cmath>

namespace hybrid::dyn {

HybridDynamics::HybridDynamics(std::optional<ParametricPrior> prior, std::unique_ptr<nets::DiffNet> net)
    : prior_(std::move(prior)), net_(std::move(net)) {
  if (!prior_ && !net_) throw ConfigError("dynamics need a prior, a network, or both");
  if (prior_ && net_ &&
      (prior_->form().input_dim() != net_->input_dim() || prior_->form().output_dim() != net_->output_dim())) {
    throw ConfigError("prior and network disagree on the state dimension");
  }
  if (prior_ && prior_->form().input_dim() != prior_->form().output_dim()) {
    throw ConfigError("dynamics prior must map states to derivatives of the same dimension");
  }
}

HybridDynamics::HybridDynamics(const HybridDynamics& other)
    : prior_(other.prior_), net_(other.net_ ? other.net_->clone() : nullptr), prior_enabled_(other.prior_enabled_) {}

HybridDynamics& HybridDynamics::operator=(const HybridDynamics& other) {
  if (this != &other) {
    prior_ = other.prior_;
    net_ = other.net_ ? other.net_->clone() : nullptr;
    prior_enabled_ = other.prior_enabled_;
  }
  return *this;
}

int HybridDynamics::state_dim() const { return prior_ ? prior_->form().input_dim() : net_->input_dim(); }

const ParametricPrior& HybridDynamics::prior() const {
  if (!prior_) throw ConfigError("dynamics have no prior");
  return *prior_;
}
ParametricPrior& HybridDynamics::prior() {
  if (!prior_) throw ConfigError("dynamics have no prior");
  return *prior_;
}
const nets::DiffNet& HybridDynamics::net() const {
  if (!net_) throw ConfigError("dynamics have no network");
  return *net_;
}
nets::DiffNet& HybridDynamics::net() {
  if (!net_) throw ConfigError("dynamics have no network");
  return *net_;
}

void HybridDynamics::eval(const Matrix& x, Matrix& dx, Record* rec) const {
  const bool use_prior = prior_enabled();
  if (use_prior) {
    dx = prior_->eval(x);
  } else if (!net_) {
    dx = Matrix::Zero(x.rows(), x.cols());
  }
  if (net_) {
    Matrix y;
    net_->forward(x, y, rec ? &rec->acts : nullptr);
    if (use_prior) {
      dx += y;
    } else {
      dx = std::move(y);
    }
  }
  if (rec) rec->x = x;
}

Matrix HybridDynamics::eval_net(const Matrix& x) const {
  if (!net_) return Matrix::Zero(x.rows(), state_dim());
  return net_->forward(x);
}

Field HybridDynamics::field() const {
  return [this](const Matrix& x, Matrix& dx) { eval(x, dx, nullptr); };
}

void HybridDynamics::vjp(const Record& rec, const Matrix& g, Vector* grad_prior, Vector* grad_net,
                         Matrix& grad_x) const {
  if (prior_enabled()) {
    Vector scratch;
    if (!grad_prior) scratch = Vector::Zero(prior_->num_params());
    prior_->vjp(rec.x, g, grad_prior ? *grad_prior : scratch, &grad_x);
  }
  if (net_) {
    Vector scratch;
    if (!grad_net) scratch = Vector::Zero(net_->num_params());
    net_->backward(rec.x, rec.acts, g, grad_net ? *grad_net : scratch, &grad_x);
  }
}

namespace {

// Per-substep tape: one record for Euler, four for RK4.
struct StepTape {
  HybridDynamics::Record r[4];
};

}  // namespace

double rollout_loss(const HybridDynamics& model, const Matrix& x0, const std::vector<Matrix>& targets,
                    const IntegratorCfg& cfg) {
  cfg.validate();
  const Field f = model.field();
  Matrix x = x0;
  double acc = 0.0;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    for (int s = 0; s < cfg.substeps; ++s) advance(f, x, cfg.method, cfg.step());
    acc += (x - targets[t]).squaredNorm();
  }
  const double n = static_cast<double>(targets.size()) * static_cast<double>(x0.size());
  return acc / n;
}

RolloutGrad rollout_loss_grad(const HybridDynamics& model, const Matrix& x0, const std::vector<Matrix>& targets,
                              const IntegratorCfg& cfg, bool want_prior, bool want_net) {
  cfg.validate();
  if (targets.empty()) throw ConfigError("rollout needs at least one target step");
  const double h = cfg.step();
  const int S = cfg.substeps;
  const std::size_t L = targets.size();
  const double norm = static_cast<double>(L) * static_cast<double>(x0.size());
  std::vector<StepTape> tape(L * static_cast<std::size_t>(S));
  std::vector<Matrix> pred(L);

  RolloutGrad out;
  Matrix x = x0, k1, k2, k3, k4;
  for (std::size_t t = 0; t < L; ++t) {
    for (int s = 0; s < S; ++s) {
      auto& st = tape[t * static_cast<std::size_t>(S) + static_cast<std::size_t>(s)];
      if (cfg.method == Method::kEuler) {
        model.eval(x, k1, &st.r[0]);
        x += h * k1;
      } else {
        model.eval(x, k1, &st.r[0]);
        model.eval(x + 0.5 * h * k1, k2, &st.r[1]);
        model.eval(x + 0.5 * h * k2, k3, &st.r[2]);
        model.eval(x + h * k3, k4, &st.r[3]);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
    }
    if (!x.allFinite()) throw DivergenceError("rollout produced a non-finite state", static_cast<long>(t) + 1);
    out.loss += (x - targets[t]).squaredNorm();
    pred[t] = x;
  }
  out.loss /= norm;
  if (!std::isfinite(out.loss)) throw DivergenceError("non-finite rollout loss", static_cast<long>(L));

  if (want_prior && !model.prior_enabled()) throw ConfigError("prior gradient requested for a disabled prior");
  if (want_prior) out.prior = Vector::Zero(model.prior().num_params());
  if (want_net) out.net = Vector::Zero(model.net().num_params());
  Vector* gp = want_prior ? &out.prior : nullptr;
  Vector* gn = want_net ? &out.net : nullptr;

  Matrix a = Matrix::Zero(x0.rows(), x0.cols());
  Matrix gx;
  for (std::size_t t = L; t-- > 0;) {
    a += (2.0 / norm) * (pred[t] - targets[t]);
    for (int s = S; s-- > 0;) {
      const auto& st = tape[t * static_cast<std::size_t>(S) + static_cast<std::size_t>(s)];
      if (cfg.method == Method::kEuler) {
        gx.setZero(a.rows(), a.cols());
        model.vjp(st.r[0], h * a, gp, gn, gx);
        a += gx;
      } else {
        // x' = x + h/6 (k1 + 2 k2 + 2 k3 + k4), k_i evaluated at stage inputs.
        Matrix g1 = (h / 6.0) * a, g2 = (h / 3.0) * a, g3 = (h / 3.0) * a;
        const Matrix g4 = (h / 6.0) * a;
        gx.setZero(a.rows(), a.cols());
        model.vjp(st.r[3], g4, gp, gn, gx);
        a += gx;
        g3 += h * gx;
        gx.setZero(a.rows(), a.cols());
        model.vjp(st.r[2], g3, gp, gn, gx);
        a += gx;
        g2 += 0.5 * h * gx;
        gx.setZero(a.rows(), a.cols());
        model.vjp(st.r[1], g2, gp, gn, gx);
        a += gx;
        g1 += 0.5 * h * gx;
        gx.setZero(a.rows(), a.cols());
        model.vjp(st.r[0], g1, gp, gn, gx);
        a += gx;
      }
    }
  }
  return out;
}

}  // namespace hybrid::dyn
