#include "hybrid/schemes/static.hpp"

#include <cmath>
#include <limits>

#include "hybrid/core/metrics.hpp"
#include "hybrid/nets/optim.hpp"
#include "hybrid/pd/pd.hpp"

namespace hybrid::schemes {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double prior_loss_grad(const ParametricPrior& prior, const Matrix& x, const Matrix& y, Vector& grad) {
  const Matrix diff = prior.eval(x) - y;
  const double n = static_cast<double>(diff.size());
  const double loss = diff.squaredNorm() / n;
  grad = Vector::Zero(prior.num_params());
  if (!std::isfinite(loss)) return loss;
  prior.vjp(x, (2.0 / n) * diff, grad, nullptr);
  return loss;
}

double prior_loss_grad(const ParametricPrior& prior, const Matrix& x, const Vector& y, Vector& grad) {
  return prior_loss_grad(prior, x, Matrix(y), grad);
}

void check_single_output(const ParametricPrior& prior) {
  if (prior.form().output_dim() != 1) throw ConfigError("static schemes need a single-output prior");
}

Validation residual_val(const Dataset* val, const ParametricPrior* prior, Vector& buffer) {
  if (!val) return {};
  buffer = prior ? Vector(val->targets - prior->predict(val->features)) : val->targets;
  return {&val->features, &buffer};
}

std::unique_ptr<ResidualModel> fit_residual(const ResidualModel& proto, const Dataset& train, const Dataset* val,
                                            const ParametricPrior* prior) {
  auto model = proto.clone();
  const Vector r = prior ? Vector(train.targets - prior->predict(train.features)) : train.targets;
  Vector vbuf;
  model->fit(train.features, r, residual_val(val, prior, vbuf));
  return model;
}

// Keeps the candidate with the lowest validation loss.
class Selector {
 public:
  explicit Selector(const Dataset* val) : val_(val) {}

  void offer(const HybridModel& m) {
    if (!val_) {
      best_ = m;
      have_ = true;
      return;
    }
    const double v = eval_d_hat(m, *val_);
    history_.push_back(v);
    if (!have_ || v < best_val_) {
      best_ = m;
      best_val_ = v;
      have_ = true;
    }
  }

  StaticResult result() && { return {std::move(best_), val_ ? best_val_ : kNaN, std::move(history_)}; }

 private:
  const Dataset* val_;
  HybridModel best_;
  double best_val_ = kNaN;
  bool have_ = false;
  std::vector<double> history_;
};

}  // namespace

ParametricPrior fit_prior_multi(ParametricPrior init, const Matrix& x, const Matrix& y, const PriorFitConfig& cfg) {
  if (cfg.epochs < 0) throw ConfigError("prior fit epochs must be non-negative");
  if (x.rows() != y.rows() || y.rows() == 0) throw ConfigError("prior fit: rows != targets");
  if (y.cols() != init.form().output_dim()) throw ConfigError("prior fit: target width != prior outputs");
  auto opt = nets::make_optimizer(cfg.optimizer, cfg.learning_rate);
  ParametricPrior cur = init;
  Vector grad;
  double best_loss = prior_loss_grad(cur, x, y, grad);
  if (!std::isfinite(best_loss)) throw DivergenceError("prior loss non-finite at initialisation", 0);
  Vector best = cur.packed();
  Vector p = best;
  for (int e = 0; e < cfg.epochs; ++e) {
    opt->step(p, grad);
    cur.unpack(p);
    const double loss = prior_loss_grad(cur, x, y, grad);
    if (!std::isfinite(loss)) throw DivergenceError("prior fit diverged", e + 1);
    if (loss < best_loss) {
      best_loss = loss;
      best = p;
    }
  }
  cur.unpack(best);
  return cur;
}

ParametricPrior fit_prior(ParametricPrior init, const Matrix& x, const Vector& y, const PriorFitConfig& cfg) {
  check_single_output(init);
  return fit_prior_multi(std::move(init), x, Matrix(y), cfg);
}

ParametricPrior fit_prior(ParametricPrior init, const Dataset& data, const PriorFitConfig& cfg) {
  return fit_prior(std::move(init), data.features, data.targets, cfg);
}

StaticResult sequential_fit(const ParametricPrior& init, const ResidualModel& proto, const Dataset& train,
                            const Dataset* val, const StaticConfig& cfg) {
  const ParametricPrior prior = fit_prior(init, train, cfg.prior);
  Selector sel(val);
  sel.offer(HybridModel(prior, fit_residual(proto, train, val, &prior)));
  return std::move(sel).result();
}

StaticResult alternate_fit(const ParametricPrior& init, const ResidualModel& proto, const Dataset& train,
                           const Dataset* val, const StaticConfig& cfg) {
  if (cfg.alternate_epochs < 1) throw ConfigError("alternate scheme needs at least one epoch");
  ParametricPrior prior = fit_prior(init, train, cfg.prior);
  auto opt = nets::make_optimizer(cfg.prior.optimizer, cfg.prior.learning_rate);
  auto residual = proto.clone();
  const Matrix& x = train.features;
  const Vector& y = train.targets;
  Selector sel(val);
  Vector grad;
  for (int e = 0; e < cfg.alternate_epochs; ++e) {
    residual->partial_fit(x, y - prior.predict(x));
    const Vector target = y - residual->predict(x);
    const double loss = prior_loss_grad(prior, x, target, grad);
    if (!std::isfinite(loss)) throw DivergenceError("alternate scheme diverged", e);
    Vector p = prior.packed();
    opt->step(p, grad);
    prior.unpack(p);
    if (val) sel.offer(HybridModel(prior, residual->clone()));
  }
  residual->partial_fit(x, y - prior.predict(x));
  sel.offer(HybridModel(prior, std::move(residual)));
  return std::move(sel).result();
}

StaticResult pd_fit(const ParametricPrior& init, const ResidualModel& proto, const Dataset& train, const Dataset* val,
                    const StaticConfig& cfg) {
  if (cfg.repeats < 0) throw ConfigError("pd scheme repeats must be non-negative");
  pd::require_reads(proto, train.known);
  Selector sel(val);
  auto residual = fit_residual(proto, train, val, nullptr);
  ParametricPrior prior = fit_prior(init, pd::pd_dataset(*residual, train), cfg.prior);
  for (int n = 1; n <= cfg.repeats; ++n) {
    residual = fit_residual(proto, train, val, &prior);
    sel.offer(HybridModel(prior, residual->clone()));
    Dataset proxy = pd::pd_dataset(*residual, train);
    proxy.targets += prior.predict(train.features);
    prior = fit_prior(prior, proxy, cfg.prior);
  }
  sel.offer(HybridModel(prior, fit_residual(proto, train, val, &prior)));
  return std::move(sel).result();
}

StaticResult ha_only_fit(const ResidualModel& proto, const Dataset& train, const Dataset* val) {
  Selector sel(val);
  sel.offer(HybridModel(std::nullopt, fit_residual(proto, train, val, nullptr)));
  return std::move(sel).result();
}

StaticResult fk_ha_fit(const ParametricPrior& truth, const ResidualModel& proto, const Dataset& train,
                       const Dataset* val) {
  Selector sel(val);
  sel.offer(HybridModel(truth, fit_residual(proto, train, val, &truth)));
  return std::move(sel).result();
}

}  // namespace hybrid::schemes
