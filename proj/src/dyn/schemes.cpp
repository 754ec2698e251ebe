#include "hybrid/dyn/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hybrid/core/metrics.hpp"
#include "hybrid/core/random.hpp"
#include "hybrid/pd/pd.hpp"

namespace hybrid::dyn {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}  // namespace

TrajMse eval_traj_mse(const Field& f, const TrajectoryDataset& data, const IntegratorCfg& cfg) {
  data.validate();
  cfg.validate();
  const int T = data.horizon();
  const Eigen::Index B = data.size(), d = data.state_dim();
  Matrix x(B, d), obs(B, d);
  for (Eigen::Index i = 0; i < B; ++i) x.row(i) = data.trajectories[static_cast<std::size_t>(i)].row(0);
  double acc = 0.0;
  for (int t = 1; t <= T; ++t) {
    for (int s = 0; s < cfg.substeps; ++s) advance(f, x, cfg.method, cfg.step());
    if (!x.allFinite()) throw DivergenceError("trajectory evaluation diverged", t);
    for (Eigen::Index i = 0; i < B; ++i) obs.row(i) = data.trajectories[static_cast<std::size_t>(i)].row(t);
    acc += (x - obs).squaredNorm();
  }
  const double mse = acc / (static_cast<double>(T) * static_cast<double>(B) * static_cast<double>(d));
  if (!std::isfinite(mse)) throw DivergenceError("trajectory error is not finite", T);
  return {mse, mse > 0.0 ? std::log(mse) : -kInf};
}

TrajMse eval_traj_mse(const HybridDynamics& model, const TrajectoryDataset& data, const IntegratorCfg& cfg) {
  return eval_traj_mse(model.field(), data, cfg);
}

double eval_dk_hat(const ParametricPrior& prior, const ParametricPrior& truth, const TrajectoryDataset& data) {
  return hybrid::eval_dk_hat(prior, truth, data.pooled_states());
}

// ---------------------------------------------------------------------------

NodeTrainer::NodeTrainer(HybridDynamics& model, const WindowSet& windows, const NodeConfig& cfg)
    : model_(model), windows_(windows), cfg_(cfg) {
  if (!windows.source || windows.size() == 0) throw DataError("no training windows");
  if (cfg.batch_size < 1) throw ConfigError("batch size must be positive");
  cfg.integrator.validate();
  prior_opt_ = nets::make_optimizer("adam", cfg.prior_learning_rate);
  net_opt_ = nets::make_optimizer("adam", cfg.learning_rate);
  order_.resize(static_cast<std::size_t>(windows.size()));
}

double NodeTrainer::epoch(bool update_prior, bool update_net) {
  if (!update_prior && !update_net) throw ConfigError("epoch with nothing to update");
  if (update_prior && !model_.prior_enabled()) throw ConfigError("no active prior to update");
  if (update_net && !model_.has_net()) throw ConfigError("no network to update");
  std::iota(order_.begin(), order_.end(), 0);
  Rng rng(derive_seed(cfg_.seed, static_cast<std::uint64_t>(epochs_)));
  std::shuffle(order_.begin(), order_.end(), rng);

  const auto& trajs = windows_.source->trajectories;
  const int L = windows_.length;
  const Eigen::Index d = windows_.source->state_dim();
  std::vector<Matrix> targets(static_cast<std::size_t>(L));
  Matrix x0;
  double total = 0.0;
  int batches = 0;
  for (std::size_t b0 = 0; b0 < order_.size(); b0 += static_cast<std::size_t>(cfg_.batch_size)) {
    const auto nb = static_cast<Eigen::Index>(std::min<std::size_t>(cfg_.batch_size, order_.size() - b0));
    x0.resize(nb, d);
    for (auto& t : targets) t.resize(nb, d);
    for (Eigen::Index i = 0; i < nb; ++i) {
      const Window& w = windows_.windows[static_cast<std::size_t>(order_[b0 + static_cast<std::size_t>(i)])];
      const Matrix& tr = trajs[static_cast<std::size_t>(w.traj)];
      x0.row(i) = tr.row(w.start);
      for (int t = 0; t < L; ++t) targets[static_cast<std::size_t>(t)].row(i) = tr.row(w.start + t + 1);
    }
    RolloutGrad g;
    try {
      g = rollout_loss_grad(model_, x0, targets, cfg_.integrator, update_prior, update_net);
    } catch (const DivergenceError&) {
      throw DivergenceError("training rollout diverged", epochs_);
    }
    if (update_prior) {
      Vector p = model_.prior().packed();
      prior_opt_->step(p, g.prior);
      model_.prior().unpack(p);
    }
    if (update_net) net_opt_->step(model_.net().params(), g.net);
    total += g.loss;
    ++batches;
  }
  ++epochs_;
  return total / batches;
}

// ---------------------------------------------------------------------------

namespace {

class Tracker {
 public:
  Tracker(const TrajectoryDataset* val, const IntegratorCfg& cfg) : val_(val), cfg_(cfg) {}

  void offer(const HybridDynamics& m) {
    if (!val_) {
      best_ = m;
      have_ = true;
      return;
    }
    double v;
    try {
      v = eval_traj_mse(m, *val_, cfg_).mse;
    } catch (const DivergenceError&) {
      v = kInf;
    }
    history_.push_back(v);
    if (!have_ || v < best_val_) {
      best_ = m;
      best_val_ = v;
      have_ = true;
    }
  }

  DynResult result() && { return {std::move(best_), val_ ? best_val_ : kNaN, std::move(history_)}; }

 private:
  const TrajectoryDataset* val_;
  IntegratorCfg cfg_;
  HybridDynamics best_;
  double best_val_ = kInf;
  bool have_ = false;
  std::vector<double> history_;
};

Matrix sample_rows(const Matrix& m, int cap, Rng& rng) {
  if (cap <= 0 || cap >= m.rows()) return m;
  std::vector<int> idx(static_cast<std::size_t>(m.rows()));
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(static_cast<std::size_t>(cap));
  std::sort(idx.begin(), idx.end());
  Matrix out(cap, m.cols());
  for (int i = 0; i < cap; ++i) out.row(i) = m.row(idx[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace

DynResult fit_node(HybridDynamics init, const WindowSet& train, const TrajectoryDataset* val, const DynConfig& cfg,
                   bool update_prior, bool update_net, int epochs) {
  if (epochs < 1) throw ConfigError("NODE fit needs at least one epoch");
  HybridDynamics model = std::move(init);
  NodeTrainer trainer(model, train, cfg.node);
  Tracker tracker(val, cfg.node.integrator);
  for (int e = 0; e < epochs; ++e) {
    trainer.epoch(update_prior, update_net);
    if (val || e + 1 == epochs) tracker.offer(model);
  }
  return std::move(tracker).result();
}

DynResult joint_fit(HybridDynamics init, const WindowSet& train, const TrajectoryDataset* val, const DynConfig& cfg) {
  if (!init.prior_enabled() || !init.has_net()) throw ConfigError("joint scheme needs a prior and a network");
  return fit_node(std::move(init), train, val, cfg, true, true, cfg.epochs);
}

DynResult alternate_fit_dyn(HybridDynamics init, const WindowSet& train, const TrajectoryDataset* val,
                            const DynConfig& cfg, bool init_prior) {
  if (!init.prior_enabled() || !init.has_net()) throw ConfigError("alternate scheme needs a prior and a network");
  if (cfg.epochs < 1) throw ConfigError("alternate scheme needs at least one epoch");
  HybridDynamics model = std::move(init);
  if (init_prior) {
    HybridDynamics prior_only(model.prior(), nullptr);
    DynResult r = fit_node(std::move(prior_only), train, val, cfg, true, false, cfg.init_epochs);
    model.set_prior(r.model.prior());
  }
  NodeTrainer trainer(model, train, cfg.node);
  Tracker tracker(val, cfg.node.integrator);
  for (int e = 0; e < cfg.epochs; ++e) {
    trainer.epoch(false, true);
    trainer.epoch(true, false);
    if (val) tracker.offer(model);
  }
  trainer.epoch(false, true);
  tracker.offer(model);
  return std::move(tracker).result();
}

Matrix pd_refit_prior(HybridDynamics& model, const Matrix& states, const DynConfig& cfg, bool include_prior) {
  Rng rng(derive_seed(cfg.pd_seed, 0));
  const Matrix queries = sample_rows(states, cfg.pd_queries, rng);
  const Matrix background = sample_rows(states, cfg.pd_background, rng);
  const nets::DiffNet& net = model.net();
  const PriorForm& form = model.prior().form();
  const pd::BatchFn fn = [&net](const Matrix& x) { return net.forward(x); };

  Matrix target(queries.rows(), form.output_dim());
  for (int c = 0; c < form.num_channels(); ++c) {
    const IndexSet& known = form.known_indices(c);
    Matrix pdv;
    if (known.empty()) {
      pdv = pd::pd_values(fn, queries.topRows(1), background, known).replicate(queries.rows(), 1);
    } else {
      pdv = pd::pd_values(fn, queries, background, known);
    }
    for (int j = 0; j < form.output_dim(); ++j) {
      if (form.channel_of(j) == c) target.col(j) = pdv.col(j);
    }
  }
  if (include_prior) target += model.prior().eval(queries);
  model.set_prior(schemes::fit_prior_multi(model.prior(), queries, target, cfg.pd_prior));
  model.set_prior_enabled(true);
  return target;
}

DynResult pd_fit_dyn(HybridDynamics init, const WindowSet& train, const TrajectoryDataset* val, const DynConfig& cfg) {
  if (!init.has_prior() || !init.has_net()) throw ConfigError("PD scheme needs a prior and a network");
  if (cfg.pd_block_epochs < 1 || cfg.pd_final_epochs < 1 || cfg.pd_repeats < 0) {
    throw ConfigError("PD scheme epoch counts must be positive");
  }
  HybridDynamics model = std::move(init);
  const Matrix states = train.source->pooled_states();
  Tracker tracker(val, cfg.node.integrator);
  NodeTrainer trainer(model, train, cfg.node);

  model.set_prior_enabled(false);
  for (int e = 0; e < cfg.pd_block_epochs; ++e) trainer.epoch(false, true);
  pd_refit_prior(model, states, cfg, false);

  for (int n = 1; n <= cfg.pd_repeats; ++n) {
    for (int e = 0; e < cfg.pd_block_epochs; ++e) {
      trainer.epoch(false, true);
      if (val) tracker.offer(model);
    }
    pd_refit_prior(model, states, cfg, true);
  }
  for (int e = 0; e < cfg.pd_final_epochs; ++e) {
    trainer.epoch(false, true);
    if (val || e + 1 == cfg.pd_final_epochs) tracker.offer(model);
  }
  return std::move(tracker).result();
}

}  // namespace hybrid::dyn
