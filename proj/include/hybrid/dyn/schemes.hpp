#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hybrid/dyn/dynamics.hpp"
#include "hybrid/nets/optim.hpp"
#include "hybrid/schemes/static.hpp"

namespace hybrid::dyn {

struct TrajMse {
  double mse;
  double log_mse;
};

// Integrates every trajectory from its first state over the full horizon with
// `cfg` and returns the mean squared state error over t = 1..T, trajectories
// and components. Divergence propagates as DivergenceError.
TrajMse eval_traj_mse(const Field& f, const TrajectoryDataset& data, const IntegratorCfg& cfg);
TrajMse eval_traj_mse(const HybridDynamics& model, const TrajectoryDataset& data, const IntegratorCfg& cfg);

// Prior gap with offsets excluded, averaged over every observed state.
double eval_dk_hat(const ParametricPrior& prior, const ParametricPrior& truth, const TrajectoryDataset& data);

struct NodeConfig {
  IntegratorCfg integrator;
  int batch_size = 32;
  double learning_rate = 5e-4;        // network
  double prior_learning_rate = 5e-4;  // (theta_k, gamma)
  std::uint64_t seed = 0;             // batch shuffling
};

// Mini-batch BPTT over training windows with one persistent Adam state per
// parameter group.
class NodeTrainer {
 public:
  NodeTrainer(HybridDynamics& model, const WindowSet& windows, const NodeConfig& cfg);

  // One pass over all windows, stepping the selected groups. Returns the mean
  // batch loss.
  double epoch(bool update_prior, bool update_net);
  long epochs_run() const { return epochs_; }

 private:
  HybridDynamics& model_;
  const WindowSet& windows_;
  NodeConfig cfg_;
  std::unique_ptr<nets::Optimizer> prior_opt_;
  std::unique_ptr<nets::Optimizer> net_opt_;
  std::vector<int> order_;
  long epochs_ = 0;
};

struct DynConfig {
  NodeConfig node;
  int epochs = 500;            // joint / alternate / data-driven
  int init_epochs = 500;       // prior-only trajectory fit for alternate with init
  int pd_block_epochs = 50;    // each h_a fit inside the PD scheme
  int pd_repeats = 9;          // N_r: blocks after the first
  int pd_final_epochs = 150;   // last h_a fit
  schemes::PriorFitConfig pd_prior{2000, 0.01, "adam"};
  int pd_queries = 1000;       // states used as PD query points (0: all)
  int pd_background = 200;     // states used as PD background (0: all)
  std::uint64_t pd_seed = 0;
};

struct DynResult {
  HybridDynamics model;
  double val_loss;                  // NaN without validation data
  std::vector<double> val_history;  // one entry per recorded epoch
};

// `val` drives best-epoch selection through eval_traj_mse with the training
// integrator. A diverging validation rollout counts as +inf.
DynResult fit_node(HybridDynamics init, const WindowSet& train, const TrajectoryDataset* val, const DynConfig& cfg,
                   bool update_prior, bool update_net, int epochs);
DynResult joint_fit(HybridDynamics init, const WindowSet& train, const TrajectoryDataset* val, const DynConfig& cfg);
DynResult alternate_fit_dyn(HybridDynamics init, const WindowSet& train, const TrajectoryDataset* val,
                            const DynConfig& cfg, bool init_prior);
DynResult pd_fit_dyn(HybridDynamics init, const WindowSet& train, const TrajectoryDataset* val, const DynConfig& cfg);

// Fits the prior of `model` so that it matches h_k + gamma + PD(h_a) at
// sampled states, per channel. The network is untouched. Returns the proxy
// targets (one row per query state).
Matrix pd_refit_prior(HybridDynamics& model, const Matrix& states, const DynConfig& cfg, bool include_prior);

}  // namespace hybrid::dyn
