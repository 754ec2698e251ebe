#pragma once

#include <string>
#include <vector>

#include "hybrid/core/prior.hpp"
#include "hybrid/core/residual.hpp"
#include "hybrid/core/types.hpp"

namespace hybrid::schemes {

struct PriorFitConfig {
  int epochs = 5000;
  double learning_rate = 0.005;
  std::string optimizer = "adam";
};

// Full-batch gradient fit of h_k + gamma to (x, y) starting from `init`.
// Returns the iterate with the lowest training MSE, the start included.
ParametricPrior fit_prior(ParametricPrior init, const Matrix& x, const Vector& y, const PriorFitConfig& cfg);
ParametricPrior fit_prior(ParametricPrior init, const Dataset& data, const PriorFitConfig& cfg);
// Multi-output variant: y has one column per prior output.
ParametricPrior fit_prior_multi(ParametricPrior init, const Matrix& x, const Matrix& y, const PriorFitConfig& cfg);

struct StaticConfig {
  PriorFitConfig prior;
  int alternate_epochs = 2000;  // N_e
  int repeats = 5;              // N_r
};

struct StaticResult {
  HybridModel model;
  // Validation MSE of `model`; NaN when no validation set was given.
  double val_loss;
  // Validation MSE of every candidate the scheme considered, in order.
  std::vector<double> val_history;
};

// The residual prototype is cloned for every fit, so its configuration
// (including its input filter) carries through.
StaticResult sequential_fit(const ParametricPrior& init, const ResidualModel& proto, const Dataset& train,
                            const Dataset* val, const StaticConfig& cfg);
StaticResult alternate_fit(const ParametricPrior& init, const ResidualModel& proto, const Dataset& train,
                           const Dataset* val, const StaticConfig& cfg);
StaticResult pd_fit(const ParametricPrior& init, const ResidualModel& proto, const Dataset& train, const Dataset* val,
                    const StaticConfig& cfg);
// Data-driven baseline: h_a alone on y.
StaticResult ha_only_fit(const ResidualModel& proto, const Dataset& train, const Dataset* val);
// h_a fit on y - f_k with the true prior held fixed.
StaticResult fk_ha_fit(const ParametricPrior& truth, const ResidualModel& proto, const Dataset& train,
                       const Dataset* val);

}  // namespace hybrid::schemes
