#pragma once

#include "hybrid/core/prior.hpp"
#include "hybrid/core/residual.hpp"
#include "hybrid/core/types.hpp"

namespace hybrid {

// Mean squared error. Throws ConfigError on length mismatch, DataError when empty.
double mse(const Vector& pred, const Vector& target);

double eval_d_hat(const HybridModel& model, const Dataset& data);
double eval_d_hat(const ResidualModel& model, const Dataset& data);

// Mean squared gap between two priors of the same form, offsets excluded,
// averaged over rows of x and over output components.
double eval_dk_hat(const ParametricPrior& prior, const ParametricPrior& truth, const Matrix& x);
double eval_dk_hat(const ParametricPrior& prior, const ParametricPrior& truth, const Dataset& eval_points);

// Mean relative absolute parameter error, in percent.
double eval_rmae(const Vector& theta_hat, const Vector& theta_star);

}  // namespace hybrid
