#include "hybrid/core/metrics.hpp"

#include <cmath>

namespace hybrid {

double mse(const Vector& pred, const Vector& target) {
  if (pred.size() != target.size()) {
    throw ConfigError("prediction length " + std::to_string(pred.size()) + " != target length " +
                      std::to_string(target.size()));
  }
  if (target.size() == 0) throw DataError("mse of empty vectors");
  const double v = (pred - target).squaredNorm() / static_cast<double>(target.size());
  if (!std::isfinite(v)) throw DataError("non-finite mse");
  return v;
}

double eval_d_hat(const HybridModel& model, const Dataset& data) { return mse(model.predict(data.features), data.targets); }

double eval_d_hat(const ResidualModel& model, const Dataset& data) {
  return mse(model.predict(data.features), data.targets);
}

double eval_dk_hat(const ParametricPrior& prior, const ParametricPrior& truth, const Matrix& x) {
  if (prior.form_id() != truth.form_id() || prior.form().input_dim() != truth.form().input_dim() ||
      prior.form().all_known_indices() != truth.form().all_known_indices()) {
    throw ConfigError("cannot compare prior '" + prior.form_id() + "' with '" + truth.form_id() + "'");
  }
  if (x.rows() == 0) throw DataError("no evaluation points");
  const Matrix gap = prior.eval_known(x) - truth.eval_known(x);
  const double v = gap.squaredNorm() / static_cast<double>(gap.size());
  if (!std::isfinite(v)) throw DataError("non-finite prior gap");
  return v;
}

double eval_dk_hat(const ParametricPrior& prior, const ParametricPrior& truth, const Dataset& eval_points) {
  return eval_dk_hat(prior, truth, eval_points.features);
}

double eval_rmae(const Vector& theta_hat, const Vector& theta_star) {
  if (theta_hat.size() != theta_star.size()) throw ConfigError("rmae: parameter vectors differ in length");
  if (theta_star.size() == 0) throw ConfigError("rmae: empty parameter vector");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < theta_star.size(); ++i) {
    if (theta_star(i) == 0.0) throw ConfigError("rmae undefined for a zero true parameter");
    acc += std::abs(theta_hat(i) - theta_star(i)) / std::abs(theta_star(i));
  }
  return 100.0 * acc / static_cast<double>(theta_star.size());
}

}  // namespace hybrid
