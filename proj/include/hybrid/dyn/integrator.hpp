#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hybrid/core/types.hpp"

namespace hybrid::dyn {

enum class Method { kEuler, kRk4 };

Method parse_method(const std::string& name);
std::string to_string(Method m);

// `dt` is the observation interval; each interval is split into `substeps`
// fixed steps of size dt / substeps.
struct IntegratorCfg {
  Method method = Method::kEuler;
  double dt = 0.05;
  int substeps = 1;

  double step() const { return dt / substeps; }
  void validate() const;
};

// Batched vector field: rows of x are states, dx receives their derivatives.
using Field = std::function<void(const Matrix& x, Matrix& dx)>;

// One fixed step of size h applied to every row of x.
void advance(const Field& f, Matrix& x, Method method, double h);

// States at observation times 0..n_steps for a batch of initial states.
// Throws DivergenceError with the observation index when a state turns
// non-finite.
std::vector<Matrix> integrate(const Field& f, const Matrix& x0, const IntegratorCfg& cfg, int n_steps);

// Trajectory i as a (n_steps+1) x d matrix, from the per-time batches above.
std::vector<Matrix> by_trajectory(const std::vector<Matrix>& states);

}  // namespace hybrid::dyn
