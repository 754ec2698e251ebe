#include "hybrid/dyn/integrator.hpp"

#include <cmath>

namespace hybrid::dyn {

Method parse_method(const std::string& name) {
  if (name == "euler") return Method::kEuler;
  if (name == "rk4") return Method::kRk4;
  throw ConfigError("unknown integrator '" + name + "'");
}

std::string to_string(Method m) { return m == Method::kEuler ? "euler" : "rk4"; }

void IntegratorCfg::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("integrator dt must be positive");
  if (substeps < 1) throw ConfigError("integrator substeps must be >= 1");
}

void advance(const Field& f, Matrix& x, Method method, double h) {
  if (method == Method::kEuler) {
    Matrix k;
    f(x, k);
    x += h * k;
    return;
  }
  Matrix k1, k2, k3, k4;
  f(x, k1);
  f(x + 0.5 * h * k1, k2);
  f(x + 0.5 * h * k2, k3);
  f(x + h * k3, k4);
  x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

std::vector<Matrix> integrate(const Field& f, const Matrix& x0, const IntegratorCfg& cfg, int n_steps) {
  cfg.validate();
  if (n_steps < 0) throw ConfigError("negative step count");
  if (!x0.allFinite()) throw DivergenceError("non-finite initial state", 0);
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(n_steps) + 1);
  out.push_back(x0);
  Matrix x = x0;
  const double h = cfg.step();
  for (int n = 1; n <= n_steps; ++n) {
    for (int s = 0; s < cfg.substeps; ++s) advance(f, x, cfg.method, h);
    if (!x.allFinite()) throw DivergenceError("integration produced a non-finite state", n);
    out.push_back(x);
  }
  return out;
}

std::vector<Matrix> by_trajectory(const std::vector<Matrix>& states) {
  if (states.empty()) return {};
  const Eigen::Index B = states.front().rows(), d = states.front().cols();
  std::vector<Matrix> out(static_cast<std::size_t>(B), Matrix(static_cast<Eigen::Index>(states.size()), d));
  for (std::size_t t = 0; t < states.size(); ++t) {
    for (Eigen::Index i = 0; i < B; ++i) out[static_cast<std::size_t>(i)].row(static_cast<Eigen::Index>(t)) = states[t].row(i);
  }
  return out;
}

}  // namespace hybrid::dyn
