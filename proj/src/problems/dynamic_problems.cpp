#include "hybrid/problems/dynamic_problems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hybrid/core/random.hpp"

namespace hybrid::problems {

namespace {

int scaled_count(int full, double scale) {
  if (!(scale > 0.0)) throw ConfigError("scale must be positive");
  return std::max(4, static_cast<int>(std::lround(full * scale)));
}

// RK4 at dt_sim, observed every `obs_dt`, then a 50/25/25 split in draw order.
void simulate_into(DynamicProblem& p, const dyn::Field& f, const Matrix& x0, double obs_dt, int steps,
                   double dt_sim) {
  const int sub = static_cast<int>(std::lround(obs_dt / dt_sim));
  const dyn::IntegratorCfg gen{dyn::Method::kRk4, obs_dt, sub};
  auto trajs = dyn::by_trajectory(dyn::integrate(f, x0, gen, steps));
  const int n = static_cast<int>(trajs.size());
  const int n_train = n / 2, n_val = n / 4;
  for (int i = 0; i < n; ++i) {
    TrajectoryDataset& dst = i < n_train ? p.train : (i < n_train + n_val ? p.val : p.test);
    dst.trajectories.push_back(std::move(trajs[static_cast<std::size_t>(i)]));
  }
  for (TrajectoryDataset* d : {&p.train, &p.val, &p.test}) {
    d->dt = obs_dt;
    d->validate();
  }
  p.meta["trajectories"] = n;
  p.meta["horizon"] = steps;
  p.meta["dt"] = obs_dt;
  p.meta["dt_sim"] = dt_sim;
}

constexpr double kLvAlpha = 1.0, kLvBeta = 1.0, kLvGamma = 1.0, kLvDelta = 1.0;

}  // namespace

DynamicProblem sim_lotka_volterra(std::uint64_t seed, double scale) {
  const int n = scaled_count(200, scale);
  Rng rng(derive_seed(seed, 0));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix x0(n, 2);
  for (int i = 0; i < n; ++i) {
    // Guard against log(0); the draw is U(0,1) on the population proportions.
    const double a = std::max(u(rng), 1e-12), b = std::max(u(rng), 1e-12);
    x0(i, 0) = std::log(a);
    x0(i, 1) = std::log(b);
  }
  DynamicProblem p;
  p.name = "lotka_volterra";
  p.f_true = [](const Matrix& x, Matrix& dx) {
    dx.resize(x.rows(), 2);
    dx.col(0) = (kLvAlpha - kLvBeta * x.col(1).array().exp()).matrix();
    dx.col(1) = (kLvDelta * x.col(0).array().exp() - kLvGamma).matrix();
  };
  p.truth = ParametricPrior(std::make_shared<LotkaVolterraForm>(), Vector::Constant(1, kLvBeta));
  simulate_into(p, p.f_true, x0, 0.05, 400, 0.001);
  p.train_integrator = {dyn::Method::kEuler, 0.05, 1};
  p.window = 40;
  p.stride = 2;
  return p;
}

DynamicProblem sim_pendulum_with(std::uint64_t seed, double scale, double omega0, double xi) {
  const int n = scaled_count(200, scale);
  Rng rng(derive_seed(seed, 0));
  std::uniform_real_distribution<double> angle(-std::numbers::pi / 2, std::numbers::pi / 2);
  std::uniform_real_distribution<double> speed(0.0, 0.1);
  Matrix x0(n, 2);
  for (int i = 0; i < n; ++i) {
    x0(i, 0) = angle(rng);
    x0(i, 1) = speed(rng);
  }
  const double w2 = omega0 * omega0;
  DynamicProblem p;
  p.name = "pendulum";
  p.f_true = [w2, xi](const Matrix& x, Matrix& dx) {
    dx.resize(x.rows(), 2);
    dx.col(0) = x.col(1);
    dx.col(1) = (-w2 * x.col(0).array().sin() - xi * x.col(1).array()).matrix();
  };
  p.truth = ParametricPrior(std::make_shared<PendulumForm>(), Vector::Constant(1, w2));
  simulate_into(p, p.f_true, x0, 0.05, 200, 0.001);
  p.train_integrator = {dyn::Method::kEuler, 0.05, 1};
  p.window = 40;
  p.stride = 2;
  p.meta["omega0"] = omega0;
  p.meta["xi"] = xi;
  return p;
}

DynamicProblem sim_pendulum(std::uint64_t seed, double scale) {
  Rng rng(derive_seed(seed, 1));
  std::uniform_real_distribution<double> w(0.785, 3.14), damp(0.0, 0.8);
  const double omega0 = w(rng);
  const double xi = damp(rng);
  return sim_pendulum_with(seed, scale, omega0, xi);
}

dyn::Field reaction_diffusion_field(int rows, int cols, double spacing, double a, double b, double k) {
  auto lap = std::make_shared<LaplacianForm>(rows, cols, spacing);
  return [lap, a, b, k](const Matrix& x, Matrix& dx) {
    const int n = lap->cells();
    dx.resize(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const double* u = x.row(r).data();
      const double* v = u + n;
      double* du = dx.row(r).data();
      double* dv = du + n;
      lap->laplacian(u, du);
      lap->laplacian(v, dv);
      for (int c = 0; c < n; ++c) {
        du[c] = a * du[c] + u[c] - u[c] * u[c] * u[c] - k - v[c];
        dv[c] = b * dv[c] + u[c] - v[c];
      }
    }
  };
}

DynamicProblem sim_reaction_diffusion(std::uint64_t seed, double scale) {
  constexpr int R = 32, C = 32;
  constexpr double a = 1e-3, b = 5e-3, k = 5e-3;
  const double spacing = 2.0 / R;
  const int n = scaled_count(1920, scale);
  Rng rng(derive_seed(seed, 0));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix x0(n, 2 * R * C);
  for (Eigen::Index i = 0; i < x0.size(); ++i) x0.data()[i] = u(rng);
  DynamicProblem p;
  p.name = "reaction_diffusion";
  p.f_true = reaction_diffusion_field(R, C, spacing, a, b, k);
  Vector theta(2);
  theta << a, b;
  p.truth = ParametricPrior(std::make_shared<LaplacianForm>(R, C, spacing), theta);
  for (TrajectoryDataset* d : {&p.train, &p.val, &p.test}) d->grid_shape = std::make_pair(R, C);
  simulate_into(p, p.f_true, x0, 0.01, 245, 0.001);
  p.train_integrator = {dyn::Method::kEuler, 0.01, 1};
  p.window = 50;
  p.stride = 20;
  return p;
}

int train_trajectory_count(const std::string& name, double scale) {
  if (name == "lotka_volterra" || name == "pendulum") return scaled_count(200, scale) / 2;
  if (name == "reaction_diffusion") return scaled_count(1920, scale) / 2;
  throw ConfigError("unknown dynamic problem '" + name + "'");
}

DynamicProblem make_dynamic_problem(const std::string& name, std::uint64_t seed, double scale) {
  if (name == "lotka_volterra") return sim_lotka_volterra(seed, scale);
  if (name == "pendulum") return sim_pendulum(seed, scale);
  if (name == "reaction_diffusion") return sim_reaction_diffusion(seed, scale);
  throw ConfigError("unknown dynamic problem '" + name + "'");
}

}  // namespace hybrid::problems
