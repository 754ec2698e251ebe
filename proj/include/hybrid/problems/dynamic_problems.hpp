#pragma once

#include <cstdint>
#include <string>

#include "hybrid/core/prior.hpp"
#include "hybrid/core/types.hpp"
#include "hybrid/dyn/integrator.hpp"
#include "json.hpp"

namespace hybrid::problems {

struct DynamicProblem {
  std::string name;
  TrajectoryDataset train, val, test;
  ParametricPrior truth;              // f_k with zero offsets
  dyn::Field f_true;                  // full dynamics f
  dyn::IntegratorCfg train_integrator;  // fixed-step scheme used for training and evaluation
  int window = 40;                    // steps per training window
  int stride = 2;
  nlohmann::json meta = nlohmann::json::object();
};

// `scale` multiplies the trajectory count (at least 4 trajectories are kept).
DynamicProblem sim_lotka_volterra(std::uint64_t seed, double scale = 1.0);
DynamicProblem sim_pendulum(std::uint64_t seed, double scale = 1.0);
DynamicProblem sim_reaction_diffusion(std::uint64_t seed, double scale = 1.0);

// Pendulum with caller-chosen physics, for conservation checks.
DynamicProblem sim_pendulum_with(std::uint64_t seed, double scale, double omega0, double xi);

DynamicProblem make_dynamic_problem(const std::string& name, std::uint64_t seed, double scale);

// Training trajectories make_dynamic_problem(name, seed, scale) yields.
int train_trajectory_count(const std::string& name, double scale);

// Reaction-diffusion truth vector field on an rows x cols periodic grid.
dyn::Field reaction_diffusion_field(int rows, int cols, double spacing, double a, double b, double k);

}  // namespace hybrid::problems
