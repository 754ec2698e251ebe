#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "hybrid/core/prior.hpp"
#include "hybrid/core/types.hpp"
#include "json.hpp"

namespace hybrid::problems {

struct Sizes {
  int train = 300;
  int val = 300;
  int test = 600;
};

struct StaticProblem {
  std::string name;
  Dataset train, val, test;
  ParametricPrior truth;  // f_k with zero offset
  // Noiseless f(x) on the (scaled) features the datasets hold.
  std::function<Vector(const Matrix&)> f_true;
  nlohmann::json meta = nlohmann::json::object();

  // Fresh prior of the same form with standard-normal parameters.
  ParametricPrior random_prior(std::uint64_t seed) const;
};

struct FriedmanOptions {
  Sizes sizes;
  std::optional<Vector> theta;  // 6 values; drawn per seed when absent
  double noise_sd = 1.0;
};

// Standard coefficients scaled by independent U(0.5, 1.5) factors.
Vector draw_friedman_theta(std::uint64_t seed);

StaticProblem gen_friedman(std::uint64_t seed, const FriedmanOptions& opt = {});
StaticProblem gen_corr_friedman(std::uint64_t seed, const FriedmanOptions& opt = {});

struct LinearOptions {
  Sizes sizes{50, 50, 600};
  double noise_sd = 0.5;
};

StaticProblem gen_corr_linear(std::uint64_t seed, const LinearOptions& opt = {});
StaticProblem gen_overlapping(std::uint64_t seed, const LinearOptions& opt = {});

// Covariance of the correlated Friedman inputs: variance 0.75 and +-0.3
// off-diagonal entries. Tries independent signs first; falls back to a
// rank-one sign pattern s_i * s_j, which is always positive definite.
Matrix corr_friedman_covariance(std::uint64_t seed, int dim, int max_attempts, bool* factorized = nullptr);

// Draws from N(mean, cov) through a Cholesky factor; throws DataError when
// cov is not positive definite.
Matrix sample_mvn(const Vector& mean, const Matrix& cov, int n, std::uint64_t seed);

// Split sizes used when a problem is generated without explicit sizes.
Sizes default_sizes(const std::string& name);

StaticProblem make_static_problem(const std::string& name, std::uint64_t seed, const Sizes& sizes);

}  // namespace hybrid::problems
