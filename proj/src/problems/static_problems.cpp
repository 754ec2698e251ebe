#include "hybrid/problems/static_problems.hpp"

#include <cmath>
#include <numbers>

#include "hybrid/core/random.hpp"

namespace hybrid::problems {

namespace {

enum Stream : std::uint64_t { kTheta = 0, kVal = 1, kTest = 2, kTrain = 3, kCov = 4 };

Matrix uniform01(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
  return x;
}

Vector gaussian(int n, double sd, std::uint64_t seed) {
  Vector e = Vector::Zero(n);
  if (sd == 0.0) return e;
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, sd);
  for (Eigen::Index i = 0; i < n; ++i) e(i) = g(rng);
  return e;
}

void check_sizes(const Sizes& s) {
  if (s.train < 1 || s.val < 1 || s.test < 1) throw ConfigError("split sizes must be >= 1");
}

Vector friedman_f(const Matrix& x, const Vector& t) {
  Vector y(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    y(i) = t(0) * std::sin(t(1) * x(i, 0) * x(i, 1)) + t(2) * (x(i, 2) - t(3)) * (x(i, 2) - t(3)) +
           t(4) * x(i, 3) + t(5) * x(i, 4);
  }
  return y;
}

// Splits are drawn from independent streams so the validation and test sets
// do not depend on the training size.
template <class Draw>
void fill_splits(StaticProblem& p, std::uint64_t seed, const Sizes& s, const IndexSet& known, Draw draw) {
  const struct {
    Dataset* d;
    int n;
    Stream stream;
    Split split;
  } parts[] = {{&p.train, s.train, kTrain, Split::kTrain}, {&p.val, s.val, kVal, Split::kVal},
               {&p.test, s.test, kTest, Split::kTest}};
  for (const auto& part : parts) {
    const std::uint64_t sub = derive_seed(seed, part.stream);
    part.d->features = draw(part.n, derive_seed(sub, 0));
    part.d->targets.resize(part.n);
    part.d->known = known;
    part.d->split = part.split;
  }
}

void set_targets(StaticProblem& p, std::uint64_t seed, double noise_sd) {
  const struct {
    Dataset* d;
    Stream stream;
  } parts[] = {{&p.train, kTrain}, {&p.val, kVal}, {&p.test, kTest}};
  for (const auto& part : parts) {
    const std::uint64_t sub = derive_seed(seed, part.stream);
    part.d->targets = p.f_true(part.d->features) + gaussian(part.d->size(), noise_sd, derive_seed(sub, 1));
    part.d->validate();
  }
}

void scale_by_train_maxabs(StaticProblem& p) {
  const Eigen::RowVectorXd m = p.train.features.cwiseAbs().colwise().maxCoeff();
  for (Eigen::Index j = 0; j < m.size(); ++j) {
    if (!(m(j) > 0.0)) throw DataError("feature " + std::to_string(j) + " is identically zero");
  }
  for (Dataset* d : {&p.train, &p.val, &p.test}) d->features = d->features.array().rowwise() / m.array();
  p.meta["feature_scale"] = std::vector<double>(m.data(), m.data() + m.size());
}

}  // namespace

ParametricPrior StaticProblem::random_prior(std::uint64_t seed) const {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Vector theta(truth.theta().size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = g(rng);
  Vector gamma(truth.gamma().size());
  for (Eigen::Index i = 0; i < gamma.size(); ++i) gamma(i) = g(rng);
  return {truth.form_ptr(), theta, gamma};
}

Vector draw_friedman_theta(std::uint64_t seed) {
  const double base[6] = {10.0, std::numbers::pi, 20.0, 0.5, 10.0, 5.0};
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  Vector t(6);
  for (int i = 0; i < 6; ++i) t(i) = base[i] * u(rng);
  return t;
}

Matrix sample_mvn(const Vector& mean, const Matrix& cov, int n, std::uint64_t seed) {
  const Eigen::MatrixXd c = cov;
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) throw DataError("covariance is not positive definite");
  const Eigen::MatrixXd L = llt.matrixL();
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix z(n, mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = g(rng);
  Matrix x = z * L.transpose();
  x.rowwise() += mean.transpose();
  return x;
}

Matrix corr_friedman_covariance(std::uint64_t seed, int dim, int max_attempts, bool* factorized) {
  Matrix cov(dim, dim);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    std::bernoulli_distribution coin(0.5);
    cov.setConstant(0.0);
    for (int i = 0; i < dim; ++i) {
      cov(i, i) = 0.75;
      for (int j = i + 1; j < dim; ++j) cov(i, j) = cov(j, i) = coin(rng) ? 0.3 : -0.3;
    }
    if (Eigen::LLT<Eigen::MatrixXd>(Eigen::MatrixXd(cov)).info() == Eigen::Success) {
      if (factorized) *factorized = false;
      return cov;
    }
  }
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(max_attempts)));
  std::bernoulli_distribution coin(0.5);
  Vector s(dim);
  for (int i = 0; i < dim; ++i) s(i) = coin(rng) ? 1.0 : -1.0;
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) cov(i, j) = i == j ? 0.75 : 0.3 * s(i) * s(j);
  }
  if (factorized) *factorized = true;
  return cov;
}

StaticProblem gen_friedman(std::uint64_t seed, const FriedmanOptions& opt) {
  check_sizes(opt.sizes);
  const Vector theta = opt.theta ? *opt.theta : draw_friedman_theta(derive_seed(seed, kTheta));
  if (theta.size() != 6) throw ConfigError("friedman needs 6 coefficients");
  StaticProblem p;
  p.name = "friedman";
  auto form = std::make_shared<FriedmanSineForm>(10);
  p.truth = ParametricPrior(form, theta.head(2));
  p.f_true = [theta](const Matrix& x) { return friedman_f(x, theta); };
  fill_splits(p, seed, opt.sizes, {0, 1}, [](int n, std::uint64_t s) { return uniform01(n, 10, s); });
  set_targets(p, seed, opt.noise_sd);
  p.meta["theta"] = std::vector<double>(theta.data(), theta.data() + 6);
  return p;
}

StaticProblem gen_corr_friedman(std::uint64_t seed, const FriedmanOptions& opt) {
  check_sizes(opt.sizes);
  const Vector theta = opt.theta ? *opt.theta : draw_friedman_theta(derive_seed(seed, kTheta));
  if (theta.size() != 6) throw ConfigError("friedman needs 6 coefficients");
  bool factorized = false;
  const Matrix cov = corr_friedman_covariance(derive_seed(seed, kCov), 10, 64, &factorized);
  const Vector mean = Vector::Constant(10, 0.5);
  StaticProblem p;
  p.name = "corr_friedman";
  auto form = std::make_shared<FriedmanSineForm>(10);
  p.truth = ParametricPrior(form, theta.head(2));
  fill_splits(p, seed, opt.sizes, {0, 1},
              [&](int n, std::uint64_t s) { return sample_mvn(mean, cov, n, s); });
  // The response is defined on the raw inputs; the datasets hold scaled ones,
  // so f_true undoes the scaling before evaluating.
  scale_by_train_maxabs(p);
  const auto sc = p.meta["feature_scale"].get<std::vector<double>>();
  const Eigen::RowVectorXd scale = Eigen::Map<const Eigen::RowVectorXd>(sc.data(), 10);
  p.f_true = [theta, scale](const Matrix& x) {
    const Matrix raw = x.array().rowwise() * scale.array();
    return friedman_f(raw, theta);
  };
  // The known term reads scaled x0, x1: theta1 * x0 * x1 in raw units is
  // (theta1 * s0 * s1) * x0' * x1' on scaled inputs.
  Vector kt = theta.head(2);
  kt(1) = theta(1) * scale(0) * scale(1);
  p.truth = ParametricPrior(form, kt);
  set_targets(p, seed, opt.noise_sd);
  p.meta["theta"] = std::vector<double>(theta.data(), theta.data() + 6);
  p.meta["factorized_signs"] = factorized;
  return p;
}

namespace {

Matrix corr_linear_inputs(int n, std::uint64_t s) {
  Matrix cov(2, 2);
  cov << 2.0, 2.25, 2.25, 3.0;
  return sample_mvn(Vector::Zero(2), cov, n, s);
}

}  // namespace

StaticProblem gen_corr_linear(std::uint64_t seed, const LinearOptions& opt) {
  check_sizes(opt.sizes);
  StaticProblem p;
  p.name = "corr_linear";
  auto form = std::make_shared<LinearForm>(2, IndexSet{0});
  p.truth = ParametricPrior(form, Vector::Constant(1, -0.5));
  p.f_true = [](const Matrix& x) { return Vector(-0.5 * x.col(0) + 1.0 * x.col(1)); };
  fill_splits(p, seed, opt.sizes, {0}, corr_linear_inputs);
  set_targets(p, seed, opt.noise_sd);
  return p;
}

StaticProblem gen_overlapping(std::uint64_t seed, const LinearOptions& opt) {
  check_sizes(opt.sizes);
  StaticProblem p;
  p.name = "overlapping";
  auto form = std::make_shared<QuadraticForm>(2, 0);
  p.truth = ParametricPrior(form, Vector::Constant(1, 0.2));
  p.f_true = [](const Matrix& x) {
    return Vector(0.2 * x.col(0).array().square() + (1.5 * x.col(0).array()).sin() + x.col(1).array());
  };
  fill_splits(p, seed, opt.sizes, {0}, corr_linear_inputs);
  set_targets(p, seed, opt.noise_sd);
  return p;
}

Sizes default_sizes(const std::string& name) {
  if (name == "friedman" || name == "corr_friedman") return {};
  if (name == "corr_linear" || name == "overlapping") return {50, 50, 600};
  throw ConfigError("unknown static problem '" + name + "'");
}

StaticProblem make_static_problem(const std::string& name, std::uint64_t seed, const Sizes& sizes) {
  if (name == "friedman") return gen_friedman(seed, {sizes, std::nullopt, 1.0});
  if (name == "corr_friedman") return gen_corr_friedman(seed, {sizes, std::nullopt, 1.0});
  if (name == "corr_linear") return gen_corr_linear(seed, {sizes, 0.5});
  if (name == "overlapping") return gen_overlapping(seed, {sizes, 0.5});
  throw ConfigError("unknown static problem '" + name + "'");
}

}  // namespace hybrid::problems
