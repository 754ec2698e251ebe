#include <gtest/gtest.h>

#include "hybrid/nets/train.hpp"
#include "hybrid/pd/pd.hpp"
#include "hybrid/trees/tree.hpp"
#include "test_util.hpp"

using namespace hybrid;
namespace ht = hybrid::testing;

namespace {

std::vector<std::unique_ptr<ResidualModel>> fitted_models(const Matrix& x, const Vector& y) {
  nets::RegressorConfig rc;
  rc.epochs = 100;
  rc.net.width = 8;
  std::vector<std::unique_ptr<ResidualModel>> out;
  out.push_back(std::make_unique<nets::MlpRegressor>(rc));
  out.push_back(std::make_unique<trees::BoostingRegressor>(trees::BoostConfig{40, 2, 2, 0.1}));
  out.push_back(std::make_unique<trees::ForestRegressor>(trees::ForestConfig{25, -1, 5, true, 3}));
  for (auto& m : out) m->fit(x, y);
  return out;
}

std::function<Matrix(const Matrix&)> as_fn(const ResidualModel& m) {
  return [&m](const Matrix& x) {
    Matrix y(x.rows(), 1);
    y.col(0) = m.predict(x);
    return y;
  };
}

}  // namespace

TEST(PartialDependence, MatchesNaiveLoopForEveryModel) {
  const Matrix x = ht::random_matrix(60, 3, 1);
  const Vector y = x.col(0).array() * x.col(1).array() + x.col(2).array().sin();
  const Matrix queries = ht::random_matrix(12, 3, 2);
  const Matrix background = ht::random_matrix(17, 3, 3);
  for (const auto& m : fitted_models(x, y)) {
    for (const IndexSet& k : {IndexSet{0}, IndexSet{1, 2}}) {
      const Vector got = pd::pd_values(*m, queries, background, k);
      const Matrix want = ht::naive_pd(as_fn(*m), queries, background, k);
      EXPECT_LE((got - want.col(0)).cwiseAbs().maxCoeff(), 1e-12) << m->kind();
    }
  }
}

TEST(PartialDependence, ChunkingDoesNotChangeValues) {
  const Matrix q = ht::random_matrix(9, 2, 4);
  const Matrix b = ht::random_matrix(7, 2, 5);
  const pd::BatchFn f = [](const Matrix& x) {
    Matrix y(x.rows(), 2);
    y.col(0) = x.col(0).array().exp() * x.col(1).array();
    y.col(1) = x.col(1).array().square();
    return y;
  };
  const Matrix want = ht::naive_pd(f, q, b, {0});
  for (int chunk : {1, 7, 8, 50, 8192}) {
    EXPECT_LE((pd::pd_values(f, q, b, {0}, chunk) - want).cwiseAbs().maxCoeff(), 1e-12) << chunk;
  }
}

TEST(PartialDependence, AdditiveModelRecoversItsComponent) {
  // f = g(x0) + r(x1, x2): PD over x0 is g(x0) + mean_b r(b).
  const pd::BatchFn f = [](const Matrix& x) {
    Matrix y(x.rows(), 1);
    y.col(0) = x.col(0).array().square() * 3.0 + x.col(1).array().cos() * x.col(2).array();
    return y;
  };
  const Matrix q = ht::random_matrix(10, 3, 6);
  const Matrix b = ht::random_matrix(25, 3, 7);
  const double mean_r = (b.col(1).array().cos() * b.col(2).array()).mean();
  const Matrix got = pd::pd_values(f, q, b, {0});
  for (int i = 0; i < 10; ++i) EXPECT_NEAR(got(i, 0), 3.0 * q(i, 0) * q(i, 0) + mean_r, 1e-12);
}

TEST(PartialDependence, ConstantWhenModelIgnoresFeature) {
  const Matrix x = ht::random_matrix(50, 3, 8);
  const Vector y = x.col(1) + x.col(2);
  trees::BoostingRegressor gb(trees::BoostConfig{30, 2, 2, 0.1}, IndexSet{0});
  gb.fit(x, y);
  // Feature 0 is filtered, so PD over feature 1 is checked against a model
  // that never sees feature 0 at all.
  const Vector v = pd::pd_values(gb, ht::random_matrix(10, 3, 9), x, {1});
  EXPECT_GT(v.maxCoeff() - v.minCoeff(), 0.0);
  trees::BoostingRegressor g2(trees::BoostConfig{30, 2, 2, 0.1});
  g2.fit(x, Vector(x.col(1)));
  const Vector c = pd::pd_values(g2, ht::random_matrix(10, 3, 10), x, {2});
  EXPECT_LE(c.maxCoeff() - c.minCoeff(), 1e-12);
}

TEST(PartialDependence, SingleBackgroundRowIsModelValue) {
  const Matrix x = ht::random_matrix(40, 2, 11);
  const Vector y = x.col(0) - 2.0 * x.col(1);
  for (const auto& m : fitted_models(x, y)) {
    const Matrix b = ht::random_matrix(1, 2, 12);
    Vector q(1);
    q << 0.3;
    Matrix row = b;
    row(0, 0) = 0.3;
    EXPECT_NEAR(pd::pd_estimate(*m, q, b, {0}), m->predict(row)(0), 1e-12) << m->kind();
  }
}

TEST(PartialDependence, LinearInTheModel) {
  const Matrix q = ht::random_matrix(6, 2, 13);
  const Matrix b = ht::random_matrix(9, 2, 14);
  const pd::BatchFn f1 = [](const Matrix& x) { return Matrix(x.col(0).array().sin() * x.col(1).array()); };
  const pd::BatchFn f2 = [](const Matrix& x) { return Matrix(x.col(1).array().exp()); };
  const pd::BatchFn comb = [&](const Matrix& x) { return Matrix(2.0 * f1(x) - 0.5 * f2(x)); };
  const Matrix lhs = pd::pd_values(comb, q, b, {0});
  const Matrix rhs = 2.0 * pd::pd_values(f1, q, b, {0}) - 0.5 * pd::pd_values(f2, q, b, {0});
  EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PartialDependence, BackgroundOrderDoesNotMatter) {
  const pd::BatchFn f = [](const Matrix& x) { return Matrix(x.col(0).array() * x.col(1).array().tanh()); };
  const Matrix q = ht::random_matrix(5, 2, 15);
  const Matrix b = ht::random_matrix(11, 2, 16);
  const Matrix rev = b.colwise().reverse();
  EXPECT_LE((pd::pd_values(f, q, b, {0}) - pd::pd_values(f, q, rev, {0})).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PartialDependence, FilteredKnownFeatureIsConfigError) {
  const Matrix x = ht::random_matrix(20, 2, 17);
  trees::BoostingRegressor gb(trees::BoostConfig{5, 2, 2, 0.1}, IndexSet{0});
  gb.fit(x, Vector(x.col(1)));
  EXPECT_THROW(pd::pd_values(gb, x, x, {0}), ConfigError);
  EXPECT_THROW(pd::pd_dataset(gb, make_dataset(x, Vector(x.col(1)), {0}, Split::kTrain)), ConfigError);
  EXPECT_THROW(pd::pd_values([](const Matrix& m) { return m; }, x, Matrix(0, 2), {0}), DataError);
}

TEST(PartialDependence, ProxyDatasetUsesDataAsBackground) {
  const Matrix x = ht::random_matrix(30, 3, 18);
  const Vector y = x.col(0).array().square() + x.col(1).array();
  trees::BoostingRegressor gb(trees::BoostConfig{30, 2, 2, 0.1});
  gb.fit(x, y);
  const Dataset d = make_dataset(x, y, {0}, Split::kTrain);
  const Dataset proxy = pd::pd_dataset(gb, d);
  EXPECT_EQ(proxy.features, x);
  EXPECT_EQ(proxy.known, d.known);
  const Matrix want = ht::naive_pd(as_fn(gb), x, x, {0});
  EXPECT_LE((proxy.targets - want.col(0)).cwiseAbs().maxCoeff(), 1e-12);
}
