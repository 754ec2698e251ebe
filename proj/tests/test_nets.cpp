#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "hybrid/core/random.hpp"
#include "hybrid/nets/net.hpp"
#include "hybrid/nets/optim.hpp"
#include "hybrid/nets/train.hpp"
#include "test_util.hpp"

using namespace hybrid;
using namespace hybrid::nets;
namespace ht = hybrid::testing;

namespace {

// <G, net(x)> against central differences, for parameters and inputs.
void check_net_gradients(const DiffNet& proto, const Matrix& x, std::uint64_t seed, double tol = 1e-6) {
  const Matrix g = ht::random_matrix(static_cast<int>(x.rows()), proto.output_dim(), seed);
  auto loss_p = [&](const Vector& p) {
    auto n = proto.clone();
    n->set_params(p);
    return (n->forward(x).array() * g.array()).sum();
  };
  auto loss_x = [&](const Matrix& xx) { return (proto.forward(xx).array() * g.array()).sum(); };
  Matrix y;
  Activations acts;
  proto.forward(x, y, &acts);
  Vector grad = Vector::Zero(proto.num_params());
  Matrix grad_x = Matrix::Zero(x.rows(), x.cols());
  proto.backward(x, acts, g, grad, &grad_x);
  EXPECT_LE(ht::rel_error(grad, ht::central_diff(loss_p, proto.params())), tol) << proto.spec_json().dump();
  EXPECT_LE(ht::rel_error(ht::flatten(grad_x), ht::flatten(ht::central_diff_matrix(loss_x, x))), tol)
      << proto.spec_json().dump();
}

}  // namespace

TEST(Mlp, ZeroWeightsGiveZeroOutput) {
  Mlp net({3, 2, 2, 5, Activation::kTanh}, 1);
  net.set_params(Vector::Zero(net.num_params()));
  EXPECT_EQ(net.forward(ht::random_matrix(4, 3, 2)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Mlp, SingleLinearLayer) {
  // One identity unit: y = v (w . x + b) + c.
  Mlp net({2, 1, 1, 1, Activation::kIdentity}, 1);
  ASSERT_EQ(net.num_params(), 5);
  Vector p(5);
  p << 2.0, 1.0, 0.0, 1.0, 0.0;
  net.set_params(p);
  Matrix x(1, 2);
  x << 3.0, 1.0;
  EXPECT_DOUBLE_EQ(net.forward(x)(0, 0), 7.0);
}

TEST(Mlp, ParameterCount) {
  Mlp net({4, 1, 2, 15, Activation::kTanh}, 3);
  EXPECT_EQ(net.num_params(), (4 * 15 + 15) + (15 * 15 + 15) + (15 + 1));
}

TEST(Mlp, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> dim(1, 5), layers(1, 3), width(1, 12), rows(1, 6);
  const Activation acts[] = {Activation::kTanh, Activation::kIdentity, Activation::kRelu};
  for (int c = 0; c < 20; ++c) {
    const MlpSpec spec{dim(rng), dim(rng), layers(rng), width(rng), acts[c % 2]};
    const Mlp net(spec, static_cast<std::uint64_t>(c));
    check_net_gradients(net, ht::random_matrix(rows(rng), spec.input_dim, 100 + c), 200 + c);
  }
  // ReLU away from its kink.
  Mlp relu({2, 1, 1, 16, acts[2]}, 9);
  check_net_gradients(relu, ht::random_matrix(3, 2, 11), 12);
  check_net_gradients(Mlp({2, 1, 1, 16, Activation::kTanh}, 4), ht::random_matrix(5, 2, 13), 14);
}

TEST(ConvNet, GradientsMatchFiniteDifferences) {
  const ConvNet net({5, 4, 2, 2, 3, 3, Activation::kTanh}, 5);
  check_net_gradients(net, ht::random_matrix(2, net.input_dim(), 15), 16);
  const ConvNet one({3, 3, 1, 1, 2, 1, Activation::kTanh}, 6);
  check_net_gradients(one, ht::random_matrix(1, one.input_dim(), 17), 18);
}

TEST(ConvNet, CircularShiftEquivariance) {
  const ConvNet net({4, 6, 2, 2, 4, 3, Activation::kTanh}, 8);
  const Matrix x = ht::random_matrix(1, net.input_dim(), 19);
  auto shift = [](const Matrix& m) {
    Matrix out = m;
    for (int c = 0; c < 2; ++c) {
      for (int r = 0; r < 4; ++r) {
        for (int k = 0; k < 6; ++k) out(0, c * 24 + r * 6 + (k + 1) % 6) = m(0, c * 24 + r * 6 + k);
      }
    }
    return out;
  };
  EXPECT_LE((net.forward(shift(x)) - shift(net.forward(x))).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Loss, ScalarExample) {
  // One output, target 0, output 3: loss 9, d/d(output bias) = 6.
  Mlp net({1, 1, 1, 1, Activation::kIdentity}, 1);
  Vector p(4);
  p << 0.0, 0.0, 0.0, 3.0;
  net.set_params(p);
  Vector grad;
  const double loss = mse_loss_grad(net, Matrix::Zero(1, 1), Matrix::Zero(1, 1), grad);
  EXPECT_DOUBLE_EQ(loss, 9.0);
  EXPECT_DOUBLE_EQ(grad(3), 6.0);
}

TEST(Loss, ZeroUpstreamGradient) {
  const Mlp net({3, 2, 2, 6, Activation::kTanh}, 2);
  const Matrix x = ht::random_matrix(4, 3, 3);
  Matrix y;
  Activations acts;
  net.forward(x, y, &acts);
  Vector grad = Vector::Zero(net.num_params());
  net.backward(x, acts, Matrix::Zero(4, 2), grad, nullptr);
  EXPECT_EQ(grad.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Loss, NonFiniteInputDiverges) {
  const Mlp net({2, 1, 1, 4, Activation::kTanh}, 3);
  Matrix x = ht::random_matrix(3, 2, 4);
  x(1, 0) = std::nan("");
  Vector grad;
  EXPECT_THROW(mse_loss_grad(net, x, Matrix::Zero(3, 1), grad), DivergenceError);
}

TEST(Regressor, FitsLineCloseToOls) {
  const Matrix x = ht::random_matrix(100, 1, 21);
  const Vector y = 2.0 * x.col(0) + 0.1 * ht::random_vector(100, 22);
  RegressorConfig cfg;
  cfg.net.hidden_layers = 1;
  cfg.net.width = 1;
  cfg.net.activation = Activation::kIdentity;
  cfg.epochs = 3000;
  cfg.learning_rate = 0.05;
  MlpRegressor reg(cfg);
  reg.fit(x, y);
  const auto beta = ht::ols({ht::column(x, 0)}, ht::to_std(y));
  // Slope of the fitted function by a secant through its predictions.
  Matrix probe(2, 1);
  probe << -0.5, 0.5;
  const Vector p = reg.predict(probe);
  EXPECT_NEAR(p(1) - p(0), beta[0], 0.01 * std::abs(beta[0]));
}

TEST(Regressor, ZeroEpochsRejected) {
  RegressorConfig cfg;
  cfg.epochs = 0;
  EXPECT_THROW(MlpRegressor{cfg}, ConfigError);
}

TEST(Regressor, DeterministicForSeed) {
  const Matrix x = ht::random_matrix(50, 3, 23);
  const Vector y = x.col(0).array().sin() + x.col(1).array() * x.col(2).array();
  RegressorConfig cfg;
  cfg.epochs = 100;
  cfg.seed = 42;
  MlpRegressor a(cfg), b(cfg);
  a.fit(x, y);
  b.fit(x, y);
  EXPECT_EQ(a.net().params(), b.net().params());
  cfg.seed = 43;
  MlpRegressor c(cfg);
  c.fit(x, y);
  EXPECT_NE(a.net().params(), c.net().params());
}

TEST(Regressor, KeepsBestValidationEpoch) {
  const Matrix x = ht::random_matrix(30, 2, 24);
  const Vector y = x.col(0) + 0.5 * ht::random_vector(30, 25);
  const Matrix vx = ht::random_matrix(30, 2, 26);
  const Vector vy = vx.col(0);
  RegressorConfig cfg;
  cfg.epochs = 400;
  cfg.net.width = 20;
  cfg.learning_rate = 0.02;
  MlpRegressor reg(cfg);
  reg.fit(x, y, Validation{&vx, &vy});
  const double kept = (reg.predict(vx) - vy).squaredNorm() / 30.0;
  EXPECT_NEAR(kept, reg.best_val_loss(), 1e-12);

  // Replaying the same fit epoch by epoch never beats the kept loss.
  double best = std::numeric_limits<double>::infinity();
  MlpRegressor manual(cfg);
  for (int e = 0; e < cfg.epochs; ++e) {
    manual.partial_fit(x, y);
    best = std::min(best, (manual.predict(vx) - vy).squaredNorm() / 30.0);
  }
  EXPECT_GE(reg.best_epoch(), 0);
  EXPECT_LT(reg.best_epoch(), cfg.epochs);
  EXPECT_NEAR(best, reg.best_val_loss(), 1e-9);
}

TEST(Checkpoint, RoundTrip) {
  const Mlp net({3, 2, 2, 7, Activation::kTanh}, 31);
  const auto path = std::filesystem::temp_directory_path() / "hybrid_test_ckpt.bin";
  save_checkpoint(path, net, 31, 123);
  const Checkpoint ck = load_checkpoint(path);
  EXPECT_EQ(ck.header.at("seed").get<std::uint64_t>(), 31u);
  EXPECT_EQ(ck.header.at("epoch").get<long>(), 123);
  const auto back = restore_net(ck);
  EXPECT_EQ(back->params(), net.params());
  const Matrix x = ht::random_matrix(5, 3, 32);
  EXPECT_EQ(back->forward(x), net.forward(x));

  const ConvNet conv({4, 4, 2, 2, 3, 2, Activation::kTanh}, 33);
  save_checkpoint(path, conv, 33, 0);
  const auto cback = restore_net(load_checkpoint(path));
  EXPECT_EQ(cback->params(), conv.params());
  std::filesystem::remove(path);
}

TEST(Optim, AdamFirstStepMatchesHandFormula) {
  Vector p(2);
  p << 1.0, -2.0;
  Vector g(2);
  g << 0.5, -4.0;
  Adam adam(0.1);
  adam.step(p, g);
  // m = 0.1 g, v = 0.001 g^2; bias-corrected ratio is sign(g).
  for (int i = 0; i < 2; ++i) {
    const double m = 0.1 * g(i) / (1 - 0.9);
    const double v = 0.001 * g(i) * g(i) / (1 - 0.999);
    const double expect = (i == 0 ? 1.0 : -2.0) - 0.1 * m / (std::sqrt(v) + 1e-8);
    EXPECT_NEAR(p(i), expect, 1e-15);
  }
}

TEST(Optim, SgdStep) {
  Vector p = Vector::Ones(3);
  Sgd sgd(0.5);
  sgd.step(p, Vector::Constant(3, 2.0));
  EXPECT_TRUE(p.isApproxToConstant(0.0));
  EXPECT_THROW(sgd.step(p, Vector::Zero(2)), ConfigError);
}

TEST(Factory, MakeNetFromSpec) {
  const Mlp net({2, 3, 2, 5, Activation::kTanh}, 7);
  const auto made = make_net(net.spec_json(), 7);
  EXPECT_EQ(made->params(), net.params());
  EXPECT_THROW(make_net(nlohmann::json{{"kind", "lstm"}}, 0), ConfigError);
}
