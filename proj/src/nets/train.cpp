#include "hybrid/nets/train.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "hybrid/core/random.hpp"

namespace hybrid::nets {

double mse_loss_grad(const DiffNet& net, const Matrix& x, const Matrix& y, Vector& grad) {
  Activations acts;
  Matrix pred;
  net.forward(x, pred, &acts);
  if (pred.rows() != y.rows() || pred.cols() != y.cols()) throw ConfigError("loss: prediction/target shape mismatch");
  const Matrix diff = pred - y;
  const double n = static_cast<double>(diff.size());
  const double loss = diff.squaredNorm() / n;
  if (!std::isfinite(loss)) throw DivergenceError("non-finite training loss", 0);
  grad = Vector::Zero(net.num_params());
  net.backward(x, acts, (2.0 / n) * diff, grad, nullptr);
  return loss;
}

MlpRegressor::MlpRegressor(RegressorConfig cfg, IndexSet input_filter)
    : ResidualModel(std::move(input_filter)), cfg_(std::move(cfg)) {
  if (cfg_.epochs < 1) throw ConfigError("mlp regressor needs at least one epoch");
  make_optimizer(cfg_.optimizer, cfg_.learning_rate);  // validates
}

MlpRegressor::MlpRegressor(const MlpRegressor& other)
    : ResidualModel(other),
      cfg_(other.cfg_),
      net_(other.net_ ? std::make_unique<Mlp>(*other.net_) : nullptr),
      opt_(other.opt_ ? other.opt_->clone() : nullptr),
      y_mean_(other.y_mean_),
      y_scale_(other.y_scale_),
      best_val_(other.best_val_),
      best_epoch_(other.best_epoch_),
      fits_(other.fits_) {}

void MlpRegressor::init(int input_dim, const Vector& y) {
  MlpSpec spec = cfg_.net;
  spec.input_dim = input_dim;
  spec.output_dim = 1;
  net_ = std::make_unique<Mlp>(spec, derive_seed(cfg_.seed, static_cast<std::uint64_t>(fits_++)));
  opt_ = make_optimizer(cfg_.optimizer, cfg_.learning_rate);
  y_mean_ = 0.0;
  y_scale_ = 1.0;
  if (cfg_.standardize_targets) {
    y_mean_ = y.mean();
    const double sd = std::sqrt((y.array() - y_mean_).square().mean());
    y_scale_ = sd > 1e-12 ? sd : 1.0;
  }
  best_val_ = std::numeric_limits<double>::quiet_NaN();
  best_epoch_ = -1;
}

double MlpRegressor::step(const Matrix& x, const Matrix& ys) {
  Vector grad;
  const double loss = mse_loss_grad(*net_, x, ys, grad);
  opt_->step(net_->params(), grad);
  return loss;
}

void MlpRegressor::do_fit(const Matrix& x, const Vector& y, const Matrix* val_x, const Vector* val_y) {
  init(static_cast<int>(x.cols()), y);
  const Matrix ys = ((y.array() - y_mean_) / y_scale_).matrix();
  Vector best = net_->params();
  for (int e = 0; e < cfg_.epochs; ++e) {
    try {
      step(x, ys);
    } catch (const DivergenceError&) {
      throw DivergenceError("mlp regressor diverged", e);
    }
    if (val_x) {
      const double v = (do_predict(*val_x) - *val_y).squaredNorm() / static_cast<double>(val_y->size());
      if (!std::isfinite(v)) throw DivergenceError("mlp regressor validation loss diverged", e);
      if (!(v >= best_val_)) {  // also true while best_val_ is NaN
        best_val_ = v;
        best_epoch_ = e;
        best = net_->params();
      }
    }
  }
  if (val_x) net_->set_params(best);
}

void MlpRegressor::do_partial_fit(const Matrix& x, const Vector& y) {
  if (!net_) init(static_cast<int>(x.cols()), y);
  const Matrix ys = ((y.array() - y_mean_) / y_scale_).matrix();
  step(x, ys);
}

Vector MlpRegressor::do_predict(const Matrix& x) const {
  return (net_->forward(x).col(0).array() * y_scale_ + y_mean_).matrix();
}

// ---------------------------------------------------------------------------

namespace {
constexpr char kMagic[8] = {'H', 'Y', 'B', 'C', 'K', 'P', 'T', '1'};
}

void save_checkpoint(const std::filesystem::path& path, const DiffNet& net, std::uint64_t seed, long epoch) {
  nlohmann::json header{{"spec", net.spec_json()}, {"seed", seed}, {"epoch", epoch}, {"num_params", net.num_params()}};
  const std::string h = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  const std::uint64_t len = h.size();
  out.write(kMagic, sizeof(kMagic));
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  out.write(reinterpret_cast<const char*>(net.params().data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(net.num_params())));
  if (!out) throw DataError("short write on checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  char magic[sizeof(kMagic)];
  std::uint64_t len = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw DataError("not a checkpoint: " + path.string());
  if (len > (1u << 20)) throw DataError("checkpoint header too large");
  std::string h(len, '\0');
  in.read(h.data(), static_cast<std::streamsize>(len));
  Checkpoint ck;
  try {
    ck.header = nlohmann::json::parse(h);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad checkpoint header: ") + e.what());
  }
  const auto n = ck.header.at("num_params").get<Eigen::Index>();
  ck.params.resize(n);
  in.read(reinterpret_cast<char*>(ck.params.data()), static_cast<std::streamsize>(sizeof(double) * n));
  if (!in) throw DataError("truncated checkpoint " + path.string());
  return ck;
}

std::unique_ptr<DiffNet> restore_net(const Checkpoint& ckpt) {
  auto net = make_net(ckpt.header.at("spec"), ckpt.header.value("seed", std::uint64_t{0}));
  net->set_params(ckpt.params);
  return net;
}

}  // namespace hybrid::nets
