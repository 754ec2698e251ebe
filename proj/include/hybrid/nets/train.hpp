#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>

#include "hybrid/core/residual.hpp"
#include "hybrid/nets/net.hpp"
#include "hybrid/nets/optim.hpp"

namespace hybrid::nets {

// Mean over all entries of (net(x) - y)^2 and its parameter gradient
// (overwrites grad). Throws DivergenceError on a non-finite loss.
double mse_loss_grad(const DiffNet& net, const Matrix& x, const Matrix& y, Vector& grad);

struct RegressorConfig {
  MlpSpec net;  // input/output dims are filled in at fit time
  int epochs = 2000;
  double learning_rate = 0.005;
  std::string optimizer = "adam";
  bool standardize_targets = true;
  std::uint64_t seed = 0;
};

// Full-batch MLP regressor usable as h_a. fit() re-initialises the network;
// partial_fit() continues from the current weights with one optimizer step.
class MlpRegressor final : public ResidualModel {
 public:
  explicit MlpRegressor(RegressorConfig cfg, IndexSet input_filter = {});
  MlpRegressor(const MlpRegressor& other);

  std::string kind() const override { return "mlp"; }
  bool differentiable() const override { return true; }
  std::unique_ptr<ResidualModel> clone() const override { return std::make_unique<MlpRegressor>(*this); }

  const RegressorConfig& config() const { return cfg_; }
  const Mlp& net() const { return *net_; }
  // Validation MSE of the kept epoch (NaN if fit without validation).
  double best_val_loss() const { return best_val_; }
  int best_epoch() const { return best_epoch_; }

 protected:
  void do_fit(const Matrix& x, const Vector& y, const Matrix* val_x, const Vector* val_y) override;
  void do_partial_fit(const Matrix& x, const Vector& y) override;
  Vector do_predict(const Matrix& x) const override;

 private:
  void init(int input_dim, const Vector& y);
  double step(const Matrix& x, const Matrix& ys);

  RegressorConfig cfg_;
  std::unique_ptr<Mlp> net_;
  std::unique_ptr<Optimizer> opt_;
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
  double best_val_ = std::numeric_limits<double>::quiet_NaN();
  int best_epoch_ = -1;
  long fits_ = 0;
};

// Flat little-endian doubles preceded by a JSON header holding the network
// spec, seed and epoch.
struct Checkpoint {
  nlohmann::json header;
  Vector params;
};

void save_checkpoint(const std::filesystem::path& path, const DiffNet& net, std::uint64_t seed, long epoch);
Checkpoint load_checkpoint(const std::filesystem::path& path);
std::unique_ptr<DiffNet> restore_net(const Checkpoint& ckpt);

}  // namespace hybrid::nets
