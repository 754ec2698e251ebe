#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hybrid/core/types.hpp"
#include "json.hpp"

namespace hybrid::nets {

// tanh through a single exp; accurate to ~1e-14 and several times faster
// than std::tanh on this toolchain.
inline double fast_tanh(double x) {
  if (x > 20.0) return 1.0;
  if (x < -20.0) return -1.0;
  return 1.0 - 2.0 / (std::exp(2.0 * x) + 1.0);
}

enum class Activation { kTanh, kRelu, kIdentity };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

void activate(Activation a, Matrix& z);
// grad <- grad * act'(z) written in terms of the activated value h = act(z).
void activate_backward(Activation a, const Matrix& h, Matrix& grad);

// Hidden-layer outputs saved by forward() for the backward pass.
using Activations = std::vector<Matrix>;

// A network with a flat parameter vector and hand-written reverse mode.
class DiffNet {
 public:
  virtual ~DiffNet() = default;

  virtual std::string kind() const = 0;
  virtual int input_dim() const = 0;
  virtual int output_dim() const = 0;
  virtual std::unique_ptr<DiffNet> clone() const = 0;
  virtual nlohmann::json spec_json() const = 0;

  int num_params() const { return static_cast<int>(params_.size()); }
  const Vector& params() const { return params_; }
  Vector& params() { return params_; }
  void set_params(const Vector& p);

  // Rows of x are samples. `acts` may be null when no backward pass follows.
  virtual void forward(const Matrix& x, Matrix& y, Activations* acts) const = 0;
  Matrix forward(const Matrix& x) const;

  // Accumulates d<grad_y, net(x)>/dparams into grad_params and, if grad_x is
  // non-null, d<grad_y, net(x)>/dx into *grad_x.
  virtual void backward(const Matrix& x, const Activations& acts, const Matrix& grad_y,
                        Eigen::Ref<Vector> grad_params, Matrix* grad_x) const = 0;

 protected:
  Vector params_;
};

struct MlpSpec {
  int input_dim = 1;
  int output_dim = 1;
  int hidden_layers = 2;
  int width = 15;
  Activation activation = Activation::kTanh;
};

class Mlp final : public DiffNet {
 public:
  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) init for weights and biases.
  Mlp(const MlpSpec& spec, std::uint64_t seed);

  std::string kind() const override { return "mlp"; }
  int input_dim() const override { return spec_.input_dim; }
  int output_dim() const override { return spec_.output_dim; }
  std::unique_ptr<DiffNet> clone() const override { return std::make_unique<Mlp>(*this); }
  nlohmann::json spec_json() const override;
  const MlpSpec& spec() const { return spec_; }

  using DiffNet::forward;
  void forward(const Matrix& x, Matrix& y, Activations* acts) const override;
  void backward(const Matrix& x, const Activations& acts, const Matrix& grad_y, Eigen::Ref<Vector> grad_params,
                Matrix* grad_x) const override;

 private:
  struct Layer {
    int in, out;
    Eigen::Index offset;  // weights (out x in, row-major) then bias (out)
  };
  MlpSpec spec_;
  std::vector<Layer> layers_;
};

struct ConvSpec {
  int rows = 32;
  int cols = 32;
  int in_channels = 2;
  int out_channels = 2;
  int hidden_channels = 8;
  int layers = 3;
  Activation activation = Activation::kTanh;
};

// 3x3 convolutions with circular padding. Each sample is a row holding
// channel-major fields (channel, row, col).
class ConvNet final : public DiffNet {
 public:
  ConvNet(const ConvSpec& spec, std::uint64_t seed);

  std::string kind() const override { return "convnet"; }
  int input_dim() const override { return spec_.in_channels * cells(); }
  int output_dim() const override { return spec_.out_channels * cells(); }
  std::unique_ptr<DiffNet> clone() const override { return std::make_unique<ConvNet>(*this); }
  nlohmann::json spec_json() const override;
  const ConvSpec& spec() const { return spec_; }
  int cells() const { return spec_.rows * spec_.cols; }

  using DiffNet::forward;
  void forward(const Matrix& x, Matrix& y, Activations* acts) const override;
  void backward(const Matrix& x, const Activations& acts, const Matrix& grad_y, Eigen::Ref<Vector> grad_params,
                Matrix* grad_x) const override;

 private:
  struct Layer {
    int in, out;
    Eigen::Index offset;  // weights (out x in*9, row-major) then bias (out)
  };
  void im2col(const double* field, int channels, Matrix& cols) const;
  void col2im(const Matrix& cols, int channels, double* field) const;

  ConvSpec spec_;
  std::vector<Layer> layers_;
  std::vector<int> neighbor_;  // [k * cells + p] = source cell of tap k at cell p
};

std::unique_ptr<DiffNet> make_net(const nlohmann::json& spec, std::uint64_t seed);

}  // namespace hybrid::nets
