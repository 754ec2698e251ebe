#pragma once

#include <memory>
#include <string>
#include <vector>

#include "hybrid/core/types.hpp"

namespace hybrid {

// Algebraic family h_k^theta. Maps rows of x (input_dim columns) to rows of
// output_dim values. Outputs are grouped into channels; each channel carries
// its own offset and reads only its own known indices.
class PriorForm {
 public:
  virtual ~PriorForm() = default;

  virtual std::string id() const = 0;
  virtual int num_params() const = 0;
  virtual int input_dim() const = 0;
  virtual int output_dim() const { return 1; }
  virtual int num_channels() const { return 1; }
  virtual int channel_of(int /*output*/) const { return 0; }
  virtual const IndexSet& known_indices(int channel) const = 0;

  // Union of every channel's known indices, sorted.
  IndexSet all_known_indices() const;

  virtual void eval(const Vector& theta, const Matrix& x, Matrix& out) const = 0;

  // Accumulates d<grad_out, h(x)>/dtheta into grad_theta and, when grad_x is
  // non-null, d<grad_out, h(x)>/dx into *grad_x.
  virtual void vjp(const Vector& theta, const Matrix& x, const Matrix& grad_out, Vector& grad_theta,
                   Matrix* grad_x) const = 0;
};

// theta . x_K
class LinearForm final : public PriorForm {
 public:
  LinearForm(int input_dim, IndexSet known);
  std::string id() const override { return "linear"; }
  int num_params() const override { return static_cast<int>(known_.size()); }
  int input_dim() const override { return input_dim_; }
  const IndexSet& known_indices(int) const override { return known_; }
  void eval(const Vector& theta, const Matrix& x, Matrix& out) const override;
  void vjp(const Vector& theta, const Matrix& x, const Matrix& grad_out, Vector& grad_theta,
           Matrix* grad_x) const override;

 private:
  int input_dim_;
  IndexSet known_;
};

// theta0 * sin(theta1 * x0 * x1)
class FriedmanSineForm final : public PriorForm {
 public:
  explicit FriedmanSineForm(int input_dim);
  std::string id() const override { return "friedman_sine"; }
  int num_params() const override { return 2; }
  int input_dim() const override { return input_dim_; }
  const IndexSet& known_indices(int) const override { return known_; }
  void eval(const Vector& theta, const Matrix& x, Matrix& out) const override;
  void vjp(const Vector& theta, const Matrix& x, const Matrix& grad_out, Vector& grad_theta,
           Matrix* grad_x) const override;

 private:
  int input_dim_;
  IndexSet known_{0, 1};
};

// theta * x_j^2
class QuadraticForm final : public PriorForm {
 public:
  QuadraticForm(int input_dim, int feature);
  std::string id() const override { return "quadratic"; }
  int num_params() const override { return 1; }
  int input_dim() const override { return input_dim_; }
  const IndexSet& known_indices(int) const override { return known_; }
  void eval(const Vector& theta, const Matrix& x, Matrix& out) const override;
  void vjp(const Vector& theta, const Matrix& x, const Matrix& grad_out, Vector& grad_theta,
           Matrix* grad_x) const override;

 private:
  int input_dim_;
  IndexSet known_;
};

// Log-space Lotka-Volterra known term: (-theta * e^q, 0) on state (p, q).
class LotkaVolterraForm final : public PriorForm {
 public:
  std::string id() const override { return "lotka_volterra"; }
  int num_params() const override { return 1; }
  int input_dim() const override { return 2; }
  int output_dim() const override { return 2; }
  int num_channels() const override { return 2; }
  int channel_of(int output) const override { return output; }
  const IndexSet& known_indices(int channel) const override { return known_[channel]; }
  void eval(const Vector& theta, const Matrix& x, Matrix& out) const override;
  void vjp(const Vector& theta, const Matrix& x, const Matrix& grad_out, Vector& grad_theta,
           Matrix* grad_x) const override;

 private:
  IndexSet known_[2] = {{1}, {}};
};

// Frictionless pendulum: (omega, -theta * sin(angle)) on state (angle, omega).
class PendulumForm final : public PriorForm {
 public:
  std::string id() const override { return "pendulum"; }
  int num_params() const override { return 1; }
  int input_dim() const override { return 2; }
  int output_dim() const override { return 2; }
  int num_channels() const override { return 2; }
  int channel_of(int output) const override { return output; }
  const IndexSet& known_indices(int channel) const override { return known_[channel]; }
  void eval(const Vector& theta, const Matrix& x, Matrix& out) const override;
  void vjp(const Vector& theta, const Matrix& x, const Matrix& grad_out, Vector& grad_theta,
           Matrix* grad_x) const override;

 private:
  IndexSet known_[2] = {{1}, {0}};
};

// Periodic 5-point Laplacian on two stacked fields (u, v), each rows x cols,
// stored channel-major: (theta0 * lap(u), theta1 * lap(v)).
class LaplacianForm final : public PriorForm {
 public:
  LaplacianForm(int rows, int cols, double spacing);
  std::string id() const override { return "laplacian"; }
  int num_params() const override { return 2; }
  int input_dim() const override { return 2 * cells(); }
  int output_dim() const override { return 2 * cells(); }
  int num_channels() const override { return 2; }
  int channel_of(int output) const override { return output / cells(); }
  const IndexSet& known_indices(int channel) const override { return known_[channel]; }
  void eval(const Vector& theta, const Matrix& x, Matrix& out) const override;
  void vjp(const Vector& theta, const Matrix& x, const Matrix& grad_out, Vector& grad_theta,
           Matrix* grad_x) const override;

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int cells() const { return rows_ * cols_; }

  // Periodic Laplacian of one field (length cells()) into out.
  void laplacian(const double* field, double* out) const;

 private:
  int rows_;
  int cols_;
  double inv_h2_;
  IndexSet known_[2];
};

// A prior form with concrete parameters and per-channel offsets gamma.
class ParametricPrior {
 public:
  ParametricPrior() = default;
  ParametricPrior(std::shared_ptr<const PriorForm> form, Vector theta, Vector gamma);
  // Zero offsets.
  ParametricPrior(std::shared_ptr<const PriorForm> form, Vector theta);

  const PriorForm& form() const { return *form_; }
  std::shared_ptr<const PriorForm> form_ptr() const { return form_; }
  const std::string form_id() const { return form_->id(); }

  const Vector& theta() const { return theta_; }
  const Vector& gamma() const { return gamma_; }
  void set_theta(Vector theta);
  void set_gamma(Vector gamma);

  // h_k(x) + gamma
  Matrix eval(const Matrix& x) const;
  // h_k(x) alone
  Matrix eval_known(const Matrix& x) const;
  // Single-output convenience: column 0 of eval().
  Vector predict(const Matrix& x) const;

  // Flat (theta, gamma) view used by the optimizers.
  int num_params() const { return static_cast<int>(theta_.size() + gamma_.size()); }
  Vector packed() const;
  void unpack(const Vector& packed);

  // Gradient of <grad_out, eval(x)> w.r.t. packed() accumulated into grad;
  // input gradient accumulated into *grad_x when requested.
  void vjp(const Matrix& x, const Matrix& grad_out, Eigen::Ref<Vector> grad, Matrix* grad_x) const;

 private:
  std::shared_ptr<const PriorForm> form_;
  Vector theta_;
  Vector gamma_;
};

}  // namespace hybrid
