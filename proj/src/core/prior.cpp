#include "hybrid/core/prior.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace hybrid {

IndexSet PriorForm::all_known_indices() const {
  std::set<int> all;
  for (int c = 0; c < num_channels(); ++c) {
    const auto& k = known_indices(c);
    all.insert(k.begin(), k.end());
  }
  return {all.begin(), all.end()};
}

namespace {

void check_input(const PriorForm& form, const Matrix& x) {
  if (x.cols() != form.input_dim()) {
    throw ConfigError("prior '" + form.id() + "' expects " + std::to_string(form.input_dim()) +
                      " inputs, got " + std::to_string(x.cols()));
  }
}

}  // namespace

// ---------------------------------------------------------------------------

LinearForm::LinearForm(int input_dim, IndexSet known) : input_dim_(input_dim), known_(std::move(known)) {
  for (int k : known_) {
    if (k < 0 || k >= input_dim_) throw ConfigError("linear prior index out of range");
  }
}

void LinearForm::eval(const Vector& theta, const Matrix& x, Matrix& out) const {
  check_input(*this, x);
  out.setZero(x.rows(), 1);
  for (std::size_t j = 0; j < known_.size(); ++j) out.col(0) += theta(j) * x.col(known_[j]);
}

void LinearForm::vjp(const Vector& theta, const Matrix& x, const Matrix& grad_out, Vector& grad_theta,
                     Matrix* grad_x) const {
  for (std::size_t j = 0; j < known_.size(); ++j) {
    grad_theta(j) += grad_out.col(0).dot(x.col(known_[j]));
    if (grad_x) grad_x->col(known_[j]) += theta(j) * grad_out.col(0);
  }
}

// ---------------------------------------------------------------------------

FriedmanSineForm::FriedmanSineForm(int input_dim) : input_dim_(input_dim) {
  if (input_dim_ < 2) throw ConfigError("friedman prior needs at least two inputs");
}

void FriedmanSineForm::eval(const Vector& theta, const Matrix& x, Matrix& out) const {
  check_input(*this, x);
  out.resize(x.rows(), 1);
  for (Eigen::Index i = 0; i < x.rows(); ++i) out(i, 0) = theta(0) * std::sin(theta(1) * x(i, 0) * x(i, 1));
}

void FriedmanSineForm::vjp(const Vector& theta, const Matrix& x, const Matrix& grad_out, Vector& grad_theta,
                           Matrix* grad_x) const {
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double u = x(i, 0) * x(i, 1);
    const double s = std::sin(theta(1) * u);
    const double c = std::cos(theta(1) * u);
    const double g = grad_out(i, 0);
    grad_theta(0) += g * s;
    grad_theta(1) += g * theta(0) * c * u;
    if (grad_x) {
      (*grad_x)(i, 0) += g * theta(0) * c * theta(1) * x(i, 1);
      (*grad_x)(i, 1) += g * theta(0) * c * theta(1) * x(i, 0);
    }
  }
}

// ---------------------------------------------------------------------------

QuadraticForm::QuadraticForm(int input_dim, int feature) : input_dim_(input_dim), known_{feature} {
  if (feature < 0 || feature >= input_dim) throw ConfigError("quadratic prior index out of range");
}

void QuadraticForm::eval(const Vector& theta, const Matrix& x, Matrix& out) const {
  check_input(*this, x);
  out = theta(0) * x.col(known_[0]).array().square().matrix();
}

void QuadraticForm::vjp(const Vector& theta, const Matrix& x, const Matrix& grad_out, Vector& grad_theta,
                        Matrix* grad_x) const {
  const int j = known_[0];
  grad_theta(0) += grad_out.col(0).dot(x.col(j).array().square().matrix());
  if (grad_x) grad_x->col(j) += (2.0 * theta(0) * grad_out.col(0).array() * x.col(j).array()).matrix();
}

// ---------------------------------------------------------------------------

void LotkaVolterraForm::eval(const Vector& theta, const Matrix& x, Matrix& out) const {
  check_input(*this, x);
  out.resize(x.rows(), 2);
  out.col(0) = -theta(0) * x.col(1).array().exp().matrix();
  out.col(1).setZero();
}

void LotkaVolterraForm::vjp(const Vector& theta, const Matrix& x, const Matrix& grad_out, Vector& grad_theta,
                            Matrix* grad_x) const {
  const Eigen::ArrayXd eq = x.col(1).array().exp();
  grad_theta(0) -= (grad_out.col(0).array() * eq).sum();
  if (grad_x) grad_x->col(1) -= (theta(0) * grad_out.col(0).array() * eq).matrix();
}

// ---------------------------------------------------------------------------

void PendulumForm::eval(const Vector& theta, const Matrix& x, Matrix& out) const {
  check_input(*this, x);
  out.resize(x.rows(), 2);
  out.col(0) = x.col(1);
  out.col(1) = -theta(0) * x.col(0).array().sin().matrix();
}

void PendulumForm::vjp(const Vector& theta, const Matrix& x, const Matrix& grad_out, Vector& grad_theta,
                       Matrix* grad_x) const {
  grad_theta(0) -= (grad_out.col(1).array() * x.col(0).array().sin()).sum();
  if (grad_x) {
    grad_x->col(1) += grad_out.col(0);
    grad_x->col(0) -= (theta(0) * grad_out.col(1).array() * x.col(0).array().cos()).matrix();
  }
}

// ---------------------------------------------------------------------------

LaplacianForm::LaplacianForm(int rows, int cols, double spacing)
    : rows_(rows), cols_(cols), inv_h2_(1.0 / (spacing * spacing)) {
  if (rows < 3 || cols < 3 || !(spacing > 0.0)) throw ConfigError("laplacian prior needs a grid of at least 3x3");
  for (int c = 0; c < 2; ++c) {
    known_[c].resize(cells());
    for (int i = 0; i < cells(); ++i) known_[c][i] = c * cells() + i;
  }
}

void LaplacianForm::laplacian(const double* f, double* out) const {
  for (int i = 0; i < rows_; ++i) {
    const int up = (i + rows_ - 1) % rows_;
    const int down = (i + 1) % rows_;
    for (int j = 0; j < cols_; ++j) {
      const int left = (j + cols_ - 1) % cols_;
      const int right = (j + 1) % cols_;
      out[i * cols_ + j] =
          (f[up * cols_ + j] + f[down * cols_ + j] + f[i * cols_ + left] + f[i * cols_ + right] - 4.0 * f[i * cols_ + j]) *
          inv_h2_;
    }
  }
}

void LaplacianForm::eval(const Vector& theta, const Matrix& x, Matrix& out) const {
  check_input(*this, x);
  out.resize(x.rows(), output_dim());
  const int n = cells();
  for (Eigen::Index b = 0; b < x.rows(); ++b) {
    for (int c = 0; c < 2; ++c) {
      double* dst = out.row(b).data() + c * n;
      laplacian(x.row(b).data() + c * n, dst);
      for (int k = 0; k < n; ++k) dst[k] *= theta(c);
    }
  }
}

void LaplacianForm::vjp(const Vector& theta, const Matrix& x, const Matrix& grad_out, Vector& grad_theta,
                        Matrix* grad_x) const {
  const int n = cells();
  std::vector<double> lap(static_cast<std::size_t>(n));
  for (Eigen::Index b = 0; b < x.rows(); ++b) {
    for (int c = 0; c < 2; ++c) {
      const double* g = grad_out.row(b).data() + c * n;
      laplacian(x.row(b).data() + c * n, lap.data());
      double acc = 0.0;
      for (int k = 0; k < n; ++k) acc += g[k] * lap[k];
      grad_theta(c) += acc;
      if (grad_x) {
        // The periodic 5-point Laplacian is self-adjoint.
        laplacian(g, lap.data());
        double* gx = grad_x->row(b).data() + c * n;
        for (int k = 0; k < n; ++k) gx[k] += theta(c) * lap[k];
      }
    }
  }
}

// ---------------------------------------------------------------------------

ParametricPrior::ParametricPrior(std::shared_ptr<const PriorForm> form, Vector theta, Vector gamma)
    : form_(std::move(form)), theta_(std::move(theta)), gamma_(std::move(gamma)) {
  if (!form_) throw ConfigError("prior form is null");
  if (theta_.size() != form_->num_params()) {
    throw ConfigError("prior '" + form_->id() + "' expects " + std::to_string(form_->num_params()) +
                      " parameters, got " + std::to_string(theta_.size()));
  }
  if (gamma_.size() != form_->num_channels()) throw ConfigError("prior offset count != channel count");
}

ParametricPrior::ParametricPrior(std::shared_ptr<const PriorForm> form, Vector theta)
    : ParametricPrior(form, std::move(theta), Vector::Zero(form ? form->num_channels() : 0)) {}

void ParametricPrior::set_theta(Vector theta) {
  if (theta.size() != theta_.size()) throw ConfigError("theta size mismatch");
  theta_ = std::move(theta);
}

void ParametricPrior::set_gamma(Vector gamma) {
  if (gamma.size() != gamma_.size()) throw ConfigError("gamma size mismatch");
  gamma_ = std::move(gamma);
}

Matrix ParametricPrior::eval_known(const Matrix& x) const {
  Matrix out;
  form_->eval(theta_, x, out);
  return out;
}

Matrix ParametricPrior::eval(const Matrix& x) const {
  Matrix out = eval_known(x);
  if (form_->num_channels() == 1) {
    out.array() += gamma_(0);
    return out;
  }
  Eigen::RowVectorXd offset(out.cols());
  for (Eigen::Index j = 0; j < out.cols(); ++j) offset(j) = gamma_(form_->channel_of(static_cast<int>(j)));
  out.rowwise() += offset;
  return out;
}

Vector ParametricPrior::predict(const Matrix& x) const { return eval(x).col(0); }

Vector ParametricPrior::packed() const {
  Vector p(num_params());
  p << theta_, gamma_;
  return p;
}

void ParametricPrior::unpack(const Vector& packed) {
  if (packed.size() != num_params()) throw ConfigError("packed prior size mismatch");
  theta_ = packed.head(theta_.size());
  gamma_ = packed.tail(gamma_.size());
}

void ParametricPrior::vjp(const Matrix& x, const Matrix& grad_out, Eigen::Ref<Vector> grad, Matrix* grad_x) const {
  Vector gt = Vector::Zero(theta_.size());
  form_->vjp(theta_, x, grad_out, gt, grad_x);
  grad.head(theta_.size()) += gt;
  const Eigen::RowVectorXd col_sums = grad_out.colwise().sum();
  if (form_->num_channels() == 1) {
    grad(theta_.size()) += col_sums.sum();
  } else {
    for (Eigen::Index j = 0; j < col_sums.size(); ++j) {
      grad(theta_.size() + form_->channel_of(static_cast<int>(j))) += col_sums(j);
    }
  }
}

}  // namespace hybrid
