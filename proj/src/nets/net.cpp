#include "hybrid/nets/net.hpp"

#include <random>

namespace hybrid::nets {

namespace {

using RowMap = Eigen::Map<const Matrix>;
using RowMapMut = Eigen::Map<Matrix>;

void uniform_init(Vector& p, Eigen::Index offset, Eigen::Index count, int fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (Eigen::Index i = 0; i < count; ++i) p(offset + i) = u(rng);
}

}  // namespace

Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  throw ConfigError("unknown activation '" + name + "'");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kTanh:
      return "tanh";
    case Activation::kRelu:
      return "relu";
    case Activation::kIdentity:
      return "identity";
  }
  return "unknown";
}

void activate(Activation a, Matrix& z) {
  double* d = z.data();
  const Eigen::Index n = z.size();
  switch (a) {
    case Activation::kTanh:
      for (Eigen::Index i = 0; i < n; ++i) d[i] = fast_tanh(d[i]);
      break;
    case Activation::kRelu:
      for (Eigen::Index i = 0; i < n; ++i) d[i] = d[i] > 0.0 ? d[i] : 0.0;
      break;
    case Activation::kIdentity:
      break;
  }
}

void activate_backward(Activation a, const Matrix& h, Matrix& grad) {
  switch (a) {
    case Activation::kTanh:
      grad.array() *= 1.0 - h.array().square();
      break;
    case Activation::kRelu:
      grad.array() *= (h.array() > 0.0).cast<double>();
      break;
    case Activation::kIdentity:
      break;
  }
}

void DiffNet::set_params(const Vector& p) {
  if (p.size() != params_.size()) throw ConfigError(kind() + ": parameter count mismatch");
  params_ = p;
}

Matrix DiffNet::forward(const Matrix& x) const {
  Matrix y;
  forward(x, y, nullptr);
  return y;
}

// ---------------------------------------------------------------------------

Mlp::Mlp(const MlpSpec& spec, std::uint64_t seed) : spec_(spec) {
  if (spec.hidden_layers < 1 || spec.width < 1) throw ConfigError("mlp needs at least one hidden layer of width >= 1");
  if (spec.input_dim < 1 || spec.output_dim < 1) throw ConfigError("mlp input and output dims must be positive");
  std::vector<int> dims{spec.input_dim};
  for (int l = 0; l < spec.hidden_layers; ++l) dims.push_back(spec.width);
  dims.push_back(spec.output_dim);
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    layers_.push_back({dims[l], dims[l + 1], offset});
    offset += static_cast<Eigen::Index>(dims[l]) * dims[l + 1] + dims[l + 1];
  }
  params_.resize(offset);
  std::mt19937_64 rng(seed);
  for (const auto& L : layers_) uniform_init(params_, L.offset, static_cast<Eigen::Index>(L.out) * (L.in + 1), L.in, rng);
}

nlohmann::json Mlp::spec_json() const {
  return {{"kind", "mlp"},
          {"input_dim", spec_.input_dim},
          {"output_dim", spec_.output_dim},
          {"hidden_layers", spec_.hidden_layers},
          {"width", spec_.width},
          {"activation", to_string(spec_.activation)}};
}

void Mlp::forward(const Matrix& x, Matrix& y, Activations* acts) const {
  if (x.cols() != spec_.input_dim) {
    throw ConfigError("mlp expects " + std::to_string(spec_.input_dim) + " inputs, got " + std::to_string(x.cols()));
  }
  if (acts) acts->resize(layers_.size() - 1);
  Matrix h;
  const Matrix* in = &x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& L = layers_[l];
    RowMap W(params_.data() + L.offset, L.out, L.in);
    Eigen::Map<const Eigen::RowVectorXd> b(params_.data() + L.offset + static_cast<Eigen::Index>(L.out) * L.in, L.out);
    Matrix z(in->rows(), L.out);
    z.noalias() = *in * W.transpose();
    z.rowwise() += b;
    if (l + 1 == layers_.size()) {
      y = std::move(z);
    } else {
      activate(spec_.activation, z);
      if (acts) {
        (*acts)[l] = std::move(z);
        in = &(*acts)[l];
      } else {
        h = std::move(z);
        in = &h;
      }
    }
  }
}

void Mlp::backward(const Matrix& x, const Activations& acts, const Matrix& grad_y, Eigen::Ref<Vector> grad_params,
                   Matrix* grad_x) const {
  Matrix g = grad_y;
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const auto& L = layers_[li];
    const Matrix& in = li == 0 ? x : acts[li - 1];
    RowMap W(params_.data() + L.offset, L.out, L.in);
    RowMapMut gW(grad_params.data() + L.offset, L.out, L.in);
    gW.noalias() += g.transpose() * in;
    grad_params.segment(L.offset + static_cast<Eigen::Index>(L.out) * L.in, L.out) += g.colwise().sum().transpose();
    if (li == 0 && grad_x == nullptr) break;
    Matrix gin(g.rows(), L.in);
    gin.noalias() = g * W;
    if (li == 0) {
      *grad_x += gin;
    } else {
      activate_backward(spec_.activation, acts[li - 1], gin);
      g = std::move(gin);
    }
  }
}

// ---------------------------------------------------------------------------

ConvNet::ConvNet(const ConvSpec& spec, std::uint64_t seed) : spec_(spec) {
  if (spec.layers < 1 || spec.hidden_channels < 1 || spec.in_channels < 1 || spec.out_channels < 1) {
    throw ConfigError("convnet layer and channel counts must be positive");
  }
  if (spec.rows < 1 || spec.cols < 1) throw ConfigError("convnet grid must be non-empty");
  std::vector<int> ch{spec.in_channels};
  for (int l = 0; l + 1 < spec.layers; ++l) ch.push_back(spec.hidden_channels);
  ch.push_back(spec.out_channels);
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l + 1 < ch.size(); ++l) {
    layers_.push_back({ch[l], ch[l + 1], offset});
    offset += static_cast<Eigen::Index>(ch[l + 1]) * ch[l] * 9 + ch[l + 1];
  }
  params_.resize(offset);
  std::mt19937_64 rng(seed);
  for (const auto& L : layers_) {
    uniform_init(params_, L.offset, static_cast<Eigen::Index>(L.out) * (L.in * 9 + 1), L.in * 9, rng);
  }
  const int R = spec.rows, C = spec.cols;
  neighbor_.resize(static_cast<std::size_t>(9) * cells());
  for (int k = 0; k < 9; ++k) {
    const int dy = k / 3 - 1, dx = k % 3 - 1;
    for (int i = 0; i < R; ++i) {
      for (int j = 0; j < C; ++j) {
        neighbor_[static_cast<std::size_t>(k) * cells() + i * C + j] = ((i + dy + R) % R) * C + (j + dx + C) % C;
      }
    }
  }
}

nlohmann::json ConvNet::spec_json() const {
  return {{"kind", "convnet"},
          {"rows", spec_.rows},
          {"cols", spec_.cols},
          {"in_channels", spec_.in_channels},
          {"out_channels", spec_.out_channels},
          {"hidden_channels", spec_.hidden_channels},
          {"layers", spec_.layers},
          {"activation", to_string(spec_.activation)}};
}

void ConvNet::im2col(const double* field, int channels, Matrix& cols) const {
  const int n = cells();
  cols.resize(static_cast<Eigen::Index>(channels) * 9, n);
  for (int c = 0; c < channels; ++c) {
    const double* f = field + static_cast<std::ptrdiff_t>(c) * n;
    for (int k = 0; k < 9; ++k) {
      double* dst = cols.row(c * 9 + k).data();
      const int* nb = neighbor_.data() + static_cast<std::ptrdiff_t>(k) * n;
      for (int p = 0; p < n; ++p) dst[p] = f[nb[p]];
    }
  }
}

void ConvNet::col2im(const Matrix& cols, int channels, double* field) const {
  const int n = cells();
  for (int c = 0; c < channels; ++c) {
    double* f = field + static_cast<std::ptrdiff_t>(c) * n;
    for (int k = 0; k < 9; ++k) {
      const double* src = cols.row(c * 9 + k).data();
      const int* nb = neighbor_.data() + static_cast<std::ptrdiff_t>(k) * n;
      for (int p = 0; p < n; ++p) f[nb[p]] += src[p];
    }
  }
}

void ConvNet::forward(const Matrix& x, Matrix& y, Activations* acts) const {
  if (x.cols() != input_dim()) {
    throw ConfigError("convnet expects " + std::to_string(input_dim()) + " inputs, got " + std::to_string(x.cols()));
  }
  const int n = cells();
  const Eigen::Index B = x.rows();
  if (acts) acts->resize(layers_.size() - 1);
  Matrix cur, next, cols;
  const Matrix* in = &x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& L = layers_[l];
    RowMap W(params_.data() + L.offset, L.out, static_cast<Eigen::Index>(L.in) * 9);
    Eigen::Map<const Vector> b(params_.data() + L.offset + static_cast<Eigen::Index>(L.out) * L.in * 9, L.out);
    next.resize(B, static_cast<Eigen::Index>(L.out) * n);
    for (Eigen::Index s = 0; s < B; ++s) {
      im2col(in->row(s).data(), L.in, cols);
      RowMapMut out(next.row(s).data(), L.out, n);
      out.noalias() = W * cols;
      out.colwise() += b;
    }
    if (l + 1 == layers_.size()) {
      y = std::move(next);
    } else {
      activate(spec_.activation, next);
      if (acts) {
        (*acts)[l] = std::move(next);
        in = &(*acts)[l];
      } else {
        cur = std::move(next);
        in = &cur;
      }
    }
  }
}

void ConvNet::backward(const Matrix& x, const Activations& acts, const Matrix& grad_y, Eigen::Ref<Vector> grad_params,
                       Matrix* grad_x) const {
  const int n = cells();
  const Eigen::Index B = x.rows();
  Matrix g = grad_y, cols, gcols;
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const auto& L = layers_[li];
    const Matrix& in = li == 0 ? x : acts[li - 1];
    const Eigen::Index K = static_cast<Eigen::Index>(L.in) * 9;
    RowMap W(params_.data() + L.offset, L.out, K);
    RowMapMut gW(grad_params.data() + L.offset, L.out, K);
    auto gb = grad_params.segment(L.offset + static_cast<Eigen::Index>(L.out) * K, L.out);
    const bool need_input = li > 0 || grad_x != nullptr;
    Matrix gin;
    if (need_input) gin.setZero(B, static_cast<Eigen::Index>(L.in) * n);
    for (Eigen::Index s = 0; s < B; ++s) {
      RowMap go(g.row(s).data(), L.out, n);
      im2col(in.row(s).data(), L.in, cols);
      gW.noalias() += go * cols.transpose();
      gb += go.rowwise().sum();
      if (need_input) {
        gcols.noalias() = W.transpose() * go;
        col2im(gcols, L.in, gin.row(s).data());
      }
    }
    if (li == 0) {
      if (grad_x) *grad_x += gin;
    } else {
      activate_backward(spec_.activation, acts[li - 1], gin);
      g = std::move(gin);
    }
  }
}

std::unique_ptr<DiffNet> make_net(const nlohmann::json& spec, std::uint64_t seed) {
  const std::string kind = spec.at("kind").get<std::string>();
  if (kind == "mlp") {
    MlpSpec s;
    s.input_dim = spec.at("input_dim").get<int>();
    s.output_dim = spec.at("output_dim").get<int>();
    s.hidden_layers = spec.at("hidden_layers").get<int>();
    s.width = spec.at("width").get<int>();
    s.activation = parse_activation(spec.value("activation", "tanh"));
    return std::make_unique<Mlp>(s, seed);
  }
  if (kind == "convnet") {
    ConvSpec s;
    s.rows = spec.at("rows").get<int>();
    s.cols = spec.at("cols").get<int>();
    s.in_channels = spec.at("in_channels").get<int>();
    s.out_channels = spec.at("out_channels").get<int>();
    s.hidden_channels = spec.at("hidden_channels").get<int>();
    s.layers = spec.at("layers").get<int>();
    s.activation = parse_activation(spec.value("activation", "tanh"));
    return std::make_unique<ConvNet>(s, seed);
  }
  throw ConfigError("unknown network kind '" + kind + "'");
}

}  // namespace hybrid::nets
