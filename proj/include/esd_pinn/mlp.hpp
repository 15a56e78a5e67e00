#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace esd {

template <typename Scalar = double>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar = double>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// n x 4 block, one row per time point.
template <typename Scalar = double>
using OutputRows = Eigen::Matrix<Scalar, Eigen::Dynamic, 4>;

/// Flat view of every weight and bias (per layer: W row-major, then b).
template <typename Scalar = double>
using ParameterVector = Vector<Scalar>;

inline constexpr int kOutputDim = 4;

/// Hyperbolic tangent, saturating to +-1 without overflow.
template <typename Scalar>
Scalar tanh_activation(Scalar x) {
  using std::tanh;
  return tanh(x);
}

struct LayerShape {
  int fan_in = 1;
  int fan_out = 1;

  bool operator==(const LayerShape&) const = default;
};

template <typename Scalar = double>
struct Layer {
  Matrix<Scalar> weights;  // fan_in x fan_out
  Vector<Scalar> bias;     // fan_out

  LayerShape shape() const {
    return {static_cast<int>(weights.rows()), static_cast<int>(weights.cols())};
  }
};

/// Affine map applied to t before the first layer: t' = scale * t + shift.
struct InputScaling {
  double scale = 1.0;
  double shift = 0.0;

  /// Maps [a, b] onto [-1, 1].
  static InputScaling to_unit_interval(double a, double b) {
    return {2.0 / (b - a), -(a + b) / (b - a)};
  }

  bool operator==(const InputScaling&) const = default;
};

/// Fully connected tanh network R -> R^4 with a linear output layer.
///
/// Hidden layers compute a = tanh(a_prev * W + b); the last layer is
/// a_prev * W + b with no activation. Immutable once constructed.
template <typename Scalar = double>
class Mlp {
 public:
  Mlp(std::vector<Layer<Scalar>> layers, InputScaling scaling = {})
      : layers_(std::move(layers)), scaling_(scaling) {
    validate();
  }

  const std::vector<Layer<Scalar>>& layers() const { return layers_; }
  const Layer<Scalar>& layer(std::size_t i) const { return layers_[i]; }
  std::size_t num_layers() const { return layers_.size(); }
  const InputScaling& input_scaling() const { return scaling_; }

  std::vector<LayerShape> shapes() const {
    std::vector<LayerShape> out;
    out.reserve(layers_.size());
    for (const auto& l : layers_) out.push_back(l.shape());
    return out;
  }

  Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
  }

 private:
  void validate() const {
    if (layers_.empty()) throw std::invalid_argument("network needs at least one layer");
    if (layers_.front().weights.rows() != 1)
      throw std::invalid_argument("first layer must take a single input (t)");
    if (layers_.back().weights.cols() != kOutputDim)
      throw std::invalid_argument("last layer must have 4 outputs");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& l = layers_[i];
      if (l.weights.rows() < 1 || l.weights.cols() < 1)
        throw std::invalid_argument("layer " + std::to_string(i) + " has an empty shape");
      if (l.bias.size() != l.weights.cols())
        throw std::invalid_argument("layer " + std::to_string(i) + " bias length mismatch");
      if (i > 0 && layers_[i - 1].weights.cols() != l.weights.rows())
        throw std::invalid_argument("layer " + std::to_string(i) + " does not chain");
      if (!l.weights.allFinite() || !l.bias.allFinite())
        throw std::invalid_argument("layer " + std::to_string(i) + " has non-finite entries");
    }
    if (!std::isfinite(scaling_.scale) || !std::isfinite(scaling_.shift))
      throw std::invalid_argument("non-finite input scaling");
  }

  std::vector<Layer<Scalar>> layers_;
  InputScaling scaling_;
};

namespace detail {

// Uniform double in [0, 1) from the top 53 bits; avoids the
// implementation-defined std::uniform_real_distribution.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Glorot-uniform weights in [-L, L], L = sqrt(6 / (fan_in + fan_out)), zero biases.
/// Fully determined by `seed`.
template <typename Scalar = double>
Mlp<Scalar> init_network(int hidden_layers, int hidden_width, std::uint64_t seed,
                         InputScaling scaling = {}) {
  if (hidden_layers < 1) throw std::invalid_argument("hidden_layers must be >= 1");
  if (hidden_width < 1) throw std::invalid_argument("hidden_width must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<Layer<Scalar>> layers;
  layers.reserve(hidden_layers + 1);
  for (int v = 0; v <= hidden_layers; ++v) {
    const int fan_in = v == 0 ? 1 : hidden_width;
    const int fan_out = v == hidden_layers ? kOutputDim : hidden_width;
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    Layer<Scalar> layer{Matrix<Scalar>(fan_in, fan_out), Vector<Scalar>::Zero(fan_out)};
    // Row-major fill so the draw order matches the flattened layout.
    for (int i = 0; i < fan_in; ++i)
      for (int j = 0; j < fan_out; ++j)
        layer.weights(i, j) = Scalar(bound * (2.0 * detail::unit_uniform(rng) - 1.0));
    layers.push_back(std::move(layer));
  }
  return Mlp<Scalar>(std::move(layers), scaling);
}

/// Evaluates the network at every entry of `times`; returns n x 4.
template <typename Scalar, typename Derived>
OutputRows<Scalar> forward_rows(const Mlp<Scalar>& net, const Eigen::MatrixBase<Derived>& times) {
  const auto& sc = net.input_scaling();
  Matrix<Scalar> a = (Scalar(sc.scale) * times.derived().template cast<Scalar>().array() +
                      Scalar(sc.shift))
                         .matrix();
  const std::size_t last = net.num_layers() - 1;
  for (std::size_t v = 0; v < last; ++v) {
    const auto& l = net.layer(v);
    Matrix<Scalar> z = a * l.weights;
    z.rowwise() += l.bias.transpose();
    a = z.unaryExpr([](Scalar x) { return tanh_activation(x); });
  }
  const auto& out = net.layer(last);
  OutputRows<Scalar> y = a * out.weights;
  y.rowwise() += out.bias.transpose();
  return y;
}

/// (X1, X2, X3, X4)(t).
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 1> forward(const Mlp<Scalar>& net, Scalar t) {
  Vector<Scalar> times(1);
  times(0) = t;
  return forward_rows(net, times).row(0).transpose();
}

template <typename Scalar>
ParameterVector<Scalar> flatten(const Mlp<Scalar>& net) {
  ParameterVector<Scalar> v(net.parameter_count());
  Eigen::Index k = 0;
  for (const auto& l : net.layers()) {
    using RowMajor = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<RowMajor>(v.data() + k, l.weights.rows(), l.weights.cols()) = l.weights;
    k += l.weights.size();
    v.segment(k, l.bias.size()) = l.bias;
    k += l.bias.size();
  }
  return v;
}

/// Rebuilds a network with `shape_template`'s shapes and scaling from a flat vector.
template <typename Scalar, typename Derived>
Mlp<Scalar> unflatten(const Mlp<Scalar>& shape_template, const Eigen::MatrixBase<Derived>& v) {
  if (v.size() != shape_template.parameter_count()) {
    throw std::invalid_argument("parameter vector length " + std::to_string(v.size()) +
                                " does not match network (" +
                                std::to_string(shape_template.parameter_count()) + ")");
  }
  using RowMajor = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const ParameterVector<Scalar> flat = v;
  std::vector<Layer<Scalar>> layers;
  layers.reserve(shape_template.num_layers());
  Eigen::Index k = 0;
  for (const auto& l : shape_template.layers()) {
    Layer<Scalar> out;
    out.weights = Eigen::Map<const RowMajor>(flat.data() + k, l.weights.rows(), l.weights.cols());
    k += l.weights.size();
    out.bias = flat.segment(k, l.bias.size());
    k += l.bias.size();
    layers.push_back(std::move(out));
  }
  return Mlp<Scalar>(std::move(layers), shape_template.input_scaling());
}

}  // namespace esd
