#pragma once

// Dense feed-forward networks with hand-written reverse-mode differentiation.
// Each layer is affine followed by an elementwise activation; the forward pass
// keeps every layer's input and pre-activation so the backward pass can
// replay the chain rule from the output back to the input.

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "eccentric/common.hpp"
#include "eccentric/random.hpp"

namespace eccentric {

enum class Activation { leaky_relu, relu, sigmoid, identity };

inline std::string_view to_string(Activation a) {
  switch (a) {
  case Activation::leaky_relu:
    return "leaky-relu";
  case Activation::relu:
    return "relu";
  case Activation::sigmoid:
    return "sigmoid";
  case Activation::identity:
    return "identity";
  }
  return "?";
}

inline Activation parse_activation(std::string_view name) {
  if (name == "leaky-relu")
    return Activation::leaky_relu;
  if (name == "relu")
    return Activation::relu;
  if (name == "sigmoid")
    return Activation::sigmoid;
  if (name == "identity")
    return Activation::identity;
  throw ValidationError("unknown activation '" + std::string(name) + "'");
}

inline constexpr double kLeakySlope = 0.1;

namespace detail {

inline double activate(Activation act, double x) {
  switch (act) {
  case Activation::leaky_relu:
    return x > 0.0 ? x : kLeakySlope * x;
  case Activation::relu:
    return x > 0.0 ? x : 0.0;
  case Activation::sigmoid:
    return 1.0 / (1.0 + std::exp(-x));
  case Activation::identity:
    return x;
  }
  return x;
}

// Derivative expressed through the pre-activation x and output y.
inline double activate_derivative(Activation act, double x, double y) {
  switch (act) {
  case Activation::leaky_relu:
    return x > 0.0 ? 1.0 : kLeakySlope;
  case Activation::relu:
    return x > 0.0 ? 1.0 : 0.0;
  case Activation::sigmoid:
    return y * (1.0 - y);
  case Activation::identity:
    return 1.0;
  }
  return 1.0;
}

} // namespace detail

struct DenseNetSpec {
  std::vector<int> widths;             // input, hidden..., output
  std::vector<Activation> activations; // one per affine layer

  std::size_t layers() const { return activations.size(); }
  int input_width() const { return widths.front(); }
  int output_width() const { return widths.back(); }

  void validate() const {
    require(widths.size() >= 2, "network needs at least an input and an output width");
    for (int w : widths)
      require(w > 0, "network widths must be positive");
    require(activations.size() + 1 == widths.size(),
            "network needs one activation per layer (" + std::to_string(widths.size() - 1) +
                " layers, " + std::to_string(activations.size()) + " activations)");
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l)
      n += static_cast<std::size_t>(widths[l + 1]) * (widths[l] + 1);
    return n;
  }
};

/// Gradients with the same shapes as a network's parameters.
struct DenseGrad {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

struct ForwardCache {
  std::vector<Matrix> inputs; // input to layer l (rows = items)
  std::vector<Matrix> pre;    // affine output of layer l
  Matrix output;
};

class DenseNet {
public:
  DenseNet() = default;

  explicit DenseNet(DenseNetSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    for (std::size_t l = 0; l < spec_.layers(); ++l) {
      weights_.push_back(Matrix::Zero(spec_.widths[l + 1], spec_.widths[l]));
      biases_.push_back(Vector::Zero(spec_.widths[l + 1]));
    }
  }

  /// Glorot-uniform weights, zero biases.
  static DenseNet initialized(DenseNetSpec spec, Rng &rng) {
    DenseNet net(std::move(spec));
    for (auto &w : net.weights_) {
      double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j)
          w(i, j) = rng.uniform(-limit, limit);
    }
    return net;
  }

  const DenseNetSpec &spec() const { return spec_; }
  std::vector<Matrix> &weights() { return weights_; }
  const std::vector<Matrix> &weights() const { return weights_; }
  std::vector<Vector> &biases() { return biases_; }
  const std::vector<Vector> &biases() const { return biases_; }

  /// Forward pass over a batch (one item per row), keeping intermediates.
  ForwardCache forward_cached(const Matrix &input) const {
    require(input.cols() == spec_.input_width(),
            "network input width " + std::to_string(input.cols()) + " does not match " +
                std::to_string(spec_.input_width()));
    ForwardCache cache;
    Matrix x = input;
    for (std::size_t l = 0; l < spec_.layers(); ++l) {
      Matrix pre = x * weights_[l].transpose();
      pre.rowwise() += biases_[l].transpose();
      Matrix out = pre.unaryExpr(
          [act = spec_.activations[l]](double v) { return detail::activate(act, v); });
      cache.inputs.push_back(std::move(x));
      cache.pre.push_back(std::move(pre));
      x = std::move(out);
    }
    cache.output = std::move(x);
    return cache;
  }

  Matrix forward(const Matrix &input) const { return forward_cached(input).output; }

  Vector forward(const Vector &input) const {
    Matrix row = input.transpose();
    return forward(row).row(0).transpose();
  }

  /// Reverse pass: given dL/d(output), accumulate parameter gradients into
  /// `grad` and return dL/d(input).
  Matrix backward(const ForwardCache &cache, const Matrix &grad_output, DenseGrad &grad) const {
    require(grad_output.rows() == cache.output.rows() &&
                grad_output.cols() == cache.output.cols(),
            "backward: gradient shape does not match the forward output");
    if (grad.weights.empty())
      grad = zero_grad();
    Matrix upstream = grad_output;
    for (std::size_t l = spec_.layers(); l-- > 0;) {
      const Matrix &pre = cache.pre[l];
      const Matrix &out = (l + 1 < spec_.layers()) ? cache.inputs[l + 1] : cache.output;
      const Activation act = spec_.activations[l];
      Matrix delta(pre.rows(), pre.cols());
      for (Eigen::Index i = 0; i < pre.rows(); ++i)
        for (Eigen::Index j = 0; j < pre.cols(); ++j)
          delta(i, j) = upstream(i, j) * detail::activate_derivative(act, pre(i, j), out(i, j));
      grad.weights[l] += delta.transpose() * cache.inputs[l];
      grad.biases[l] += delta.colwise().sum().transpose();
      upstream = delta * weights_[l];
    }
    return upstream;
  }

  DenseGrad zero_grad() const {
    DenseGrad g;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      g.weights.push_back(Matrix::Zero(weights_[l].rows(), weights_[l].cols()));
      g.biases.push_back(Vector::Zero(biases_[l].size()));
    }
    return g;
  }

  /// Parameters flattened layer by layer: weights row-major, then biases.
  std::vector<double> flat_parameters() const {
    std::vector<double> flat;
    flat.reserve(spec_.parameter_count());
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      flat.insert(flat.end(), weights_[l].data(), weights_[l].data() + weights_[l].size());
      flat.insert(flat.end(), biases_[l].data(), biases_[l].data() + biases_[l].size());
    }
    return flat;
  }

  void set_flat_parameters(std::span<const double> flat) {
    require(flat.size() == spec_.parameter_count(), "parameter vector has the wrong length");
    std::size_t pos = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      std::copy_n(flat.begin() + pos, weights_[l].size(), weights_[l].data());
      pos += weights_[l].size();
      std::copy_n(flat.begin() + pos, biases_[l].size(), biases_[l].data());
      pos += biases_[l].size();
    }
  }

  bool operator==(const DenseNet &other) const {
    return spec_.widths == other.spec_.widths && spec_.activations == other.spec_.activations &&
           flat_parameters() == other.flat_parameters();
  }

private:
  DenseNetSpec spec_;
  std::vector<Matrix> weights_; // layer l: widths[l+1] x widths[l]
  std::vector<Vector> biases_;
};

inline std::vector<double> flatten(const DenseGrad &g) {
  std::vector<double> flat;
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    flat.insert(flat.end(), g.weights[l].data(), g.weights[l].data() + g.weights[l].size());
    flat.insert(flat.end(), g.biases[l].data(), g.biases[l].data() + g.biases[l].size());
  }
  return flat;
}

} // namespace eccentric
