#pragma once

#include <random>
#include <string>

#include "fldlt3/nn/param.hpp"

namespace fldlt3::nn {

enum class Activation { Relu, Tanh, Identity };

/// Values kept from a forward pass for the backward pass. Columns are batch
/// entries.
struct DenseCache {
  Matrix input;
  Matrix output;
};

class DenseLayer {
 public:
  DenseLayer() = default;
  DenseLayer(std::string name, Eigen::Index in, Eigen::Index out, Activation act);

  /// Uniform in +-1/sqrt(fan_in) for weights and biases.
  void initialize(std::mt19937_64& rng);

  [[nodiscard]] Matrix forward(const Matrix& input) const;
  Matrix forward(const Matrix& input, DenseCache& cache) const;
  /// Accumulates parameter gradients, returns the gradient w.r.t. the input.
  Matrix backward(const Matrix& grad_output, const DenseCache& cache);

  [[nodiscard]] Eigen::Index in_dim() const { return weight_.value.cols(); }
  [[nodiscard]] Eigen::Index out_dim() const { return weight_.value.rows(); }
  [[nodiscard]] Activation activation() const { return activation_; }

  Param& weight() { return weight_; }
  Param& bias() { return bias_; }
  [[nodiscard]] const Param& weight() const { return weight_; }
  [[nodiscard]] const Param& bias() const { return bias_; }

  void collect(ParamList& out) { out.push_back(&weight_); out.push_back(&bias_); }
  void collect(ConstParamList& out) const { out.push_back(&weight_); out.push_back(&bias_); }

 private:
  Param weight_;
  Param bias_;
  Activation activation_ = Activation::Identity;
};

Matrix activate(const Matrix& pre, Activation act);

}  // namespace fldlt3::nn
