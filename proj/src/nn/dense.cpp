#include "fldlt3/nn/dense.hpp"

#include <cmath>

#include "fldlt3/errors.hpp"

namespace fldlt3::nn {

Matrix activate(const Matrix& pre, Activation act) {
  switch (act) {
    case Activation::Relu:
      return pre.cwiseMax(0.0);
    case Activation::Tanh:
      return pre.array().tanh().matrix();
    case Activation::Identity:
      break;
  }
  return pre;
}

DenseLayer::DenseLayer(std::string name, Eigen::Index in, Eigen::Index out, Activation act)
    : weight_(name + ".weight", out, in), bias_(name + ".bias", out, 1), activation_(act) {}

void DenseLayer::initialize(std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim()));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (Eigen::Index i = 0; i < weight_.value.size(); ++i) weight_.value.data()[i] = u(rng);
  for (Eigen::Index i = 0; i < bias_.value.size(); ++i) bias_.value.data()[i] = u(rng);
}

Matrix DenseLayer::forward(const Matrix& input) const {
  if (input.rows() != in_dim()) throw ShapeMismatch(weight_.name + ": input size mismatch");
  Matrix pre = weight_.value * input;
  pre.colwise() += bias_.value.col(0);
  return activate(pre, activation_);
}

Matrix DenseLayer::forward(const Matrix& input, DenseCache& cache) const {
  cache.input = input;
  cache.output = forward(input);
  return cache.output;
}

Matrix DenseLayer::backward(const Matrix& grad_output, const DenseCache& cache) {
  if (grad_output.rows() != out_dim() || grad_output.cols() != cache.output.cols()) {
    throw ShapeMismatch(weight_.name + ": output gradient shape mismatch");
  }
  Matrix grad_pre;
  switch (activation_) {
    case Activation::Relu:
      grad_pre = (cache.output.array() > 0.0).select(grad_output, 0.0);
      break;
    case Activation::Tanh:
      grad_pre = grad_output.cwiseProduct((1.0 - cache.output.array().square()).matrix());
      break;
    case Activation::Identity:
      grad_pre = grad_output;
      break;
  }
  weight_.grad.noalias() += grad_pre * cache.input.transpose();
  bias_.grad.col(0) += grad_pre.rowwise().sum();
  return weight_.value.transpose() * grad_pre;
}

}  // namespace fldlt3::nn
