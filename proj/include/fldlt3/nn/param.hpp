#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fldlt3::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// A named learnable array and its accumulated gradient. Biases are stored
/// as single-column matrices.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;

  Param() = default;
  Param(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}
};

using ParamList = std::vector<Param*>;
using ConstParamList = std::vector<const Param*>;

}  // namespace fldlt3::nn
