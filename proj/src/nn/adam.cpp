#include "fldlt3/nn/adam.hpp"

#include <cmath>

#include "fldlt3/errors.hpp"

namespace fldlt3::nn {

AdamState::AdamState(const ConstParamList& params, double lr) : learning_rate(lr) {
  for (const Param* p : params) {
    first_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    second_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void adam_step(const ParamList& params, AdamState& state) {
  if (params.size() != state.first_moment.size()) {
    throw ShapeMismatch("adam: parameter count does not match optimizer state");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Param& p = *params[i];
    if (p.grad.rows() != state.first_moment[i].rows() ||
        p.grad.cols() != state.first_moment[i].cols() ||
        p.value.rows() != p.grad.rows() || p.value.cols() != p.grad.cols()) {
      throw ShapeMismatch("adam: shape mismatch at " + p.name);
    }
  }
  ++state.step;
  const double correction1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param& p = *params[i];
    Matrix& m = state.first_moment[i];
    Matrix& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * p.grad;
    v = state.beta2 * v + (1.0 - state.beta2) * p.grad.cwiseAbs2();
    p.value.array() -= state.learning_rate * (m.array() / correction1) /
                       ((v.array() / correction2).sqrt() + state.epsilon);
  }
}

}  // namespace fldlt3::nn
