#pragma once

#include <vector>

#include "fldlt3/nn/param.hpp"

namespace fldlt3::nn {

struct AdamState {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long long step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;

  AdamState() = default;
  AdamState(const ConstParamList& params, double lr);
};

/// Bias-corrected adaptive-moment update of every parameter from its
/// accumulated gradient.
void adam_step(const ParamList& params, AdamState& state);

}  // namespace fldlt3::nn
