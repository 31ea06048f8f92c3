#pragma once

// Two-branch actor/critic network: a stack of rectified dense layers in
// parallel with an embedding layer feeding an LSTM cell, joined by one dense
// merge layer over the concatenated branch outputs.

#include <optional>
#include <random>
#include <vector>

#include "fldlt3/nn/dense.hpp"
#include "fldlt3/nn/lstm.hpp"

namespace fldlt3::nn {

struct NetShape {
  Eigen::Index input_dim = 1;
  Eigen::Index output_dim = 1;
  Eigen::Index ff_width = 64;
  int ff_depth = 5;
  Eigen::Index embed_width = 64;
  Eigen::Index lstm_units = 64;
  bool recurrent = true;  // false drops the recurrent branch entirely
  Activation output_activation = Activation::Identity;
};

/// Per-step caches of a forward pass over a sequence.
struct NetTape {
  struct Step {
    std::vector<DenseCache> ff;
    DenseCache embed;
    LSTMCache lstm;
    DenseCache merge;
  };
  std::vector<Step> steps;
  Eigen::Index batch = 0;

  [[nodiscard]] bool empty() const { return steps.empty(); }
};

class TwoBranchNet {
 public:
  TwoBranchNet() = default;
  explicit TwoBranchNet(const NetShape& shape);

  void initialize(std::mt19937_64& rng);

  [[nodiscard]] const NetShape& shape() const { return shape_; }
  [[nodiscard]] LSTMState initial_state(Eigen::Index batch = 1) const;

  /// One step without recording. Columns are batch entries.
  [[nodiscard]] Matrix forward(const Matrix& input, const LSTMState& state,
                               LSTMState& next_state) const;

  /// Unrolls over `inputs` from `initial`, recording a tape for backward.
  std::vector<Matrix> forward_sequence(const std::vector<Matrix>& inputs,
                                       const LSTMState& initial, NetTape& tape) const;

  /// Backpropagates through the whole recorded sequence. `grad_outputs[s]`
  /// is dLoss/dOutput at step s (zero matrices for steps without loss).
  /// Accumulates parameter gradients and returns dLoss/dInput per step.
  std::vector<Matrix> backward(const NetTape& tape, const std::vector<Matrix>& grad_outputs);

  void zero_grad();
  ParamList params();
  [[nodiscard]] ConstParamList params() const;
  [[nodiscard]] std::size_t num_parameters() const;

 private:
  Matrix merge_input(const Matrix& ff_out, const Matrix& hidden) const;

  NetShape shape_;
  std::vector<DenseLayer> ff_;
  DenseLayer embed_;
  LSTMCell lstm_;
  DenseLayer merge_;
};

/// target <- phi * online + (1 - phi) * target, element-wise.
void soft_update(TwoBranchNet& target, const TwoBranchNet& online, double phi);
void soft_update(const ParamList& target, const ConstParamList& online, double phi);

/// Exact parameter copy; shapes must match.
void copy_parameters(TwoBranchNet& target, const TwoBranchNet& source);

}  // namespace fldlt3::nn
