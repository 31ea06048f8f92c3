#pragma once

// Central finite differences against the analytic backward pass. The loss
// is a fixed random linear functional of every step's output, so dLoss/dOut
// is known exactly.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "fldlt3/nn/param.hpp"

namespace gradcheck {

using fldlt3::nn::Matrix;
using fldlt3::nn::ParamList;

struct Result {
  double worst_rel = 0.0;
  std::size_t checked = 0;
};

inline double rel_diff(double a, double n) {
  // absolute floor for gradients that are zero up to rounding
  const double scale = std::max({std::fabs(a), std::fabs(n), 1e-6});
  return std::fabs(a - n) / scale;
}

/// `loss()` runs a forward pass and returns the scalar loss. `analytic()`
/// zeroes gradients, runs forward + backward, leaving grads in `params`.
inline Result check(const ParamList& params, const std::function<double()>& loss,
                    const std::function<void()>& analytic, double eps = 1e-5,
                    std::size_t max_per_param = 0, std::mt19937_64* rng = nullptr) {
  analytic();
  std::vector<Matrix> grads;
  for (auto* p : params) grads.push_back(p->grad);
  Result r;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& v = params[i]->value;
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(v.size()));
    for (Eigen::Index j = 0; j < v.size(); ++j) idx[static_cast<std::size_t>(j)] = j;
    if (max_per_param > 0 && idx.size() > max_per_param && rng != nullptr) {
      std::shuffle(idx.begin(), idx.end(), *rng);
      idx.resize(max_per_param);
    }
    for (Eigen::Index j : idx) {
      double* x = v.data() + j;
      const double orig = *x;
      *x = orig + eps;
      const double up = loss();
      *x = orig - eps;
      const double down = loss();
      *x = orig;
      const double numeric = (up - down) / (2 * eps);
      r.worst_rel = std::max(r.worst_rel, rel_diff(grads[i].data()[j], numeric));
      ++r.checked;
    }
  }
  return r;
}

}  // namespace gradcheck
