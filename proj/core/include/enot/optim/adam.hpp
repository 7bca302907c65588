#pragma once

#include <cstdint>

#include "enot/common.hpp"

namespace enot::optim {

struct AdamState {
  Vector m;
  Vector v;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState zeros(Eigen::Index size, double beta1, double beta2, double eps = 1e-8);
};

/// One bias-corrected Adam update of `params` in place. Throws ShapeMismatch
/// or NonFiniteGradient; on throw neither params nor state are modified.
void adam_step(AdamState& state, Vector& params, const Vector& grads, double lr);

struct CosineSchedule {
  double lr0 = 3e-4;
  double lr_final = 1e-4;
  std::int64_t total_steps = 1;
};

/// lr_final + (lr0 - lr_final) (1 + cos(pi t / total)) / 2 for 0 <= t <= total.
double cosine_lr(const CosineSchedule& schedule, std::int64_t t);

}  // namespace enot::optim
