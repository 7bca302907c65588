#include "enot/optim/adam.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace enot::optim {

AdamState AdamState::zeros(Eigen::Index size, double beta1, double beta2, double eps) {
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, ErrorKind::BadParams,
          "Adam betas must lie in [0, 1)");
  require(eps > 0.0, ErrorKind::BadParams, "Adam eps must be positive");
  AdamState s;
  s.m = Vector::Zero(size);
  s.v = Vector::Zero(size);
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.eps = eps;
  return s;
}

void adam_step(AdamState& state, Vector& params, const Vector& grads, double lr) {
  require(params.size() == grads.size() && state.m.size() == params.size() && state.v.size() == params.size(),
          ErrorKind::ShapeMismatch, "Adam state, parameters and gradients differ in length");
  require(lr >= 0.0, ErrorKind::BadParams, "learning rate must be non-negative");
  require(grads.allFinite(), ErrorKind::NonFiniteGradient, "gradient has non-finite entries");

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.cwiseAbs2();
  params.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + state.eps);
}

double cosine_lr(const CosineSchedule& schedule, std::int64_t t) {
  require(schedule.total_steps > 0, ErrorKind::BadParams, "cosine schedule needs total_steps > 0");
  require(t >= 0 && t <= schedule.total_steps, ErrorKind::OutOfRangeStep,
          "step " + std::to_string(t) + " outside [0, " + std::to_string(schedule.total_steps) + "]");
  if (t == schedule.total_steps) return schedule.lr_final;
  const double phase = std::numbers::pi * static_cast<double>(t) / static_cast<double>(schedule.total_steps);
  return schedule.lr_final + 0.5 * (schedule.lr0 - schedule.lr_final) * (1.0 + std::cos(phase));
}

}  // namespace enot::optim
