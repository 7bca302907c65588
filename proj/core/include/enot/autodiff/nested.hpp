#pragma once

#include <functional>

#include "enot/autodiff/tape.hpp"
#include "enot/nn/mlp.hpp"

namespace enot::ad {

struct InputGradientJacobian {
  Matrix input_grad;        // row i: grad_x f(x_i)
  Vector param_grad;        // d/dtheta sum_i f(x_i)
  Vector mixed_param_grad;  // d/dtheta sum_i <grad_x f(x_i), u_i>
};

/// Forward-over-reverse pass through a scalar MLP: the reverse sweep for
/// sum_i f(x_i) carries tangents seeded by the input direction `u` (n x d),
/// which yields sum_i (d^2 f / dtheta dx)(x_i) u_i in one sweep.
InputGradientJacobian input_gradient_jvp(const nn::PotentialNetwork& net, const Matrix& x, const Matrix& u);

/// Scalar function of the batched input gradient, recorded on a tape.
using GradientFunctional = std::function<Var(Tape&, Var)>;

struct NestedGradient {
  double value = 0.0;  // downstream(grad_x f(x))
  Vector param_grad;   // d/dtheta downstream(grad_x f_theta(x))
};

/// d/dtheta downstream(grad_x f_theta(x)) for a batch x. Throws
/// NonSmoothActivation for activations without a continuous first derivative.
NestedGradient grad_of_input_grad(const nn::PotentialNetwork& net, const Matrix& x,
                                  const GradientFunctional& downstream);

}  // namespace enot::ad
