#include "enot/autodiff/nested.hpp"

#include <vector>

#include "enot/autodiff/dual.hpp"

namespace enot::ad {

InputGradientJacobian input_gradient_jvp(const nn::PotentialNetwork& net, const Matrix& x, const Matrix& u) {
  require(x.cols() == net.input_dim(), ErrorKind::DimMismatch, "input dimension mismatch");
  require(u.rows() == x.rows() && u.cols() == x.cols(), ErrorKind::ShapeMismatch, "direction must match x");
  require(net.output_dim() == 1, ErrorKind::DimMismatch, "input gradient needs a scalar potential");

  const int layers = net.num_layers();
  const auto L = static_cast<std::size_t>(layers);
  std::vector<Matrix> weights(L);
  std::vector<Vector> biases(L);
  for (std::size_t l = 0; l < L; ++l) {
    weights[l] = net.weight(static_cast<int>(l));
    biases[l] = net.bias(static_cast<int>(l));
  }

  // Forward: activations[l] feeds layer l; pre[l] is its pre-activation.
  std::vector<DualBlock> activations(L);
  std::vector<DualBlock> pre(L);
  activations[0] = DualBlock(x, u);
  for (std::size_t l = 0; l < L; ++l) {
    pre[l] = affine_bt(activations[l], weights[l], biases[l]);
    if (l + 1 < L) activations[l + 1] = activate(pre[l], net.activation());
  }

  // Reverse sweep of sum_i f(x_i), carrying tangents.
  nn::PotentialNetwork primal(net.layer_widths(), net.activation());
  nn::PotentialNetwork tangent(net.layer_widths(), net.activation());
  DualBlock g = DualBlock::constant(Matrix::Ones(x.rows(), 1));
  for (int l = layers - 1; l >= 0; --l) {
    const auto li = static_cast<std::size_t>(l);
    const DualBlock gw = transpose_matmul(g, activations[li]);
    const DualBlock gb = col_sum(g);
    primal.weight(l) = gw.primal;
    tangent.weight(l) = gw.tangent;
    primal.bias(l) = gb.primal.transpose();
    tangent.bias(l) = gb.tangent.transpose();
    const DualBlock up = matmul(g, weights[li]);
    if (l > 0)
      g = hadamard(up, activate_slope(pre[li - 1], net.activation()));
    else
      g = up;
  }
  return {std::move(g.primal), primal.params(), tangent.params()};
}

NestedGradient grad_of_input_grad(const nn::PotentialNetwork& net, const Matrix& x,
                                  const GradientFunctional& downstream) {
  require(smoothness_order(net.activation()) >= 1, ErrorKind::NonSmoothActivation,
          std::string(to_string(net.activation())) + " has a discontinuous derivative");
  const Matrix v = nn::input_gradient(net, x);
  Tape tape;
  const Var grad_leaf = tape.variable(v);
  const Var out = downstream(tape, grad_leaf);
  const Var wrt[] = {grad_leaf};
  const auto dv = tape.grad(out, wrt);
  NestedGradient result;
  result.value = tape.scalar_value(out);
  result.param_grad = input_gradient_jvp(net, x, dv[0]).mixed_param_grad;
  return result;
}

}  // namespace enot::ad
