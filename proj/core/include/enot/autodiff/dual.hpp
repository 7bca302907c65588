#pragma once

#include "enot/autodiff/activation.hpp"
#include "enot/common.hpp"

namespace enot::ad {

/// Forward-mode carrier: a block of primal values with one tangent direction.
struct DualBlock {
  Matrix primal;
  Matrix tangent;

  DualBlock() = default;
  DualBlock(Matrix p, Matrix t);

  static DualBlock constant(const Matrix& p);
};

/// x W^T + b with W and b held fixed (tangent flows through x only).
DualBlock affine_bt(const DualBlock& x, const Matrix& weight, const Vector& bias);
/// g W with W held fixed.
DualBlock matmul(const DualBlock& g, const Matrix& weight);
/// g^T a; the product rule over both factors.
DualBlock transpose_matmul(const DualBlock& g, const DualBlock& a);
DualBlock hadamard(const DualBlock& a, const DualBlock& b);
DualBlock activate(const DualBlock& z, Activation kind);
/// sigma'(z) with tangent sigma''(z) * dz.
DualBlock activate_slope(const DualBlock& z, Activation kind);
/// Column sums as a 1 x cols block.
DualBlock col_sum(const DualBlock& a);

}  // namespace enot::ad
