#include "enot/autodiff/dual.hpp"

namespace enot::ad {

DualBlock::DualBlock(Matrix p, Matrix t) : primal(std::move(p)), tangent(std::move(t)) {
  require(primal.rows() == tangent.rows() && primal.cols() == tangent.cols(), ErrorKind::ShapeMismatch,
          "dual block primal and tangent shapes differ");
}

DualBlock DualBlock::constant(const Matrix& p) { return {p, Matrix::Zero(p.rows(), p.cols())}; }

DualBlock affine_bt(const DualBlock& x, const Matrix& weight, const Vector& bias) {
  require(x.primal.cols() == weight.cols() && bias.size() == weight.rows(), ErrorKind::ShapeMismatch,
          "affine layer shape mismatch");
  DualBlock out;
  out.primal.noalias() = x.primal * weight.transpose();
  out.primal.rowwise() += bias.transpose();
  out.tangent.noalias() = x.tangent * weight.transpose();
  return out;
}

DualBlock matmul(const DualBlock& g, const Matrix& weight) {
  require(g.primal.cols() == weight.rows(), ErrorKind::ShapeMismatch, "matmul shape mismatch");
  DualBlock out;
  out.primal.noalias() = g.primal * weight;
  out.tangent.noalias() = g.tangent * weight;
  return out;
}

DualBlock transpose_matmul(const DualBlock& g, const DualBlock& a) {
  require(g.primal.rows() == a.primal.rows(), ErrorKind::ShapeMismatch, "transpose_matmul shape mismatch");
  DualBlock out;
  out.primal.noalias() = g.primal.transpose() * a.primal;
  out.tangent.noalias() = g.tangent.transpose() * a.primal;
  out.tangent.noalias() += g.primal.transpose() * a.tangent;
  return out;
}

DualBlock hadamard(const DualBlock& a, const DualBlock& b) {
  require(a.primal.rows() == b.primal.rows() && a.primal.cols() == b.primal.cols(), ErrorKind::ShapeMismatch,
          "hadamard shape mismatch");
  DualBlock out;
  out.primal = a.primal.cwiseProduct(b.primal);
  out.tangent = a.tangent.cwiseProduct(b.primal) + a.primal.cwiseProduct(b.tangent);
  return out;
}

DualBlock activate(const DualBlock& z, Activation kind) {
  DualBlock out;
  Matrix slope;
  activate(kind, z.primal, out.primal);
  activate_d1(kind, z.primal, slope);
  out.tangent = slope.cwiseProduct(z.tangent);
  return out;
}

DualBlock activate_slope(const DualBlock& z, Activation kind) {
  DualBlock out;
  Matrix curvature;
  activate_d1(kind, z.primal, out.primal);
  activate_d2(kind, z.primal, curvature);
  out.tangent = curvature.cwiseProduct(z.tangent);
  return out;
}

DualBlock col_sum(const DualBlock& a) { return {a.primal.colwise().sum(), a.tangent.colwise().sum()}; }

}  // namespace enot::ad
