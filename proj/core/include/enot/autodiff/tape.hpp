#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "enot/autodiff/activation.hpp"
#include "enot/common.hpp"

namespace enot::ad {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid until the tape is reset.
struct Var {
  int id = -1;
  Tape* tape = nullptr;

  bool valid() const { return tape != nullptr && id >= 0; }
};

enum class OpKind : std::uint8_t {
  leaf,
  add,
  sub,
  mul,
  neg,
  scale,
  add_scalar,
  scale_by,
  matmul,
  matmul_bt,
  add_bias,
  affine,
  activation,
  sum,
  mean,
  row_sum,
  square,
  sqrt,
  acos_clamped,
  expectile,
  row_normalize,
};

/// Margin used to keep acos arguments inside (-1, 1).
inline constexpr double kAcosClamp = 1e-12;

/// Reverse-mode tape over dense matrix-valued nodes.
///
/// Nodes are appended in construction order, so operand ids are always smaller
/// than the node id. Values are computed eagerly whenever all operands are
/// bound; `evaluate` replays the whole tape with new leaf bindings. `reset`
/// drops all nodes but keeps their storage, so a tape reused across training
/// steps with fixed shapes does not reallocate.
class Tape {
 public:
  using Binding = std::pair<Var, Matrix>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable leaf with a bound value.
  Var variable(const Eigen::Ref<const Matrix>& value);
  /// Differentiable leaf whose value is supplied later through `evaluate`.
  Var variable(Eigen::Index rows, Eigen::Index cols);
  /// Non-differentiable leaf.
  Var constant(const Eigen::Ref<const Matrix>& value);
  Var scalar(double value);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var neg(Var a);
  Var scale(Var a, double c);
  Var add_scalar(Var a, double c);
  Var scale_by(Var s, Var a);  // s is 1x1
  Var matmul(Var a, Var b);
  Var matmul_bt(Var a, Var b);  // a * b^T
  Var add_bias(Var x, Var bias);  // bias is 1 x cols, broadcast over rows
  Var affine(Var x, Var w, Var bias);  // x * w^T + bias in one node
  Var activation(Var z, Activation kind);
  Var sum(Var a);
  Var mean(Var a);
  Var row_sum(Var a);
  Var square(Var a);
  Var sqrt(Var a);  // derivative taken as 0 at 0
  Var acos_clamped(Var a);  // argument clamped to [-1 + 1e-12, 1 - 1e-12], zero slope outside
  Var expectile(Var u, double tau);  // |tau - 1[u <= 0]| u^2 elementwise
  Var row_normalize(Var a);

  const Matrix& value(Var v) const;
  double scalar_value(Var v) const;
  bool is_bound(Var v) const;

  /// Rebinds the given leaves, recomputes every node and returns the value of
  /// the last node, which must be 1x1.
  double evaluate(std::span<const Binding> bindings);

  /// Gradient of the scalar `output` with respect to each leaf in `wrt`.
  /// Leaves with no path to `output` get exact zeros of their own shape.
  std::vector<Matrix> grad(Var output, std::span<const Var> wrt);

  void reset();
  std::size_t size() const { return count_; }
  OpKind op(Var v) const { return node(v).op; }

 private:
  struct Node {
    OpKind op = OpKind::leaf;
    int a = -1;
    int b = -1;
    int c = -1;
    double param = 0.0;
    Activation act = Activation::elu;
    bool requires_grad = false;
    bool bound = false;
    Matrix value;
  };

  Node& push(OpKind op, int a, int b);
  const Node& node(Var v) const;
  int check(Var v) const;
  Var unary(OpKind op, Var a, double param = 0.0);
  Var binary(OpKind op, Var a, Var b);
  void compute(Node& n);
  void backprop(int id);

  std::vector<Node> nodes_;
  std::size_t count_ = 0;
  std::vector<Matrix> adjoint_;
  std::vector<char> has_adjoint_;
  std::vector<char> reaches_;
  Matrix scratch_;
};

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator-(Var a);
Var operator*(double c, Var a);
Var operator*(Var a, double c);
Var operator+(Var a, double c);

/// Concatenates gradients column-major into one flat vector.
Vector flatten(std::span<const Matrix> grads);

}  // namespace enot::ad
