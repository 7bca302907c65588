#include "enot/autodiff/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace enot::ad {

namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Tape::Node& Tape::push(OpKind op, int a, int b) {
  if (count_ == nodes_.size()) nodes_.emplace_back();
  Node& n = nodes_[count_++];
  n.op = op;
  n.a = a;
  n.b = b;
  n.c = -1;
  n.param = 0.0;
  n.requires_grad = false;
  n.bound = true;
  return n;
}

const Tape::Node& Tape::node(Var v) const {
  return nodes_[static_cast<std::size_t>(check(v))];
}

int Tape::check(Var v) const {
  require(v.tape == this && v.id >= 0 && static_cast<std::size_t>(v.id) < count_,
          ErrorKind::BadParams, "variable does not belong to this tape");
  return v.id;
}

Var Tape::variable(const Eigen::Ref<const Matrix>& value) {
  Node& n = push(OpKind::leaf, -1, -1);
  n.value = value;
  n.requires_grad = true;
  return {static_cast<int>(count_ - 1), this};
}

Var Tape::variable(Eigen::Index rows, Eigen::Index cols) {
  Node& n = push(OpKind::leaf, -1, -1);
  n.value.setZero(rows, cols);
  n.requires_grad = true;
  n.bound = false;
  return {static_cast<int>(count_ - 1), this};
}

Var Tape::constant(const Eigen::Ref<const Matrix>& value) {
  Node& n = push(OpKind::leaf, -1, -1);
  n.value = value;
  return {static_cast<int>(count_ - 1), this};
}

Var Tape::scalar(double value) {
  Matrix m(1, 1);
  m(0, 0) = value;
  return variable(m);
}

Var Tape::unary(OpKind op, Var a, double param) {
  const int ia = check(a);
  Node& n = push(op, ia, -1);
  n.param = param;
  compute(n);
  return {static_cast<int>(count_ - 1), this};
}

Var Tape::binary(OpKind op, Var a, Var b) {
  const int ia = check(a);
  const int ib = check(b);
  const Matrix& va = nodes_[ia].value;
  const Matrix& vb = nodes_[ib].value;
  switch (op) {
    case OpKind::add:
    case OpKind::sub:
    case OpKind::mul:
      require(va.rows() == vb.rows() && va.cols() == vb.cols(), ErrorKind::ShapeMismatch,
              "elementwise op on " + shape(va) + " and " + shape(vb));
      break;
    case OpKind::scale_by:
      require(va.rows() == 1 && va.cols() == 1, ErrorKind::ShapeMismatch, "scale_by needs a 1x1 scale");
      break;
    case OpKind::matmul:
      require(va.cols() == vb.rows(), ErrorKind::ShapeMismatch, "matmul " + shape(va) + " * " + shape(vb));
      break;
    case OpKind::matmul_bt:
      require(va.cols() == vb.cols(), ErrorKind::ShapeMismatch,
              "matmul_bt " + shape(va) + " * (" + shape(vb) + ")^T");
      break;
    case OpKind::add_bias:
      require(vb.rows() == 1 && vb.cols() == va.cols(), ErrorKind::ShapeMismatch,
              "bias " + shape(vb) + " for " + shape(va));
      break;
    default:
      break;
  }
  Node& n = push(op, ia, ib);
  compute(n);
  return {static_cast<int>(count_ - 1), this};
}

Var Tape::add(Var a, Var b) { return binary(OpKind::add, a, b); }
Var Tape::sub(Var a, Var b) { return binary(OpKind::sub, a, b); }
Var Tape::mul(Var a, Var b) { return binary(OpKind::mul, a, b); }
Var Tape::neg(Var a) { return unary(OpKind::neg, a); }
Var Tape::scale(Var a, double c) { return unary(OpKind::scale, a, c); }
Var Tape::add_scalar(Var a, double c) { return unary(OpKind::add_scalar, a, c); }
Var Tape::scale_by(Var s, Var a) { return binary(OpKind::scale_by, s, a); }
Var Tape::matmul(Var a, Var b) { return binary(OpKind::matmul, a, b); }
Var Tape::matmul_bt(Var a, Var b) { return binary(OpKind::matmul_bt, a, b); }
Var Tape::add_bias(Var x, Var bias) { return binary(OpKind::add_bias, x, bias); }

Var Tape::affine(Var x, Var w, Var bias) {
  const int ix = check(x);
  const int iw = check(w);
  const int ib = check(bias);
  const Matrix& vx = nodes_[ix].value;
  const Matrix& vw = nodes_[iw].value;
  const Matrix& vb = nodes_[ib].value;
  require(vx.cols() == vw.cols(), ErrorKind::ShapeMismatch, "affine " + shape(vx) + " * (" + shape(vw) + ")^T");
  require(vb.rows() == 1 && vb.cols() == vw.rows(), ErrorKind::ShapeMismatch,
          "bias " + shape(vb) + " for weight " + shape(vw));
  Node& n = push(OpKind::affine, ix, iw);
  n.c = ib;
  compute(n);
  return {static_cast<int>(count_ - 1), this};
}
Var Tape::sum(Var a) { return unary(OpKind::sum, a); }
Var Tape::mean(Var a) { return unary(OpKind::mean, a); }
Var Tape::row_sum(Var a) { return unary(OpKind::row_sum, a); }
Var Tape::square(Var a) { return unary(OpKind::square, a); }
Var Tape::sqrt(Var a) { return unary(OpKind::sqrt, a); }
Var Tape::acos_clamped(Var a) { return unary(OpKind::acos_clamped, a); }
Var Tape::row_normalize(Var a) { return unary(OpKind::row_normalize, a); }

Var Tape::expectile(Var u, double tau) {
  require(tau >= 0.0 && tau < 1.0, ErrorKind::BadParams, "expectile level must lie in [0, 1)");
  return unary(OpKind::expectile, u, tau);
}

Var Tape::activation(Var z, Activation kind) {
  const int iz = check(z);
  Node& n = push(OpKind::activation, iz, -1);
  n.act = kind;
  compute(n);
  return {static_cast<int>(count_ - 1), this};
}

void Tape::compute(Node& n) {
  if (n.op == OpKind::leaf) return;
  const Node& na = nodes_[n.a];
  const Matrix& a = na.value;
  n.bound = na.bound;
  if (n.b >= 0) n.bound = n.bound && nodes_[n.b].bound;
  if (n.c >= 0) n.bound = n.bound && nodes_[n.c].bound;
  switch (n.op) {
    case OpKind::leaf:
      break;
    case OpKind::add:
      n.value = a + nodes_[n.b].value;
      break;
    case OpKind::sub:
      n.value = a - nodes_[n.b].value;
      break;
    case OpKind::mul:
      n.value = a.cwiseProduct(nodes_[n.b].value);
      break;
    case OpKind::neg:
      n.value = -a;
      break;
    case OpKind::scale:
      n.value = n.param * a;
      break;
    case OpKind::add_scalar:
      n.value = a.array() + n.param;
      break;
    case OpKind::scale_by:
      n.value = a(0, 0) * nodes_[n.b].value;
      break;
    case OpKind::matmul:
      n.value.noalias() = a * nodes_[n.b].value;
      break;
    case OpKind::matmul_bt:
      n.value.noalias() = a * nodes_[n.b].value.transpose();
      break;
    case OpKind::add_bias:
      n.value = a;
      n.value.rowwise() += nodes_[n.b].value.row(0);
      break;
    case OpKind::affine: {
      const Matrix& w = nodes_[n.b].value;
      n.value.resize(a.rows(), w.rows());
      n.value.rowwise() = nodes_[n.c].value.row(0);
      n.value.noalias() += a * w.transpose();
      break;
    }
    case OpKind::activation:
      activate(n.act, a, n.value);
      break;
    case OpKind::sum:
      n.value.resize(1, 1);
      n.value(0, 0) = a.sum();
      break;
    case OpKind::mean:
      n.value.resize(1, 1);
      n.value(0, 0) = a.size() > 0 ? a.sum() / static_cast<double>(a.size()) : 0.0;
      break;
    case OpKind::row_sum:
      n.value = a.rowwise().sum();
      break;
    case OpKind::square:
      n.value = a.array().square();
      break;
    case OpKind::sqrt:
      n.value = a.array().max(0.0).sqrt();
      break;
    case OpKind::acos_clamped:
      n.value = a.array().max(-1.0 + kAcosClamp).min(1.0 - kAcosClamp).acos();
      break;
    case OpKind::expectile: {
      const double tau = n.param;
      n.value = (a.array() > 0.0).select(tau * a.array().square(), (1.0 - tau) * a.array().square());
      break;
    }
    case OpKind::row_normalize:
      n.value = a.array().colwise() / a.rowwise().norm().array();
      break;
  }
}

const Matrix& Tape::value(Var v) const {
  const Node& n = node(v);
  require(n.bound, ErrorKind::UnboundLeaf, "value requested before all leaves were bound");
  return n.value;
}

double Tape::scalar_value(Var v) const {
  const Matrix& m = value(v);
  require(m.rows() == 1 && m.cols() == 1, ErrorKind::NonScalarOutput, "node is " + shape(m));
  return m(0, 0);
}

bool Tape::is_bound(Var v) const { return node(v).bound; }

double Tape::evaluate(std::span<const Binding> bindings) {
  require(count_ > 0, ErrorKind::BadParams, "evaluate on an empty tape");
  for (const auto& [leaf, value] : bindings) {
    Node& n = nodes_[static_cast<std::size_t>(check(leaf))];
    require(n.op == OpKind::leaf, ErrorKind::BadParams, "binding a non-leaf node");
    require(n.value.rows() == value.rows() && n.value.cols() == value.cols(), ErrorKind::ShapeMismatch,
            "binding " + shape(value) + " to leaf of shape " + shape(n.value));
    n.value = value;
    n.bound = true;
  }
  for (std::size_t i = 0; i < count_; ++i) {
    Node& n = nodes_[i];
    if (n.op == OpKind::leaf) {
      require(n.bound, ErrorKind::UnboundLeaf, "leaf " + std::to_string(i) + " has no value");
    } else {
      compute(n);
    }
  }
  const Matrix& out = nodes_[count_ - 1].value;
  require(out.rows() == 1 && out.cols() == 1, ErrorKind::NonScalarOutput, "final node is " + shape(out));
  require(std::isfinite(out(0, 0)), ErrorKind::NonFiniteValue, "forward value is not finite");
  return out(0, 0);
}

std::vector<Matrix> Tape::grad(Var output, std::span<const Var> wrt) {
  const int out = check(output);
  const Node& on = nodes_[out];
  require(on.value.rows() == 1 && on.value.cols() == 1, ErrorKind::NonScalarOutput,
          "gradient of a " + shape(on.value) + " node");
  require(on.bound, ErrorKind::UnboundLeaf, "gradient requested before all leaves were bound");

  if (adjoint_.size() < count_) adjoint_.resize(count_);
  has_adjoint_.assign(count_, 0);
  reaches_.assign(count_, 0);
  for (const Var& w : wrt) {
    const int id = check(w);
    require(nodes_[id].op == OpKind::leaf, ErrorKind::BadParams, "gradient requested for a non-leaf");
    if (nodes_[id].requires_grad) reaches_[id] = 1;
  }
  for (int i = 0; i <= out; ++i) {
    const Node& n = nodes_[i];
    if (n.op == OpKind::leaf) continue;
    reaches_[i] = reaches_[n.a] || (n.b >= 0 && reaches_[n.b]) || (n.c >= 0 && reaches_[n.c]);
  }

  if (reaches_[out]) {
    adjoint_[out].setOnes(1, 1);
    has_adjoint_[out] = 1;
    for (int i = out; i >= 0; --i) {
      if (reaches_[i] && has_adjoint_[i] && nodes_[i].op != OpKind::leaf) backprop(i);
    }
  }

  std::vector<Matrix> result;
  result.reserve(wrt.size());
  for (const Var& w : wrt) {
    const Node& n = nodes_[w.id];
    if (has_adjoint_[w.id])
      result.push_back(adjoint_[w.id]);
    else
      result.push_back(Matrix::Zero(n.value.rows(), n.value.cols()));
  }
  return result;
}

void Tape::backprop(int id) {
  const Node& n = nodes_[id];
  const Matrix& g = adjoint_[id];
  const Matrix& a = nodes_[n.a].value;
  const bool ra = reaches_[n.a] != 0;
  const bool rb = n.b >= 0 && reaches_[n.b] != 0;

  auto acc = [this](int k, const auto& expr) {
    if (has_adjoint_[k]) {
      adjoint_[k] += expr;
    } else {
      adjoint_[k] = expr;
      has_adjoint_[k] = 1;
    }
  };
  auto acc_product = [this](int k, const auto& product) {
    if (has_adjoint_[k]) {
      adjoint_[k].noalias() += product;
    } else {
      adjoint_[k].noalias() = product;
      has_adjoint_[k] = 1;
    }
  };

  switch (n.op) {
    case OpKind::leaf:
      break;
    case OpKind::add:
      if (ra) acc(n.a, g);
      if (rb) acc(n.b, g);
      break;
    case OpKind::sub:
      if (ra) acc(n.a, g);
      if (rb) acc(n.b, -g);
      break;
    case OpKind::mul: {
      const Matrix& b = nodes_[n.b].value;
      if (ra) acc(n.a, g.cwiseProduct(b));
      if (rb) acc(n.b, g.cwiseProduct(a));
      break;
    }
    case OpKind::neg:
      if (ra) acc(n.a, -g);
      break;
    case OpKind::scale:
      if (ra) acc(n.a, n.param * g);
      break;
    case OpKind::add_scalar:
      if (ra) acc(n.a, g);
      break;
    case OpKind::scale_by: {
      const Matrix& m = nodes_[n.b].value;
      if (ra) {
        Matrix s(1, 1);
        s(0, 0) = g.cwiseProduct(m).sum();
        acc(n.a, s);
      }
      if (rb) acc(n.b, a(0, 0) * g);
      break;
    }
    case OpKind::matmul: {
      const Matrix& b = nodes_[n.b].value;
      if (ra) acc_product(n.a, g * b.transpose());
      if (rb) acc_product(n.b, a.transpose() * g);
      break;
    }
    case OpKind::matmul_bt: {
      const Matrix& b = nodes_[n.b].value;
      if (ra) acc_product(n.a, g * b);
      if (rb) acc_product(n.b, g.transpose() * a);
      break;
    }
    case OpKind::add_bias:
      if (ra) acc(n.a, g);
      if (rb) acc(n.b, g.colwise().sum());
      break;
    case OpKind::affine: {
      const Matrix& w = nodes_[n.b].value;
      if (ra) acc_product(n.a, g * w);
      if (rb) acc_product(n.b, g.transpose() * a);
      if (reaches_[n.c]) acc(n.c, g.colwise().sum());
      break;
    }
    case OpKind::activation:
      if (ra) {
        // ELU's slope is min(y, 0) + 1, which saves recomputing exp.
        if (n.act == Activation::elu) {
          scratch_.resize(a.rows(), a.cols());
          scratch_.array() = n.value.array().min(0.0) + 1.0;
        } else {
          activate_d1(n.act, a, scratch_);
        }
        acc(n.a, g.cwiseProduct(scratch_));
      }
      break;
    case OpKind::sum:
      if (ra) acc(n.a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
      break;
    case OpKind::mean:
      if (ra) acc(n.a, Matrix::Constant(a.rows(), a.cols(), g(0, 0) / static_cast<double>(a.size())));
      break;
    case OpKind::row_sum:
      if (ra) acc(n.a, g.replicate(1, a.cols()));
      break;
    case OpKind::square:
      if (ra) acc(n.a, 2.0 * a.cwiseProduct(g));
      break;
    case OpKind::sqrt:
      if (ra) {
        const Matrix& y = n.value;
        acc(n.a, (y.array() > 0.0).select(0.5 * g.array() / y.array(), 0.0).matrix());
      }
      break;
    case OpKind::acos_clamped:
      if (ra) {
        const auto inside = (a.array() > -1.0 + kAcosClamp) && (a.array() < 1.0 - kAcosClamp);
        const auto slope = -1.0 / (1.0 - a.array().square()).max(kAcosClamp).sqrt();
        acc(n.a, inside.select(g.array() * slope, 0.0).matrix());
      }
      break;
    case OpKind::expectile:
      if (ra) {
        const double tau = n.param;
        acc(n.a, (a.array() > 0.0).select(2.0 * tau * a.array(), 2.0 * (1.0 - tau) * a.array()).cwiseProduct(
                     g.array()).matrix());
      }
      break;
    case OpKind::row_normalize:
      if (ra) {
        const Matrix& y = n.value;
        const Vector norms = a.rowwise().norm();
        const Vector dots = y.cwiseProduct(g).rowwise().sum();
        Matrix d = g - (y.array().colwise() * dots.array()).matrix();
        d.array().colwise() /= norms.array();
        acc(n.a, d);
      }
      break;
  }
}

void Tape::reset() { count_ = 0; }

Var operator+(Var a, Var b) { return a.tape->add(a, b); }
Var operator-(Var a, Var b) { return a.tape->sub(a, b); }
Var operator*(Var a, Var b) { return a.tape->mul(a, b); }
Var operator-(Var a) { return a.tape->neg(a); }
Var operator*(double c, Var a) { return a.tape->scale(a, c); }
Var operator*(Var a, double c) { return a.tape->scale(a, c); }
Var operator+(Var a, double c) { return a.tape->add_scalar(a, c); }

Vector flatten(std::span<const Matrix> grads) {
  Eigen::Index total = 0;
  for (const auto& g : grads) total += g.size();
  Vector out(total);
  Eigen::Index offset = 0;
  for (const auto& g : grads) {
    out.segment(offset, g.size()) = Eigen::Map<const Vector>(g.data(), g.size());
    offset += g.size();
  }
  return out;
}

}  // namespace enot::ad
