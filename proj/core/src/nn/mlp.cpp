#include "enot/nn/mlp.hpp"

#include <cmath>
#include <string>

#include "enot/data/rng.hpp"

namespace enot::nn {

Eigen::Index param_count(std::span<const int> widths) {
  Eigen::Index total = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l)
    total += static_cast<Eigen::Index>(widths[l] + 1) * widths[l + 1];
  return total;
}

PotentialNetwork::PotentialNetwork(std::vector<int> widths, ad::Activation activation)
    : widths_(std::move(widths)), activation_(activation) {
  require(widths_.size() >= 2, ErrorKind::BadParams, "a network needs at least one layer");
  for (int w : widths_) require(w >= 1, ErrorKind::BadParams, "layer widths must be positive");
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    offsets_.push_back(offset);
    offset += static_cast<Eigen::Index>(widths_[l] + 1) * widths_[l + 1];
  }
  params_ = Vector::Zero(offset);
}

PotentialNetwork::PotentialNetwork(std::vector<int> widths, ad::Activation activation, Vector params)
    : PotentialNetwork(std::move(widths), activation) {
  set_params(params);
}

void PotentialNetwork::set_params(const Vector& p) {
  require(p.size() == params_.size(), ErrorKind::ShapeMismatch,
          "expected " + std::to_string(params_.size()) + " parameters, got " + std::to_string(p.size()));
  params_ = p;
}

Eigen::Index PotentialNetwork::bias_offset(int layer) const {
  const auto l = static_cast<std::size_t>(layer);
  return offsets_[l] + static_cast<Eigen::Index>(widths_[l]) * widths_[l + 1];
}

Eigen::Map<const RowMajorMatrix> PotentialNetwork::weight(int layer) const {
  const auto l = static_cast<std::size_t>(layer);
  return {params_.data() + offsets_[l], widths_[l + 1], widths_[l]};
}

Eigen::Map<RowMajorMatrix> PotentialNetwork::weight(int layer) {
  const auto l = static_cast<std::size_t>(layer);
  return {params_.data() + offsets_[l], widths_[l + 1], widths_[l]};
}

Eigen::Map<const Vector> PotentialNetwork::bias(int layer) const {
  return {params_.data() + bias_offset(layer), widths_[static_cast<std::size_t>(layer) + 1]};
}

Eigen::Map<Vector> PotentialNetwork::bias(int layer) {
  return {params_.data() + bias_offset(layer), widths_[static_cast<std::size_t>(layer) + 1]};
}

PotentialNetwork init(const ArchitectureSpec& spec, int in_dim, int out_dim, bool zero_last_layer) {
  require(in_dim >= 1 && out_dim >= 1, ErrorKind::BadParams, "network dimensions must be positive");
  require(!spec.hidden.empty(), ErrorKind::BadParams, "at least one hidden layer is required");
  std::vector<int> widths;
  widths.push_back(in_dim);
  for (int h : spec.hidden) {
    require(h >= 1, ErrorKind::BadParams, "hidden widths must be positive");
    widths.push_back(h);
  }
  widths.push_back(out_dim);

  PotentialNetwork net(widths, spec.activation);
  data::CounterRng rng(spec.init_seed, 0x1417);
  for (int l = 0; l < net.num_layers(); ++l) {
    auto w = net.weight(l);
    if (zero_last_layer && l == net.num_layers() - 1) {
      w.setZero();
      continue;
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-limit, limit);
  }
  return net;
}

std::vector<ad::Var> TapeParams::leaves() const {
  std::vector<ad::Var> out;
  out.reserve(weights.size() * 2);
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(weights[l]);
    out.push_back(biases[l]);
  }
  return out;
}

TapeParams bind_params(const PotentialNetwork& net, ad::Tape& tape, bool trainable) {
  TapeParams p;
  for (int l = 0; l < net.num_layers(); ++l) {
    const Matrix w = net.weight(l);
    const Matrix b = net.bias(l).transpose();
    p.weights.push_back(trainable ? tape.variable(w) : tape.constant(w));
    p.biases.push_back(trainable ? tape.variable(b) : tape.constant(b));
  }
  return p;
}

ad::Var forward(const PotentialNetwork& net, const TapeParams& params, ad::Var x, ad::Tape& tape) {
  require(tape.value(x).cols() == net.input_dim(), ErrorKind::DimMismatch,
          "input has " + std::to_string(tape.value(x).cols()) + " columns, network expects " +
              std::to_string(net.input_dim()));
  ad::Var h = x;
  for (int l = 0; l < net.num_layers(); ++l) {
    h = tape.affine(h, params.weights[l], params.biases[l]);
    if (l + 1 < net.num_layers()) h = tape.activation(h, net.activation());
  }
  return h;
}

ad::Var forward(const PotentialNetwork& net, ad::Var x, ad::Tape& tape) {
  return forward(net, bind_params(net, tape, false), x, tape);
}

ad::Var residual_map_forward(const PotentialNetwork& net, const TapeParams& params, ad::Var x, ad::Tape& tape) {
  require(net.input_dim() == net.output_dim(), ErrorKind::DimMismatch, "residual map must be R^d -> R^d");
  return tape.add(x, forward(net, params, x, tape));
}

ad::Var residual_map_forward(const PotentialNetwork& net, ad::Var x, ad::Tape& tape) {
  return residual_map_forward(net, bind_params(net, tape, false), x, tape);
}

Vector pack_gradient(const PotentialNetwork& net, std::span<const Matrix> leaf_grads) {
  require(leaf_grads.size() == 2 * static_cast<std::size_t>(net.num_layers()), ErrorKind::ShapeMismatch,
          "gradient list does not match the network layers");
  PotentialNetwork out(net.layer_widths(), net.activation());
  for (int l = 0; l < net.num_layers(); ++l) {
    out.weight(l) = leaf_grads[2 * static_cast<std::size_t>(l)];
    out.bias(l) = leaf_grads[2 * static_cast<std::size_t>(l) + 1].transpose();
  }
  return out.params();
}

Matrix evaluate(const PotentialNetwork& net, const Matrix& x) {
  require(x.cols() == net.input_dim(), ErrorKind::DimMismatch, "input dimension mismatch");
  Matrix h = x;
  Matrix z;
  for (int l = 0; l < net.num_layers(); ++l) {
    z.noalias() = h * net.weight(l).transpose();
    z.rowwise() += net.bias(l).transpose();
    if (l + 1 < net.num_layers())
      ad::activate(net.activation(), z, h);
    else
      h = z;
  }
  return h;
}

Matrix input_gradient(const PotentialNetwork& net, const Matrix& x) {
  require(x.cols() == net.input_dim(), ErrorKind::DimMismatch, "input dimension mismatch");
  require(net.output_dim() == 1, ErrorKind::DimMismatch, "input gradient needs a scalar potential");
  const int layers = net.num_layers();
  std::vector<Matrix> pre(static_cast<std::size_t>(layers));
  Matrix h = x;
  for (int l = 0; l < layers; ++l) {
    Matrix& z = pre[static_cast<std::size_t>(l)];
    z.noalias() = h * net.weight(l).transpose();
    z.rowwise() += net.bias(l).transpose();
    if (l + 1 < layers) ad::activate(net.activation(), z, h);
  }
  Matrix g = Matrix::Ones(x.rows(), 1);
  Matrix slope;
  for (int l = layers - 1; l >= 0; --l) {
    Matrix up;
    up.noalias() = g * net.weight(l);
    if (l > 0) {
      ad::activate_d1(net.activation(), pre[static_cast<std::size_t>(l - 1)], slope);
      g = up.cwiseProduct(slope);
    } else {
      g = std::move(up);
    }
  }
  return g;
}

}  // namespace enot::nn
