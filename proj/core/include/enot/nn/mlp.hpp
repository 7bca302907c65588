#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "enot/autodiff/activation.hpp"
#include "enot/autodiff/tape.hpp"
#include "enot/common.hpp"

namespace enot::nn {

struct ArchitectureSpec {
  std::vector<int> hidden = {128, 128, 128};
  ad::Activation activation = ad::Activation::elu;
  std::uint64_t init_seed = 0;

  bool operator==(const ArchitectureSpec&) const = default;
};

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Fully connected network with a flat parameter vector.
///
/// Layer l stores its weight as an out x in row-major block followed by its
/// bias, so the parameter count is sum over layers of (in + 1) * out. The
/// activation is applied after every layer except the last.
class PotentialNetwork {
 public:
  PotentialNetwork() = default;
  PotentialNetwork(std::vector<int> widths, ad::Activation activation);
  PotentialNetwork(std::vector<int> widths, ad::Activation activation, Vector params);

  const std::vector<int>& layer_widths() const { return widths_; }
  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }
  int num_layers() const { return static_cast<int>(widths_.size()) - 1; }
  ad::Activation activation() const { return activation_; }

  const Vector& params() const { return params_; }
  Vector& params() { return params_; }
  void set_params(const Vector& p);

  Eigen::Index weight_offset(int layer) const { return offsets_[static_cast<std::size_t>(layer)]; }
  Eigen::Index bias_offset(int layer) const;
  Eigen::Map<const RowMajorMatrix> weight(int layer) const;
  Eigen::Map<RowMajorMatrix> weight(int layer);
  Eigen::Map<const Vector> bias(int layer) const;
  Eigen::Map<Vector> bias(int layer);

 private:
  std::vector<int> widths_;
  ad::Activation activation_ = ad::Activation::elu;
  std::vector<Eigen::Index> offsets_;
  Vector params_;
};

Eigen::Index param_count(std::span<const int> widths);

/// Glorot-uniform weights and zero biases, deterministic in `spec.init_seed`.
/// With `zero_last_layer` the output layer starts at zero, so a residual map
/// starts at the identity and a potential starts at the constant 0.
PotentialNetwork init(const ArchitectureSpec& spec, int in_dim, int out_dim, bool zero_last_layer = false);

/// Parameters of one network recorded as leaves on a tape, in layer order.
struct TapeParams {
  std::vector<ad::Var> weights;
  std::vector<ad::Var> biases;

  std::vector<ad::Var> leaves() const;
};

/// Records the parameters on `tape`; `trainable` makes them differentiable leaves.
TapeParams bind_params(const PotentialNetwork& net, ad::Tape& tape, bool trainable);

/// Records the network on the tape for a batch `x` (n x in); returns n x out.
ad::Var forward(const PotentialNetwork& net, const TapeParams& params, ad::Var x, ad::Tape& tape);
/// Same with parameters recorded as constants.
ad::Var forward(const PotentialNetwork& net, ad::Var x, ad::Tape& tape);

/// x + net(x) for a map network R^d -> R^d.
ad::Var residual_map_forward(const PotentialNetwork& net, const TapeParams& params, ad::Var x, ad::Tape& tape);
ad::Var residual_map_forward(const PotentialNetwork& net, ad::Var x, ad::Tape& tape);

/// Packs per-leaf tape gradients (ordered as `TapeParams::leaves`) into the
/// network's flat layout.
Vector pack_gradient(const PotentialNetwork& net, std::span<const Matrix> leaf_grads);

/// Plain evaluation without a tape.
Matrix evaluate(const PotentialNetwork& net, const Matrix& x);

/// Row-wise input gradients of a scalar network: row i is grad f(x_i).
Matrix input_gradient(const PotentialNetwork& net, const Matrix& x);

}  // namespace enot::nn
