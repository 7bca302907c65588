#pragma once

#include "enot/common.hpp"
#include "enot/ot/cost.hpp"

namespace enot::oracles {

/// Two weighted point clouds. Weights are probability vectors.
struct DiscreteMeasurePair {
  Matrix x_points;
  Matrix y_points;
  Vector x_weights;
  Vector y_weights;

  /// Uniform weights on both sides.
  static DiscreteMeasurePair uniform(Matrix x, Matrix y);
  /// Throws BadParams on negative weights, sums off 1 by more than 1e-12,
  /// or shape mismatches.
  void validate() const;
};

struct SinkhornOptions {
  double epsilon = 1e-3;
  int max_iters = 100000;
  double tol = 1e-9;
  /// Anneal epsilon geometrically from the cost scale down to `epsilon`.
  bool epsilon_scaling = true;
};

struct SinkhornResult {
  double transport_cost = 0.0;  // <P, C>
  double dual_value = 0.0;      // <f, a> + <g, b>, the entropic OT value
  Matrix coupling;
  bool converged = false;
  int iterations = 0;
  double marginal_error = 0.0;  // L1 row-marginal violation of the last iterate, before rounding
};

/// Log-domain Sinkhorn. Never throws on non-convergence: the last iterate is
/// returned with `converged = false`. The coupling is rounded onto the
/// transport polytope, so transport_cost is the cost of a feasible plan even
/// when the iterations stop early.
SinkhornResult sinkhorn(const DiscreteMeasurePair& pair, const Matrix& cost_matrix, const SinkhornOptions& options);
SinkhornResult sinkhorn_distance(const DiscreteMeasurePair& pair, const ot::CostFunction& cost,
                                 const SinkhornOptions& options);

/// 1e-3 times the mean pairwise cost, the default oracle epsilon.
double default_epsilon(const Matrix& cost_matrix);

struct TransportResult {
  double cost = 0.0;
  Matrix coupling;
};

/// Exact OT for n, m <= 8. Uniform equal-size problems enumerate
/// permutations; everything else is solved as a min-cost flow.
TransportResult exact_discrete_ot(const DiscreteMeasurePair& pair, const ot::CostFunction& cost);
/// The two exact routes, exposed for cross-checking.
TransportResult exact_ot_permutations(const Matrix& cost_matrix);
TransportResult exact_ot_flow(const Matrix& cost_matrix, const Vector& a, const Vector& b);

inline constexpr int kMaxExactSize = 8;

struct GaussianMeasure {
  Vector mean;
  Matrix covariance;

  int dim() const { return static_cast<int>(mean.size()); }
  /// Throws NotSPD when asymmetric beyond 1e-12 or not positive definite.
  void validate() const;
};

/// x -> A x + c, applied row-wise.
struct AffineMap {
  Matrix A;
  Vector c;

  Matrix apply(const Matrix& x) const;
};

struct GaussianOtResult {
  AffineMap map;
  double w2_squared = 0.0;  // for the cost |x - y|^2
};

/// Bures-Wasserstein closed form between two Gaussians.
GaussianOtResult gaussian_ot(const GaussianMeasure& a, const GaussianMeasure& b);

/// Symmetric PSD square root through an eigendecomposition with
/// eigenvalues floored at 1e-12.
Matrix spd_sqrt(const Matrix& m);
Matrix spd_inv_sqrt(const Matrix& m);

}  // namespace enot::oracles
