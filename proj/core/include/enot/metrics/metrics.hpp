#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "enot/common.hpp"
#include "enot/data/samplers.hpp"
#include "enot/ot/cost.hpp"

namespace enot::metrics {

using MapFn = std::function<Matrix(const Matrix&)>;

struct EvalReport {
  std::optional<double> l2_uvp;
  double sinkhorn_forward = 0.0;  // debiased divergence between T#alpha and beta
  double sinkhorn_forward_raw = 0.0;
  std::optional<double> sinkhorn_backward;  // T^-1#beta against alpha, bidirectional runs only
  double dist_estimate = 0.0;
  int n_eval = 0;
};

/// 100 * mean |t_hat_i - t_star_i|^2 / target_variance.
double l2_uvp(const Matrix& t_hat_x, const Matrix& t_star_x, double target_variance);

/// Monte-Carlo L2-UVP on n_eval source samples. The target variance is the
/// trace of the analytic covariance when known, else the empirical total
/// variance of n_eval target samples. Throws NoGroundTruth.
double l2_uvp(const MapFn& t_hat, const data::GroundTruthTask& task, int n_eval, std::uint64_t stream = 0);

/// Sum of per-coordinate sample variances.
double total_variance(const Matrix& points);

struct Divergence {
  double debiased = 0.0;  // OT(P,Q) - OT(P,P)/2 - OT(Q,Q)/2
  double raw = 0.0;       // <P_eps, C> for the cross term
  double epsilon = 0.0;
};

/// Debiased Sinkhorn divergence between two uniform point clouds. All three
/// terms use the entropic dual value at the same epsilon.
Divergence sinkhorn_divergence(const Matrix& p, const Matrix& q, const ot::CostFunction& cost, double epsilon);

/// 1e-2 times the mean target-target cost: depends only on the target
/// sample, so maps evaluated against one target share it.
double default_divergence_epsilon(const Matrix& target, const ot::CostFunction& cost);

/// Divergence between T#alpha and beta from n samples of each. A missing
/// epsilon falls back to default_divergence_epsilon.
Divergence pushforward_sinkhorn(const MapFn& t_hat, const data::MeasureSampler& source,
                                const data::MeasureSampler& target, int n, std::optional<double> epsilon,
                                const ot::CostFunction& cost, std::uint64_t stream = 0);

inline constexpr int kDefaultEvalSize = 2000;

}  // namespace enot::metrics
