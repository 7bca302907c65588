#include "enot/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "enot/data/rng.hpp"
#include "enot/oracles/oracles.hpp"

namespace enot::metrics {

double l2_uvp(const Matrix& t_hat_x, const Matrix& t_star_x, double target_variance) {
  require(t_hat_x.rows() == t_star_x.rows() && t_hat_x.cols() == t_star_x.cols(), ErrorKind::ShapeMismatch,
          "map outputs differ in shape");
  require(t_hat_x.rows() > 0, ErrorKind::EmptySamples, "no evaluation points");
  require(target_variance > 0.0, ErrorKind::BadParams, "target variance must be positive");
  return 100.0 * (t_hat_x - t_star_x).rowwise().squaredNorm().mean() / target_variance;
}

double total_variance(const Matrix& points) {
  require(points.rows() > 1, ErrorKind::EmptySamples, "variance needs at least two points");
  const Matrix centered = points.rowwise() - points.colwise().mean();
  return centered.squaredNorm() / static_cast<double>(points.rows() - 1);
}

double l2_uvp(const MapFn& t_hat, const data::GroundTruthTask& task, int n_eval, std::uint64_t stream) {
  require(task.optimal_map.has_value(), ErrorKind::NoGroundTruth, "task '" + task.name + "' has no optimal map");
  require(n_eval >= 1, ErrorKind::BadParams, "n_eval must be >= 1");
  const Matrix x = task.source.sample(n_eval, data::derive_seed(stream, 0x5A));
  double var = 0.0;
  if (const auto cov = task.target.analytic_covariance())
    var = cov->trace();
  else
    var = total_variance(task.target.sample(n_eval, data::derive_seed(stream, 0x5B)));
  return l2_uvp(t_hat(x), task.optimal_map->apply(x), var);
}

namespace {

// The dual value converges much faster than the marginals: at 1e-4 row
// error it is stable to about 1e-6 relative.
constexpr double kDivergenceTol = 1e-4;
constexpr int kDivergenceMaxIters = 5000;

// OT_eps(P, P) for a uniform cloud. The problem is symmetric, so f = g and
// the averaged fixed point f <- (f + T f) / 2 converges far faster than
// alternating updates. Stops on the same row-marginal error as the
// cross term.
double self_entropic_value(const Matrix& p, const ot::CostFunction& cost, double epsilon) {
  const Matrix c = ot::cost_matrix(cost, p, p);
  const auto n = static_cast<double>(p.rows());
  Vector f = Vector::Zero(p.rows());
  Vector tf(p.rows());
  Vector buf(p.rows());
  auto step = [&](double eps) {
    const Vector h = f.array() - eps * std::log(n);
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      buf.noalias() = (h - c.col(j)) * (1.0 / eps);
      const double top = buf.maxCoeff();
      tf(j) = -eps * (top + std::log((buf.array() - top).exp().sum()));
    }
    const double err = (((f - tf) / eps).array().exp() - 1.0).abs().mean();
    f = 0.5 * (f + tf);
    return err;
  };
  for (double level = std::max(c.maxCoeff(), epsilon); level > epsilon; level *= 0.5)
    for (int k = 0; k < 200; ++k)
      if (step(level) < 1e-3 && k > 0) break;
  for (int k = 0; k < kDivergenceMaxIters; ++k)
    if (step(epsilon) < kDivergenceTol && k > 0) break;
  return 2.0 * tf.mean();
}

}  // namespace

Divergence sinkhorn_divergence(const Matrix& p, const Matrix& q, const ot::CostFunction& cost, double epsilon) {
  require(epsilon > 0.0, ErrorKind::BadParams, "epsilon must be positive");
  oracles::SinkhornOptions opt;
  opt.epsilon = epsilon;
  opt.tol = kDivergenceTol;
  opt.max_iters = kDivergenceMaxIters;
  const auto cross = oracles::sinkhorn_distance(oracles::DiscreteMeasurePair::uniform(p, q), cost, opt);
  Divergence d;
  d.epsilon = epsilon;
  d.raw = cross.transport_cost;
  d.debiased = cross.dual_value - 0.5 * self_entropic_value(p, cost, epsilon) - 0.5 * self_entropic_value(q, cost, epsilon);
  return d;
}

double default_divergence_epsilon(const Matrix& target, const ot::CostFunction& cost) {
  const double scale = ot::cost_matrix(cost, target, target).mean();
  return scale > 0.0 ? 1e-2 * scale : 1e-6;
}

Divergence pushforward_sinkhorn(const MapFn& t_hat, const data::MeasureSampler& source,
                                const data::MeasureSampler& target, int n, std::optional<double> epsilon,
                                const ot::CostFunction& cost, std::uint64_t stream) {
  require(n >= 1, ErrorKind::BadParams, "n must be >= 1");
  require(source.dim() == target.dim(), ErrorKind::DimMismatch, "samplers differ in dimension");
  const Matrix y = target.sample(n, data::derive_seed(stream, 0x6B));
  const Matrix tx = t_hat(source.sample(n, data::derive_seed(stream, 0x6A)));
  return sinkhorn_divergence(tx, y, cost, epsilon.value_or(default_divergence_epsilon(y, cost)));
}

}  // namespace enot::metrics
