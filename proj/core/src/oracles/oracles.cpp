#include "enot/oracles/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

namespace enot::oracles {

DiscreteMeasurePair DiscreteMeasurePair::uniform(Matrix x, Matrix y) {
  DiscreteMeasurePair p;
  p.x_weights = Vector::Constant(x.rows(), 1.0 / static_cast<double>(x.rows()));
  p.y_weights = Vector::Constant(y.rows(), 1.0 / static_cast<double>(y.rows()));
  p.x_points = std::move(x);
  p.y_points = std::move(y);
  return p;
}

void DiscreteMeasurePair::validate() const {
  require(x_points.rows() > 0 && y_points.rows() > 0, ErrorKind::EmptySamples, "empty measure");
  require(x_points.cols() == y_points.cols(), ErrorKind::DimMismatch, "measures differ in dimension");
  require(x_weights.size() == x_points.rows() && y_weights.size() == y_points.rows(), ErrorKind::ShapeMismatch,
          "weights do not match the point counts");
  for (const Vector* w : {&x_weights, &y_weights}) {
    require((w->array() >= 0.0).all(), ErrorKind::BadParams, "negative weight");
    require(std::abs(w->sum() - 1.0) <= 1e-12, ErrorKind::BadParams, "weights do not sum to 1");
  }
}

double default_epsilon(const Matrix& cost_matrix) { return 1e-3 * cost_matrix.mean(); }

namespace {

// -eps * log sum_j exp((h_j - c_j) / eps), stabilized.
// -eps log sum_k exp((h_k - c_k) / eps), stabilized by the max term.
// `buf` is scratch space of the same length.
double soft_min(const Eigen::Ref<const Vector>& h, const Eigen::Ref<const Vector>& c, double eps, Vector& buf) {
  buf.noalias() = (h - c) * (1.0 / eps);
  const double top = buf.maxCoeff();
  if (!std::isfinite(top)) return -top * eps;
  return -eps * (top + std::log((buf.array() - top).exp().sum()));
}

struct SinkhornSolver {
  const Matrix& C;
  Matrix Ct;
  Vector log_a;
  Vector log_b;
  Vector f;
  Vector g;
  Vector buf;

  SinkhornSolver(const Matrix& cost, const Vector& a, const Vector& b)
      : C(cost), Ct(cost.transpose()), log_a(a.array().log()), log_b(b.array().log()),
        f(Vector::Zero(a.size())), g(Vector::Zero(b.size())) {}

  // One f then g update. Returns the row-marginal L1 error of the coupling
  // before the update: after a g step the columns are exact, and the row
  // sums are a_i exp((f_i - f'_i) / eps) where f' is the next f.
  double iterate(double eps) {
    const Vector hg = g + eps * log_b;
    Vector next(f.size());
    buf.resize(g.size());
    for (Eigen::Index i = 0; i < f.size(); ++i) next(i) = soft_min(hg, Ct.col(i), eps, buf);
    const double err = (log_a.array().exp() * (((f - next) / eps).array().exp() - 1.0).abs()).sum();
    f.swap(next);
    const Vector hf = f + eps * log_a;
    buf.resize(f.size());
    for (Eigen::Index j = 0; j < g.size(); ++j) g(j) = soft_min(hf, C.col(j), eps, buf);
    return err;
  }

  Matrix coupling(double eps) const {
    Matrix p(C.rows(), C.cols());
    for (Eigen::Index j = 0; j < C.cols(); ++j)
      p.col(j) = ((f.array() + g(j) - C.col(j).array()) / eps + log_a.array() + log_b(j)).exp();
    return p;
  }
};

// Moves a nearly feasible plan onto the transport polytope: scale rows and
// columns down to their targets, then spread the missing mass as a rank-one
// correction (Altschuler, Weed and Rigollet, 2017).
void round_to_marginals(Matrix& p, const Vector& a, const Vector& b) {
  const Vector rs = (a.array() / p.rowwise().sum().array().max(1e-300)).min(1.0);
  p = rs.asDiagonal() * p;
  const Vector cs = (b.array() / p.colwise().sum().transpose().array().max(1e-300)).min(1.0);
  p = p * cs.asDiagonal();
  const Vector er = a - p.rowwise().sum();
  const Vector ec = b - p.colwise().sum().transpose();
  const double mass = er.sum();
  if (mass > 0.0) p += er * ec.transpose() / mass;
}

}  // namespace

SinkhornResult sinkhorn(const DiscreteMeasurePair& pair, const Matrix& cost_matrix, const SinkhornOptions& options) {
  pair.validate();
  require(options.epsilon > 0.0, ErrorKind::BadParams, "epsilon must be positive");
  require(options.max_iters >= 1, ErrorKind::BadParams, "max_iters must be >= 1");
  require(cost_matrix.rows() == pair.x_points.rows() && cost_matrix.cols() == pair.y_points.rows(),
          ErrorKind::ShapeMismatch, "cost matrix does not match the measures");

  SinkhornSolver s(cost_matrix, pair.x_weights, pair.y_weights);
  const double eps = options.epsilon;
  if (options.epsilon_scaling) {
    double level = std::max(cost_matrix.maxCoeff(), eps);
    while (level > eps) {
      // The first error at a new level mixes two epsilons; skip it.
      for (int k = 0; k < 200; ++k)
        if (s.iterate(level) < 1e-3 && k > 0) break;
      level *= 0.5;
    }
  }

  SinkhornResult out;
  for (int k = 1; k <= options.max_iters; ++k) {
    const double err = s.iterate(eps);
    out.iterations = k;
    if (k == 1) continue;
    out.marginal_error = err;
    if (err < options.tol) {
      out.converged = true;
      break;
    }
  }
  out.coupling = s.coupling(eps);
  round_to_marginals(out.coupling, pair.x_weights, pair.y_weights);
  out.transport_cost = (out.coupling.array() * cost_matrix.array()).sum();
  out.dual_value = s.f.dot(pair.x_weights) + s.g.dot(pair.y_weights);
  return out;
}

SinkhornResult sinkhorn_distance(const DiscreteMeasurePair& pair, const ot::CostFunction& cost,
                                 const SinkhornOptions& options) {
  pair.validate();
  return sinkhorn(pair, ot::cost_matrix(cost, pair.x_points, pair.y_points), options);
}

TransportResult exact_ot_permutations(const Matrix& cost_matrix) {
  const Eigen::Index n = cost_matrix.rows();
  require(n == cost_matrix.cols(), ErrorKind::ShapeMismatch, "permutation route needs a square problem");
  require(n >= 1 && n <= kMaxExactSize, ErrorKind::TooLarge, "exact OT is limited to 8 points per side");
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) total += cost_matrix(i, perm[static_cast<std::size_t>(i)]);
    if (total < best_cost) {
      best_cost = total;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  TransportResult r;
  r.cost = best_cost / static_cast<double>(n);
  r.coupling = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) r.coupling(i, best[static_cast<std::size_t>(i)]) = 1.0 / static_cast<double>(n);
  return r;
}

TransportResult exact_ot_flow(const Matrix& cost_matrix, const Vector& a, const Vector& b) {
  const Eigen::Index n = cost_matrix.rows();
  const Eigen::Index m = cost_matrix.cols();
  require(a.size() == n && b.size() == m, ErrorKind::ShapeMismatch, "weights do not match the cost matrix");
  require(n <= kMaxExactSize && m <= kMaxExactSize, ErrorKind::TooLarge, "exact OT is limited to 8 points per side");
  constexpr double kTiny = 1e-15;
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // Successive shortest paths on the bipartite residual graph: forward arcs
  // i -> j are uncapacitated, backward arcs j -> i carry the current flow.
  Matrix flow = Matrix::Zero(n, m);
  Vector supply = a;
  Vector demand = b;
  const auto nodes = static_cast<std::size_t>(n + m);
  for (int round = 0; round < 10000; ++round) {
    std::vector<double> dist(nodes, kInf);
    std::vector<long> pred(nodes, -1);
    bool any = false;
    for (Eigen::Index i = 0; i < n; ++i)
      if (supply(i) > kTiny) {
        dist[static_cast<std::size_t>(i)] = 0.0;
        any = true;
      }
    if (!any) break;
    for (std::size_t pass = 0; pass < nodes; ++pass) {
      bool changed = false;
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j) {
          const auto ui = static_cast<std::size_t>(i);
          const auto uj = static_cast<std::size_t>(n + j);
          if (dist[ui] < kInf && dist[ui] + cost_matrix(i, j) < dist[uj] - 1e-14) {
            dist[uj] = dist[ui] + cost_matrix(i, j);
            pred[uj] = static_cast<long>(ui);
            changed = true;
          }
          if (flow(i, j) > kTiny && dist[uj] < kInf && dist[uj] - cost_matrix(i, j) < dist[ui] - 1e-14) {
            dist[ui] = dist[uj] - cost_matrix(i, j);
            pred[ui] = static_cast<long>(uj);
            changed = true;
          }
        }
      if (!changed) break;
    }
    Eigen::Index sink = -1;
    for (Eigen::Index j = 0; j < m; ++j)
      if (demand(j) > kTiny && dist[static_cast<std::size_t>(n + j)] < kInf &&
          (sink < 0 || dist[static_cast<std::size_t>(n + j)] < dist[static_cast<std::size_t>(n + sink)]))
        sink = j;
    if (sink < 0) break;

    // Walk back to the source, collecting the bottleneck.
    double delta = demand(sink);
    std::size_t v = static_cast<std::size_t>(n + sink);
    while (pred[v] >= 0) {
      const auto u = static_cast<std::size_t>(pred[v]);
      if (v < static_cast<std::size_t>(n))  // backward arc u = column -> v = row
        delta = std::min(delta, flow(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u) - n));
      v = u;
    }
    delta = std::min(delta, supply(static_cast<Eigen::Index>(v)));
    supply(static_cast<Eigen::Index>(v)) -= delta;
    demand(sink) -= delta;
    v = static_cast<std::size_t>(n + sink);
    while (pred[v] >= 0) {
      const auto u = static_cast<std::size_t>(pred[v]);
      if (v >= static_cast<std::size_t>(n))
        flow(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v) - n) += delta;
      else
        flow(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u) - n) -= delta;
      v = u;
    }
  }

  TransportResult r;
  r.coupling = flow;
  r.cost = (flow.array() * cost_matrix.array()).sum();
  return r;
}

TransportResult exact_discrete_ot(const DiscreteMeasurePair& pair, const ot::CostFunction& cost) {
  pair.validate();
  const Eigen::Index n = pair.x_points.rows();
  const Eigen::Index m = pair.y_points.rows();
  require(n <= kMaxExactSize && m <= kMaxExactSize, ErrorKind::TooLarge,
          "exact OT is limited to 8 points per side, got " + std::to_string(n) + " x " + std::to_string(m));
  const Matrix c = ot::cost_matrix(cost, pair.x_points, pair.y_points);
  const double u = 1.0 / static_cast<double>(n);
  const bool uniform = n == m && (pair.x_weights.array() - u).abs().maxCoeff() <= 1e-12 &&
                       (pair.y_weights.array() - u).abs().maxCoeff() <= 1e-12;
  if (uniform) return exact_ot_permutations(c);
  return exact_ot_flow(c, pair.x_weights, pair.y_weights);
}

void GaussianMeasure::validate() const {
  const Eigen::Index d = mean.size();
  require(d >= 1, ErrorKind::BadParams, "empty Gaussian");
  require(covariance.rows() == d && covariance.cols() == d, ErrorKind::ShapeMismatch,
          "covariance does not match the mean");
  require((covariance - covariance.transpose()).cwiseAbs().maxCoeff() <= 1e-12, ErrorKind::NotSPD,
          "covariance is not symmetric");
  const Eigen::SelfAdjointEigenSolver<Matrix> es(covariance, Eigen::EigenvaluesOnly);
  require(es.eigenvalues().minCoeff() > 0.0, ErrorKind::NotSPD, "covariance is not positive definite");
}

Matrix AffineMap::apply(const Matrix& x) const {
  require(x.cols() == A.cols(), ErrorKind::DimMismatch, "affine map dimension mismatch");
  return (x * A.transpose()).rowwise() + c.transpose();
}

namespace {

Matrix spectral(const Matrix& m, double (*fn)(double)) {
  const Matrix sym = 0.5 * (m + m.transpose());
  const Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  const Vector lam = es.eigenvalues().unaryExpr([fn](double v) { return fn(std::max(v, 1e-12)); });
  Matrix out = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

}  // namespace

Matrix spd_sqrt(const Matrix& m) {
  return spectral(m, [](double v) { return std::sqrt(v); });
}

Matrix spd_inv_sqrt(const Matrix& m) {
  return spectral(m, [](double v) { return 1.0 / std::sqrt(v); });
}

GaussianOtResult gaussian_ot(const GaussianMeasure& a, const GaussianMeasure& b) {
  a.validate();
  b.validate();
  require(a.dim() == b.dim(), ErrorKind::DimMismatch, "Gaussians differ in dimension");
  const Matrix ra = spd_sqrt(a.covariance);
  const Matrix ra_inv = spd_inv_sqrt(a.covariance);
  const Matrix cross = spd_sqrt(ra * b.covariance * ra);

  GaussianOtResult r;
  r.map.A = ra_inv * cross * ra_inv;
  r.map.A = 0.5 * (r.map.A + r.map.A.transpose());
  r.map.c = b.mean - r.map.A * a.mean;
  r.w2_squared = (a.mean - b.mean).squaredNorm() + (a.covariance + b.covariance - 2.0 * cross).trace();
  r.w2_squared = std::max(r.w2_squared, 0.0);
  return r;
}

}  // namespace enot::oracles
