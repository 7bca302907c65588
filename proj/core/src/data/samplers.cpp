#include "enot/data/samplers.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "enot/data/rng.hpp"

namespace enot::data {

std::string_view to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::gaussian: return "gaussian";
    case SamplerKind::gaussian_mixture: return "gaussian_mixture";
    case SamplerKind::circles2d: return "circles2d";
    case SamplerKind::moons2d: return "moons2d";
    case SamplerKind::sphere_patch: return "sphere_patch";
  }
  return "?";
}

namespace {

Matrix cholesky_factor(const Matrix& cov) {
  oracles::GaussianMeasure{Vector::Zero(cov.rows()), cov}.validate();
  Eigen::LLT<Matrix> llt(cov);
  require(llt.info() == Eigen::Success, ErrorKind::NotSPD, "covariance has no Cholesky factor");
  return llt.matrixL();
}

}  // namespace

MeasureSampler MeasureSampler::gaussian(Vector mean, Matrix covariance, std::uint64_t seed) {
  std::vector<GaussianComponent> comps;
  comps.push_back({std::move(mean), std::move(covariance)});
  MeasureSampler s = mixture(std::move(comps), Vector::Ones(1), seed);
  s.kind_ = SamplerKind::gaussian;
  return s;
}

MeasureSampler MeasureSampler::mixture(std::vector<GaussianComponent> components, Vector weights,
                                       std::uint64_t seed) {
  require(!components.empty(), ErrorKind::BadParams, "mixture needs at least one component");
  require(weights.size() == static_cast<Eigen::Index>(components.size()), ErrorKind::BadParams,
          "one weight per component");
  require((weights.array() >= 0.0).all() && std::abs(weights.sum() - 1.0) <= 1e-12, ErrorKind::BadParams,
          "mixture weights must be a probability vector");
  MeasureSampler s;
  s.kind_ = SamplerKind::gaussian_mixture;
  s.dim_ = static_cast<int>(components.front().mean.size());
  require(s.dim_ >= 1, ErrorKind::BadParams, "empty component mean");
  for (const auto& c : components) {
    require(c.mean.size() == s.dim_, ErrorKind::DimMismatch, "components differ in dimension");
    s.factors_.push_back(cholesky_factor(c.covariance));
  }
  s.seed_ = seed;
  s.components_ = std::move(components);
  s.weights_ = std::move(weights);
  return s;
}

MeasureSampler MeasureSampler::circles2d(std::uint64_t seed, double noise) {
  require(noise >= 0.0, ErrorKind::BadParams, "noise must be non-negative");
  MeasureSampler s;
  s.kind_ = SamplerKind::circles2d;
  s.dim_ = 2;
  s.seed_ = seed;
  s.noise_ = noise;
  return s;
}

MeasureSampler MeasureSampler::moons2d(std::uint64_t seed, double noise) {
  MeasureSampler s = circles2d(seed, noise);
  s.kind_ = SamplerKind::moons2d;
  return s;
}

MeasureSampler MeasureSampler::sphere_patch(Vector center, double spread, std::uint64_t seed) {
  require(center.size() >= 2, ErrorKind::BadParams, "sphere patches need d >= 2");
  require(center.norm() > 0.0, ErrorKind::BadParams, "patch center must be non-zero");
  require(spread > 0.0, ErrorKind::BadParams, "patch spread must be positive");
  MeasureSampler s;
  s.kind_ = SamplerKind::sphere_patch;
  s.dim_ = static_cast<int>(center.size());
  s.seed_ = seed;
  s.center_ = center.normalized();
  s.spread_ = spread;
  return s;
}

Matrix MeasureSampler::sample(int n, std::uint64_t stream_offset) const {
  require(n >= 1, ErrorKind::BadParams, "sample size must be >= 1");
  CounterRng rng(seed_, stream_offset);
  Matrix out(n, dim_);
  switch (kind_) {
    case SamplerKind::gaussian:
    case SamplerKind::gaussian_mixture: {
      Vector z(dim_);
      for (int i = 0; i < n; ++i) {
        std::size_t k = 0;
        if (components_.size() > 1) {
          double u = rng.uniform();
          while (k + 1 < components_.size() && u >= weights_(static_cast<Eigen::Index>(k))) {
            u -= weights_(static_cast<Eigen::Index>(k));
            ++k;
          }
        }
        for (int j = 0; j < dim_; ++j) z(j) = rng.normal();
        out.row(i) = (components_[k].mean + factors_[k] * z).transpose();
      }
      break;
    }
    case SamplerKind::circles2d:
      for (int i = 0; i < n; ++i) {
        const double radius = rng.uniform() < 0.5 ? 1.0 : 0.5;
        const double t = 2.0 * std::numbers::pi * rng.uniform();
        out(i, 0) = radius * std::cos(t) + noise_ * rng.normal();
        out(i, 1) = radius * std::sin(t) + noise_ * rng.normal();
      }
      break;
    case SamplerKind::moons2d:
      for (int i = 0; i < n; ++i) {
        const bool upper = rng.uniform() < 0.5;
        const double t = std::numbers::pi * rng.uniform();
        out(i, 0) = (upper ? std::cos(t) : 1.0 - std::cos(t)) + noise_ * rng.normal();
        out(i, 1) = (upper ? std::sin(t) : 0.5 - std::sin(t)) + noise_ * rng.normal();
      }
      break;
    case SamplerKind::sphere_patch: {
      Vector z(dim_);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < dim_; ++j) z(j) = rng.normal();
        Vector p = center_ + spread_ * z;
        if (p.squaredNorm() == 0.0) p = center_;
        out.row(i) = p.normalized().transpose();
      }
      break;
    }
  }
  return out;
}

std::optional<Vector> MeasureSampler::analytic_mean() const {
  switch (kind_) {
    case SamplerKind::gaussian:
    case SamplerKind::gaussian_mixture: {
      Vector m = Vector::Zero(dim_);
      for (std::size_t k = 0; k < components_.size(); ++k)
        m += weights_(static_cast<Eigen::Index>(k)) * components_[k].mean;
      return m;
    }
    case SamplerKind::circles2d: return Vector::Zero(2);
    case SamplerKind::moons2d: return Vector{{0.5, 0.25}};
    case SamplerKind::sphere_patch: return std::nullopt;
  }
  return std::nullopt;
}

std::optional<Matrix> MeasureSampler::analytic_covariance() const {
  switch (kind_) {
    case SamplerKind::gaussian:
    case SamplerKind::gaussian_mixture: {
      const Vector m = *analytic_mean();
      Matrix second = Matrix::Zero(dim_, dim_);
      for (std::size_t k = 0; k < components_.size(); ++k) {
        const auto& c = components_[k];
        second += weights_(static_cast<Eigen::Index>(k)) * (c.covariance + c.mean * c.mean.transpose());
      }
      return second - m * m.transpose();
    }
    case SamplerKind::circles2d: {
      // E cos^2 = 1/2 on each ring, mean radius^2 = (1 + 0.25) / 2.
      const double v = 0.5 * 0.625 + noise_ * noise_;
      return Matrix(v * Matrix::Identity(2, 2));
    }
    default: return std::nullopt;
  }
}

Matrix random_spd(int d, double lo, double hi, std::uint64_t seed, std::uint64_t stream) {
  require(d >= 1 && lo > 0.0 && hi >= lo, ErrorKind::BadParams, "bad SPD spec");
  CounterRng rng(seed, stream);
  Matrix g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
  const Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix q = qr.householderQ();
  Vector lam(d);
  for (int i = 0; i < d; ++i) lam(i) = rng.uniform(lo, hi);
  Matrix s = q * lam.asDiagonal() * q.transpose();
  return 0.5 * (s + s.transpose());
}

namespace {

Vector random_mean(int d, std::uint64_t seed, std::uint64_t stream) {
  CounterRng rng(seed, stream);
  Vector m(d);
  for (int i = 0; i < d; ++i) m(i) = rng.uniform(-2.0, 2.0);
  return m;
}

}  // namespace

GroundTruthTask make_task_between(const oracles::GaussianMeasure& a, const oracles::GaussianMeasure& b,
                                  std::uint64_t seed) {
  const auto gt = oracles::gaussian_ot(a, b);
  return {"gaussian", MeasureSampler::gaussian(a.mean, a.covariance, derive_seed(seed, 1)),
          MeasureSampler::gaussian(b.mean, b.covariance, derive_seed(seed, 2)), gt.map, gt.w2_squared};
}

GroundTruthTask make_gaussian_task(int d, std::uint64_t seed) {
  require(d >= 1, ErrorKind::BadParams, "dimension must be >= 1");
  const oracles::GaussianMeasure a{random_mean(d, seed, 10), random_spd(d, 0.5, 2.0, seed, 11)};
  const oracles::GaussianMeasure b{random_mean(d, seed, 20), random_spd(d, 0.5, 2.0, seed, 21)};
  return make_task_between(a, b, seed);
}

GroundTruthTask make_translation_task(const Vector& shift, std::uint64_t seed) {
  const auto d = shift.size();
  require(d >= 1, ErrorKind::BadParams, "dimension must be >= 1");
  GroundTruthTask t = make_task_between({Vector::Zero(d), Matrix::Identity(d, d)}, {shift, Matrix::Identity(d, d)},
                                        seed);
  t.name = "translation";
  return t;
}

GroundTruthTask make_identity_task(int d, std::uint64_t seed) {
  GroundTruthTask t = make_translation_task(Vector::Zero(d), seed);
  t.name = "identity";
  return t;
}

GroundTruthTask make_mix_task(int k_source, int k_target, int d, std::uint64_t seed) {
  require(k_source >= 1 && k_target >= 1, ErrorKind::BadParams, "mixtures need k >= 1");
  require(d >= 1, ErrorKind::BadParams, "dimension must be >= 1");
  auto build = [&](int k, std::uint64_t side) {
    std::vector<GaussianComponent> comps;
    for (int i = 0; i < k; ++i) {
      const std::uint64_t base = 1000 * side + 10 * static_cast<std::uint64_t>(i);
      comps.push_back({random_mean(d, seed, base), random_spd(d, 0.5, 2.0, seed, base + 1)});
    }
    return MeasureSampler::mixture(std::move(comps), Vector::Constant(k, 1.0 / k), derive_seed(seed, side));
  };
  return {"mix", build(k_source, 1), build(k_target, 2), std::nullopt, std::nullopt};
}

GroundTruthTask make_sphere_task(int d, double angle, double spread, std::uint64_t seed) {
  require(d >= 2, ErrorKind::BadParams, "sphere tasks need d >= 2");
  Vector a = Vector::Zero(d);
  Vector b = Vector::Zero(d);
  a(0) = 1.0;
  b(0) = std::cos(angle);
  b(1) = std::sin(angle);
  return {"sphere", MeasureSampler::sphere_patch(a, spread, derive_seed(seed, 1)),
          MeasureSampler::sphere_patch(b, spread, derive_seed(seed, 2)), std::nullopt, std::nullopt};
}

void write_points_csv(std::ostream& out, const Matrix& points, const MeasureSampler& sampler) {
  out << "# dim=" << sampler.dim() << ",kind=" << to_string(sampler.kind()) << ",seed=" << sampler.seed() << '\n';
  for (Eigen::Index j = 0; j < points.cols(); ++j) out << (j ? "," : "") << 'x' << j;
  out << '\n';
  char buf[32];
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", points(i, j));
      out << (j ? "," : "") << buf;
    }
    out << '\n';
  }
}

}  // namespace enot::data
