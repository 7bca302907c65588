#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "enot/common.hpp"
#include "enot/oracles/oracles.hpp"

namespace enot::data {

enum class SamplerKind : std::uint8_t { gaussian, gaussian_mixture, circles2d, moons2d, sphere_patch };

std::string_view to_string(SamplerKind k);

struct GaussianComponent {
  Vector mean;
  Matrix covariance;
};

/// Deterministic sampler of a synthetic measure. sample(n, s) is a pure
/// function of (seed, s, n).
class MeasureSampler {
 public:
  static MeasureSampler gaussian(Vector mean, Matrix covariance, std::uint64_t seed);
  static MeasureSampler mixture(std::vector<GaussianComponent> components, Vector weights, std::uint64_t seed);
  /// Two concentric rings of radius 1 and 0.5 with Gaussian jitter.
  static MeasureSampler circles2d(std::uint64_t seed, double noise = 0.05);
  /// Two interleaved half circles with Gaussian jitter.
  static MeasureSampler moons2d(std::uint64_t seed, double noise = 0.05);
  /// normalize(center + spread * z), z standard normal: a cap around `center`.
  static MeasureSampler sphere_patch(Vector center, double spread, std::uint64_t seed);

  SamplerKind kind() const { return kind_; }
  int dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }
  double noise() const { return noise_; }
  double spread() const { return spread_; }
  const Vector& center() const { return center_; }
  const std::vector<GaussianComponent>& components() const { return components_; }
  const Vector& weights() const { return weights_; }

  Matrix sample(int n, std::uint64_t stream_offset = 0) const;

  /// Mean and covariance when known in closed form.
  std::optional<Vector> analytic_mean() const;
  std::optional<Matrix> analytic_covariance() const;

 private:
  SamplerKind kind_ = SamplerKind::gaussian;
  int dim_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<GaussianComponent> components_;
  std::vector<Matrix> factors_;  // Cholesky factors of the component covariances
  Vector weights_;
  double noise_ = 0.05;
  Vector center_;
  double spread_ = 0.0;
};

struct GroundTruthTask {
  std::string name;
  MeasureSampler source;
  MeasureSampler target;
  std::optional<oracles::AffineMap> optimal_map;
  std::optional<double> w2_squared;  // for |x - y|^2
};

/// Random SPD covariances (eigenvalues in [0.5, 2]) and means in [-2, 2]^d.
GroundTruthTask make_gaussian_task(int d, std::uint64_t seed);
/// N(0, I) -> N(shift, I).
GroundTruthTask make_translation_task(const Vector& shift, std::uint64_t seed);
/// Source and target are the same measure.
GroundTruthTask make_identity_task(int d, std::uint64_t seed);
/// Gaussian task with the given endpoint Gaussians.
GroundTruthTask make_task_between(const oracles::GaussianMeasure& a, const oracles::GaussianMeasure& b,
                                  std::uint64_t seed);
/// Mixtures with k components each, drawn like make_gaussian_task's endpoints.
GroundTruthTask make_mix_task(int k_source, int k_target, int d, std::uint64_t seed);
/// Spherical caps around two centers separated by `angle` radians on S^{d-1}.
GroundTruthTask make_sphere_task(int d, double angle, double spread, std::uint64_t seed);

/// Random d x d SPD matrix with eigenvalues uniform in [lo, hi].
Matrix random_spd(int d, double lo, double hi, std::uint64_t seed, std::uint64_t stream);

/// CSV dump: a comment header "# dim=<d>,kind=<k>,seed=<s>", a column
/// header x0..x{d-1}, then one point per row.
void write_points_csv(std::ostream& out, const Matrix& points, const MeasureSampler& sampler);

}  // namespace enot::data
