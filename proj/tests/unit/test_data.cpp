#include <doctest.h>

#include <cmath>
#include <sstream>

#include "enot/data/samplers.hpp"
#include "enot/metrics/metrics.hpp"

using namespace enot;
using namespace enot::data;

namespace {

// |empirical mean - analytic mean| within k standard errors, per coordinate.
void check_mean(const Matrix& s, const Vector& mean, const Matrix& cov, double k) {
  const Vector m = s.colwise().mean();
  for (Eigen::Index i = 0; i < m.size(); ++i)
    CHECK(std::abs(m(i) - mean(i)) < k * std::sqrt(cov(i, i) / static_cast<double>(s.rows())));
}

Matrix empirical_cov(const Matrix& s) {
  const Matrix c = s.rowwise() - s.colwise().mean();
  return c.transpose() * c / static_cast<double>(s.rows() - 1);
}

std::vector<MeasureSampler> all_samplers() {
  const Matrix cov = random_spd(3, 0.5, 2.0, 3, 0);
  return {
      MeasureSampler::gaussian(Vector{{1.0, -1.0, 0.5}}, cov, 1),
      MeasureSampler::mixture({{Vector{{0.0, 0.0}}, Matrix::Identity(2, 2)}, {Vector{{3.0, 1.0}}, 0.5 * Matrix::Identity(2, 2)}},
                              Vector{{0.3, 0.7}}, 2),
      MeasureSampler::circles2d(3),
      MeasureSampler::moons2d(4),
      MeasureSampler::sphere_patch(Vector{{0.0, 0.0, 1.0}}, 0.3, 5),
  };
}

}  // namespace

TEST_CASE("samplers are deterministic in (seed, stream, n)") {
  for (const auto& s : all_samplers()) {
    const Matrix a = s.sample(3, 7), b = s.sample(3, 7);
    CHECK(a == b);
    CHECK(a.rows() == 3);
    CHECK(a.cols() == s.dim());
    CHECK(a.allFinite());
    CHECK(s.sample(3, 8) != a);
  }
  const auto g1 = MeasureSampler::gaussian(Vector::Zero(2), Matrix::Identity(2, 2), 1);
  const auto g2 = MeasureSampler::gaussian(Vector::Zero(2), Matrix::Identity(2, 2), 2);
  CHECK(g1.sample(3) != g2.sample(3));
  CHECK_THROWS_AS(g1.sample(0), Error);
}

TEST_CASE("sphere patch rows are unit norm") {
  const auto s = MeasureSampler::sphere_patch(Vector{{1.0, 2.0, 2.0}} / 3.0, 0.5, 9);
  const Matrix p = s.sample(1000);
  CHECK(((p.rowwise().norm().array() - 1.0).abs() < 1e-12).all());
  CHECK_THROWS_AS(MeasureSampler::sphere_patch(Vector{{1.0}}, 0.5, 1), Error);
  CHECK_THROWS_AS(MeasureSampler::sphere_patch(Vector::Zero(3), 0.5, 1), Error);
}

TEST_CASE("sample means converge at the CLT rate") {
  const int n = 100000;
  for (const auto& s : all_samplers()) {
    const auto mean = s.analytic_mean();
    if (!mean) continue;
    const Matrix p = s.sample(n, 3);
    // Standard errors from the sample itself when no closed form exists.
    check_mean(p, *mean, s.analytic_covariance().value_or(empirical_cov(p)), 4.0);
  }
}

TEST_CASE("a single-component mixture has the Gaussian statistics") {
  const Vector mu{{0.5, 2.0}};
  const Matrix cov = random_spd(2, 0.5, 2.0, 8, 0);
  const auto m = MeasureSampler::mixture({{mu, cov}, {Vector{{10.0, 10.0}}, Matrix::Identity(2, 2)}}, Vector{{1.0, 0.0}}, 4);
  CHECK(m.analytic_mean()->isApprox(mu, 1e-14));
  CHECK(m.analytic_covariance()->isApprox(cov, 1e-14));
  const Matrix s = m.sample(100000);
  check_mean(s, mu, cov, 4.0);
  CHECK(s.col(0).maxCoeff() < 8.0);  // the zero-weight component never fires
}

TEST_CASE("mixture analytic moments") {
  const auto m = all_samplers()[1];
  // E = 0.3 (0,0) + 0.7 (3,1); Cov = sum w (S + mu mu^T) - E E^T.
  const Vector e{{2.1, 0.7}};
  CHECK(m.analytic_mean()->isApprox(e, 1e-14));
  Matrix second = 0.3 * Matrix::Identity(2, 2) + 0.7 * (0.5 * Matrix::Identity(2, 2) + Vector{{3.0, 1.0}} * Vector{{3.0, 1.0}}.transpose());
  CHECK(m.analytic_covariance()->isApprox(second - e * e.transpose(), 1e-12));
  const Matrix s = m.sample(100000, 1);
  const Matrix c = empirical_cov(s);
  CHECK((c - *m.analytic_covariance()).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("Gaussian task examples") {
  const Matrix cov = Matrix::Constant(1, 1, 1.7);
  const auto t = make_task_between({Vector::Zero(1), cov}, {Vector::Constant(1, 3.0), cov}, 1);
  const Matrix x = t.source.sample(10);
  CHECK(t.optimal_map->apply(x).isApprox((x.array() + 3.0).matrix(), 1e-12));
  CHECK(*t.w2_squared == doctest::Approx(9.0).epsilon(1e-12));

  const auto same = make_task_between({Vector::Zero(3), random_spd(3, 0.5, 2, 1, 1)},
                                      {Vector::Zero(3), random_spd(3, 0.5, 2, 1, 1)}, 1);
  CHECK(std::abs(*same.w2_squared) < 1e-9);

  for (int d : {1, 2, 5}) {
    const auto g = make_gaussian_task(d, 12);
    CHECK(g.source.dim() == d);
    const Vector ms = *g.source.analytic_mean(), mt = *g.target.analytic_mean();
    CHECK((ms.array().abs() <= 2.0).all());
    CHECK((mt.array().abs() <= 2.0).all());
    const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(*g.target.analytic_covariance()).eigenvalues();
    CHECK(ev.minCoeff() >= 0.5 - 1e-9);
    CHECK(ev.maxCoeff() <= 2.0 + 1e-9);
  }
}

TEST_CASE("tasks with a known map reproduce target moments") {
  for (const auto& task : {make_gaussian_task(3, 1), make_translation_task(Vector{{1.0, -2.0}}, 2),
                           make_identity_task(2, 3)}) {
    const int n = 10000;
    const Matrix t = task.optimal_map->apply(task.source.sample(n, 4));
    const Vector mean = *task.target.analytic_mean();
    const Matrix cov = *task.target.analytic_covariance();
    check_mean(t, mean, cov, 3.0);
    const Matrix c = empirical_cov(t);
    for (Eigen::Index i = 0; i < cov.rows(); ++i)
      CHECK(std::abs(c(i, i) - cov(i, i)) < 3.0 * cov(i, i) * std::sqrt(2.0 / n));
  }
}

TEST_CASE("d=4 Gaussian task: Sinkhorn on 2000 samples recovers W2^2") {
  const auto task = make_gaussian_task(4, 1);
  const Matrix x = task.source.sample(2000, 1), y = task.target.sample(2000, 2);
  const ot::CostFunction c{ot::CostKind::sq_euclidean};
  const Matrix cm = ot::cost_matrix(c, x, y);
  const auto r = oracles::sinkhorn(oracles::DiscreteMeasurePair::uniform(x, y), cm,
                                   {oracles::default_epsilon(cm), 5000, 1e-4, true});
  CHECK(std::abs(r.transport_cost - *task.w2_squared) < 0.05 * *task.w2_squared);
}

TEST_CASE("mixture tasks") {
  const auto t = make_mix_task(3, 10, 2, 7);
  CHECK_FALSE(t.optimal_map.has_value());
  CHECK(t.source.components().size() == 3);
  CHECK(t.target.components().size() == 10);
  // Mixture-weighted component means, recomputed here.
  Vector e = Vector::Zero(2);
  for (std::size_t k = 0; k < t.target.components().size(); ++k)
    e += t.target.weights()(static_cast<Eigen::Index>(k)) * t.target.components()[k].mean;
  check_mean(t.target.sample(100000, 1), e, *t.target.analytic_covariance(), 3.0);

  const auto other = make_mix_task(3, 10, 2, 8);
  CHECK(other.source.components()[0].mean != t.source.components()[0].mean);

  // k = 1 on both sides: plain Gaussians with the same draw ranges.
  const auto one = make_mix_task(1, 1, 3, 7);
  CHECK(one.source.weights()(0) == 1.0);
  const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(one.source.components()[0].covariance).eigenvalues();
  CHECK(ev.minCoeff() >= 0.5 - 1e-9);
  CHECK(ev.maxCoeff() <= 2.0 + 1e-9);
  CHECK((one.source.components()[0].mean.array().abs() <= 2.0).all());
}

TEST_CASE("sphere tasks") {
  const auto t = make_sphere_task(3, 1.2, 0.1, 4);
  const double dot = t.source.center().dot(t.target.center());
  CHECK(std::acos(dot) == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(t.source.center().norm() == doctest::Approx(1.0));
}

TEST_CASE("points CSV") {
  const auto s = MeasureSampler::circles2d(6);
  const Matrix p = s.sample(4);
  std::ostringstream out;
  write_points_csv(out, p, s);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "# dim=2,kind=circles2d,seed=6");
  std::getline(in, line);
  CHECK(line == "x0,x1");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4);
}
