#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "enot/data/samplers.hpp"
#include "enot/ot/expectile.hpp"
#include "enot/ot/losses.hpp"
#include "enot/ot/trainer.hpp"
#include "fd.hpp"

using namespace enot;
using namespace enot::ot;
using enot::testing::random_matrix;

namespace {

Matrix row(std::initializer_list<double> v) {
  Matrix m(1, static_cast<Eigen::Index>(v.size()));
  Eigen::Index j = 0;
  for (double x : v) m(0, j++) = x;
  return m;
}

EnotConfig small_config(int hidden = 16) {
  EnotConfig c;
  c.f_arch.hidden = c.g_arch.hidden = {hidden, hidden};
  c.batch_size = 32;
  c.train_steps = 20;
  c.seed = 5;
  return c;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an enot::Error");
  return ErrorKind::BadParams;
}

}  // namespace

TEST_CASE("cost examples") {
  const CostFunction half{CostKind::half_sq_euclidean};
  const double o[] = {0.0, 0.0}, one[] = {1.0, 1.0};
  CHECK(cost(half, o, one) == 1.0);
  const double a[] = {0.3, -1.2}, b[] = {0.3, -1.2};
  for (auto k : {CostKind::half_sq_euclidean, CostKind::sq_euclidean, CostKind::euclidean})
    CHECK(cost(CostFunction{k}, a, b) == 0.0);
  const double e1[] = {1.0, 0.0, 0.0}, e2[] = {0.0, 1.0, 0.0};
  const CostFunction geo{CostKind::sphere_geodesic};
  CHECK(cost(geo, e1, e2) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));
  CHECK(cost(geo, e1, e1) == doctest::Approx(0.0).epsilon(1e-5));
  const double off[] = {1.1, 0.0, 0.0};
  CHECK(kind_of([&] { cost(geo, off, e1); }) == ErrorKind::NotOnSphere);
  CHECK(kind_of([&] { cost(half, e1, a); }) == ErrorKind::DimMismatch);
}

TEST_CASE("expectile loss examples") {
  CHECK(expectile_loss(2.0, 0.9) == doctest::Approx(3.6));
  CHECK(expectile_loss(-2.0, 0.9) == doctest::Approx(0.4));
  for (double u : {-3.0, -0.5, 0.0, 0.7, 2.0}) CHECK(expectile_loss(u, 0.5) == doctest::Approx(0.5 * u * u));
  // At u = 0 the weight is (1 - tau), so the loss is 0 either way.
  CHECK(expectile_loss(0.0, 0.9) == 0.0);
}

TEST_CASE("scalar expectile examples and properties") {
  const std::vector<double> s = {1, 2, 3, 4};
  CHECK(scalar_expectile(s, 0.5) == doctest::Approx(2.5).epsilon(1e-10));
  const std::vector<double> two = {0, 10};
  CHECK(scalar_expectile(two, 0.9) == doctest::Approx(9.0).epsilon(1e-9));
  CHECK(std::abs(scalar_expectile(two, 0.999) - 10.0) < 0.2);
  CHECK(kind_of([] { scalar_expectile(std::vector<double>{}, 0.5); }) == ErrorKind::EmptySamples);

  data::CounterRng rng(3, 4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> xs(5 + trial);
    for (double& x : xs) x = rng.normal() * 3.0 + 1.0;
    double prev = -1e300;
    for (double tau : {0.5, 0.7, 0.9, 0.99, 0.999}) {
      const double e = scalar_expectile(xs, tau);
      CHECK(e >= prev);
      prev = e;
      // Defining equation of the expectile.
      double up = 0, down = 0;
      for (double x : xs) (x > e ? up : down) += x > e ? x - e : e - x;
      CHECK(tau * up == doctest::Approx((1 - tau) * down).epsilon(1e-6));
    }
  }
}

TEST_CASE("loss examples") {
  const CostFunction c;
  const Potential zero = constant_potential(0.0);
  const Matrix x = row({0.0, 0.0});
  const Matrix y = row({1.0, 0.0});
  CHECK(loss_g(zero, x, y) == 0.0);
  CHECK(loss_g(constant_potential(4.0), x, y) == 0.0);
  // n=1, g(y)=3, g(T(x))=5 via a linear potential g(p) = 3 + 2 p_0 / 1.
  const Potential lin = [](const Matrix& p) -> Vector { return (3.0 + 2.0 * p.col(0).array()).matrix(); };
  CHECK(loss_g(lin, row({1.0, 0.0}), row({0.0, 0.0})) == doctest::Approx(2.0));

  CHECK(loss_f(zero, x, x, c) == 0.0);
  CHECK(loss_f(zero, x, y, c) == doctest::Approx(0.5));
  CHECK(loss_f(constant_potential(1.5), x, y, c) == doctest::Approx(0.5 - 1.5));

  CHECK(reg_g(zero, x, y, x, c, 0.9) == doctest::Approx(0.025));
  CHECK(reg_f(zero, x, y, y, c, 0.9, true) == doctest::Approx(0.025));
  CHECK(reg_g(lin, x, y, y, c, 0.9) == 0.0);
  CHECK(reg_f(lin, x, y, x, c, 0.9, true) == 0.0);
  CHECK(kind_of([&] { reg_f(zero, x, y, y, c, 0.9, false); }) == ErrorKind::NotBidirectional);
  CHECK(kind_of([&] { loss_g(zero, Matrix(0, 2), Matrix(0, 2)); }) == ErrorKind::EmptyBatch);

  CHECK(distance_estimate(zero, x, x, x, c) == 0.0);
}

TEST_CASE("losses are invariant under adding a constant to the potential") {
  data::CounterRng rng(17, 0);
  for (auto kind : {CostKind::half_sq_euclidean, CostKind::sq_euclidean, CostKind::euclidean}) {
    const CostFunction c{kind};
    for (int trial = 0; trial < 10; ++trial) {
      const int d = 1 + trial % 4;
      const nn::PotentialNetwork net = nn::init({{8, 8}, ad::Activation::elu, static_cast<std::uint64_t>(trial)}, d, 1);
      const Matrix x = random_matrix(rng, 16, d), y = random_matrix(rng, 16, d), t = random_matrix(rng, 16, d);
      const Potential g = as_potential(net);
      const double k = 100.0 * rng.normal();
      const Potential gk = [&](const Matrix& p) -> Vector { return (g(p).array() + k).matrix(); };
      CHECK(std::abs(loss_g(g, t, y) - loss_g(gk, t, y)) < 1e-9);
      CHECK(std::abs(reg_g(g, x, y, t, c, 0.9) - reg_g(gk, x, y, t, c, 0.9)) < 1e-9);
      CHECK(std::abs(reg_f(g, x, y, t, c, 0.9, true) - reg_f(gk, x, y, t, c, 0.9, true)) < 1e-9);
      CHECK(std::abs(distance_estimate(g, x, y, t, c) - distance_estimate(gk, x, y, t, c)) < 1e-9);
      // loss_f moves by exactly -k.
      CHECK(loss_f(gk, x, t, c) - loss_f(g, x, t, c) == doctest::Approx(-k).epsilon(1e-12));
    }
  }
}

TEST_CASE("brute-force c-transform") {
  const CostFunction c;
  data::CounterRng rng(9, 9);
  const Matrix xs = random_matrix(rng, 20, 2);
  const Vector y = random_matrix(rng, 1, 2).transpose();
  double nearest = 1e300;
  for (Eigen::Index i = 0; i < xs.rows(); ++i) nearest = std::min(nearest, (xs.row(i).transpose() - y).squaredNorm());
  CHECK(c_transform_bruteforce(constant_potential(0.0), y, xs, c) == doctest::Approx(0.5 * nearest));
  const nn::PotentialNetwork net = nn::init({{8}, ad::Activation::elu, 1}, 2, 1);
  const Potential g = as_potential(net);
  CHECK(c_transform_bruteforce(g, y, y.transpose(), c) == doctest::Approx(-g(y.transpose())(0)));

  // Conjugate sandwich: g^T(x) >= finite-sample g^c(x) when T(x) is among the samples.
  const Matrix x = random_matrix(rng, 1, 2);
  for (Eigen::Index i = 0; i < xs.rows(); ++i) {
    const Matrix t = xs.row(i);
    const double gT = paired_cost(c, x, t)(0, 0) - g(t)(0);
    CHECK(gT >= c_transform_bruteforce(g, x.row(0).transpose(), xs, c) - 1e-12);
  }
}

TEST_CASE("transport map examples") {
  EnotConfig cfg = small_config();
  data::CounterRng rng(2, 2);
  const Matrix x = random_matrix(rng, 10, 3);
  CHECK(transport_map(init_state(cfg, 3), x, cfg) == x);

  cfg.map_parametrization = MapParametrization::potential_gradient;
  cfg.f_arch.activation = ad::Activation::smooth_elu;
  TrainState s = init_state(cfg, 3);
  CHECK(transport_map(s, x, cfg).isApprox(x, 1e-15));
  // grad h* is the identity for the half square cost and halves for |x - y|^2.
  CHECK(conjugate_gradient(cfg.cost, x) == x);
  CHECK(conjugate_gradient(CostFunction{CostKind::sq_euclidean}, x).isApprox(0.5 * x));

  // A nonzero output layer: T(x) = x - grad f(x).
  s.f.params().setConstant(0.05);
  const Matrix grad = nn::input_gradient(s.f, x);
  CHECK(transport_map(s, x, cfg).isApprox(x - grad, 1e-12));

  EnotConfig bad = cfg;
  bad.cost.kind = CostKind::euclidean;
  CHECK(kind_of([&] { validate(bad); }) == ErrorKind::MissingConjugateGradient);
}

TEST_CASE("validate") {
  EnotConfig c = small_config();
  c.tau = 0.999;
  const auto w = validate(c);
  CHECK(c.tau == kMaxTau);
  CHECK(w.size() == 1);
  c.tau = 0.4;
  CHECK(kind_of([&] { validate(c); }) == ErrorKind::BadConfig);
  c = small_config();
  c.lambda = -1;
  CHECK(kind_of([&] { validate(c); }) == ErrorKind::BadConfig);
  c = small_config();
  c.bidirectional = true;
  c.f_arch.activation = c.g_arch.activation = ad::Activation::leaky_relu;
  CHECK(kind_of([&] { validate(c); }) == ErrorKind::NonSmoothActivation);
  c.f_arch.activation = c.g_arch.activation = ad::Activation::elu;
  CHECK(validate(c).size() == 2);  // ELU is accepted with a warning
  c.cost.kind = CostKind::sphere_geodesic;
  CHECK(kind_of([&] { validate(c); }) == ErrorKind::MissingConjugateGradient);
}

TEST_CASE("train_step: lambda=0 matches the step with the regularizer removed") {
  const auto task = data::make_gaussian_task(2, 3);
  const Matrix x = task.source.sample(32, 1), y = task.target.sample(32, 2);
  for (bool gradient_map : {false, true}) {
    EnotConfig c = small_config();
    if (gradient_map) {
      c.map_parametrization = MapParametrization::potential_gradient;
      c.f_arch.activation = ad::Activation::smooth_elu;
    }
    c.lambda = 0.0;
    TrainState a = init_state(c, 2);
    TrainState b = a;
    for (int k = 0; k < 3; ++k) {
      train_step(a, x, y, c);
      train_step(b, x, y, c, {Direction::forward, true});
    }
    CHECK(a.f.params() == b.f.params());
    CHECK(a.g.params() == b.g.params());

    // With lambda > 0 the regularizer changes the critic update.
    EnotConfig r = c;
    r.lambda = 0.3;
    TrainState d = init_state(r, 2);
    TrainState e = d;
    train_step(d, x, y, r);
    train_step(e, x, y, r, {Direction::forward, true});
    CHECK(d.g.params() != e.g.params());
    CHECK(d.f.params() == e.f.params());
  }
}

TEST_CASE("train_step: zero learning rates keep parameters and still report losses") {
  EnotConfig c = small_config();
  c.f_opt.lr0 = c.f_opt.lr_final = c.g_opt.lr0 = c.g_opt.lr_final = 0.0;
  const auto task = data::make_gaussian_task(2, 1);
  TrainState s = init_state(c, 2);
  const TrainState before = s;
  const auto rec = train_step(s, task.source.sample(32, 1), task.target.sample(32, 2), c);
  CHECK(s.f.params() == before.f.params());
  CHECK(s.g.params() == before.g.params());
  CHECK(rec.loss_f.has_value());
  CHECK(rec.loss_g.has_value());
  CHECK(rec.reg_g.has_value());
  CHECK_FALSE(rec.reg_f.has_value());
  CHECK(s.step == 1);
}

TEST_CASE("train is deterministic and N=0 returns the initial state") {
  EnotConfig c = small_config();
  const auto task = data::make_gaussian_task(2, 7);
  auto a = [&](int n, std::uint64_t s) { return task.source.sample(n, s); };
  auto b = [&](int n, std::uint64_t s) { return task.target.sample(n, s); };
  const auto r1 = train(c, a, b, 2);
  const auto r2 = train(c, a, b, 2);
  REQUIRE(r1.log.size() == static_cast<std::size_t>(c.train_steps) + 1);
  for (std::size_t i = 0; i < r1.log.size(); ++i) {
    CHECK(r1.log[i].loss_f == r2.log[i].loss_f);
    CHECK(r1.log[i].loss_g == r2.log[i].loss_g);
    CHECK(r1.log[i].reg_g == r2.log[i].reg_g);
    CHECK(r1.log[i].dist_estimate == r2.log[i].dist_estimate);
  }
  CHECK(r1.state.f.params() == r2.state.f.params());
  CHECK(r1.log.back().status == TrainStatus::converged);
  CHECK(r1.log.back().step == c.train_steps);

  c.train_steps = 0;
  const auto r0 = train(c, a, b, 2);
  CHECK(r0.log.empty());
  CHECK(r0.state.f.params() == init_state(c, 2).f.params());
  CHECK(r0.state.step == 0);
}

TEST_CASE("resuming from a mid-run state reproduces the uninterrupted run") {
  EnotConfig c = small_config();
  const auto task = data::make_gaussian_task(2, 8);
  auto a = [&](int n, std::uint64_t s) { return task.source.sample(n, s); };
  auto b = [&](int n, std::uint64_t s) { return task.target.sample(n, s); };
  const auto full = train(c, a, b, 2);
  TrainOptions first;
  first.stop_after = 9;
  const auto head = train(c, a, b, 2, first);
  CHECK(head.log.size() == 9);
  TrainOptions rest;
  rest.resume = head.state;
  const auto tail = train(c, a, b, 2, rest);
  REQUIRE(head.log.size() + tail.log.size() == full.log.size());
  for (std::size_t i = 0; i < tail.log.size(); ++i) {
    CHECK(tail.log[i].step == full.log[9 + i].step);
    CHECK(tail.log[i].loss_f == full.log[9 + i].loss_f);
    CHECK(tail.log[i].dist_estimate == full.log[9 + i].dist_estimate);
  }
  CHECK(tail.state.g.params() == full.state.g.params());
}

TEST_CASE("a non-finite batch freezes the state as diverged") {
  EnotConfig c = small_config();
  const auto task = data::make_gaussian_task(2, 1);
  TrainState s = init_state(c, 2);
  train_step(s, task.source.sample(32, 1), task.target.sample(32, 2), c);
  const TrainState before = s;
  Matrix x = task.source.sample(32, 3);
  x(4, 1) = std::numeric_limits<double>::quiet_NaN();
  const auto rec = train_step(s, x, task.target.sample(32, 4), c);
  CHECK(rec.status == TrainStatus::diverged);
  CHECK(s.status == TrainStatus::diverged);
  CHECK(s.f.params() == before.f.params());
  CHECK(s.g.params() == before.g.params());
  CHECK(s.opt_f.m == before.opt_f.m);
  CHECK(s.step == before.step);
  for (const auto& v : {rec.loss_f, rec.loss_g, rec.reg_g, rec.dist_estimate})
    CHECK((!v || std::isfinite(*v)));

  // Later steps do nothing.
  const auto again = train_step(s, task.source.sample(32, 5), task.target.sample(32, 6), c);
  CHECK(again.status == TrainStatus::diverged);
  CHECK(s.f.params() == before.f.params());
  CHECK_FALSE(again.loss_f.has_value());

  // A diverging source stops train() with a diverged final row.
  auto nan_source = [&](int n, std::uint64_t st) {
    Matrix m = task.source.sample(n, st);
    if (st == batch_stream(c.seed, 4, 0)) m(0, 0) = std::numeric_limits<double>::infinity();
    return m;
  };
  auto b = [&](int n, std::uint64_t st) { return task.target.sample(n, st); };
  const auto r = train(c, nan_source, b, 2);
  CHECK(r.log.size() == 4);
  CHECK(r.log.back().status == TrainStatus::diverged);
  CHECK(r.state.step == 3);
}

TEST_CASE("bidirectional training alternates directions by step parity") {
  EnotConfig c = small_config(8);
  c.bidirectional = true;
  c.f_arch.activation = c.g_arch.activation = ad::Activation::smooth_elu;
  c.train_steps = 6;
  const auto task = data::make_gaussian_task(2, 2);
  auto a = [&](int n, std::uint64_t s) { return task.source.sample(n, s); };
  auto b = [&](int n, std::uint64_t s) { return task.target.sample(n, s); };
  const auto r = train(c, a, b, 2);
  for (std::size_t i = 0; i + 1 < r.log.size(); ++i) {
    const bool odd = r.log[i].step % 2 == 1;
    CHECK(r.log[i].reg_f.has_value() == odd);
    CHECK(r.log[i].reg_g.has_value() == !odd);
  }
  const Matrix y = task.target.sample(5, 1);
  CHECK(inverse_map(r.state, y, c).rows() == 5);
  EnotConfig one = small_config();
  CHECK(kind_of([&] { inverse_map(init_state(one, 2), y, one); }) == ErrorKind::NotBidirectional);
}

TEST_CASE("sphere maps stay on the sphere") {
  EnotConfig c = small_config();
  c.cost.kind = CostKind::sphere_geodesic;
  c.train_steps = 15;
  const auto task = data::make_sphere_task(3, 1.0, 0.2, 4);
  auto a = [&](int n, std::uint64_t s) { return task.source.sample(n, s); };
  auto b = [&](int n, std::uint64_t s) { return task.target.sample(n, s); };
  const auto r = train(c, a, b, 3);
  const Matrix t = transport_map(r.state, task.source.sample(500, 9), c);
  CHECK(((t.rowwise().norm().array() - 1.0).abs() < 1e-9).all());
}
