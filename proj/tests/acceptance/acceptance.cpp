// Acceptance checks. One line per criterion:
//   PASS|FAIL <id> <name>: <measured> (<threshold>)
// Usage: enot_acceptance [id ...]   (no ids: all criteria)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "enot/autodiff/nested.hpp"
#include "enot/cli/commands.hpp"
#include "enot/data/samplers.hpp"
#include "enot/metrics/metrics.hpp"
#include "enot/oracles/oracles.hpp"
#include "enot/ot/expectile.hpp"
#include "enot/ot/losses.hpp"
#include "enot/ot/trainer.hpp"
#include "fd.hpp"

using namespace enot;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned tolerances.
constexpr double kGradTol = 1e-5;
constexpr double kNestedTol = 1e-4;
constexpr double kGradBudgetS = 30.0;
constexpr double kExpectileMaxTol = 0.02;
constexpr double kOracleGapTol = 0.01;
constexpr double kUvpTol = 2.0;
constexpr double kTaskBudgetS = 15 * 60.0;
constexpr double kDistTol = 0.05;
constexpr double kIdentityDistTol = 0.05;
constexpr double kIdentityMoveTol = 0.02;
constexpr double kShiftTol = 1e-9;
constexpr double kLinearR2 = 0.999;
constexpr double kRuntimeBudgetS = 10 * 60.0;
constexpr double kSphereNormTol = 1e-9;
constexpr double kSphereGain = 10.0;

// Criterion 4: the high-dimensional defaults with the step count cut to the budget.
constexpr std::int64_t kGaussianSteps = 10000;
// Short runs anneal to lr0 * 1e-4 instead of stopping at the 1e-4 floor.
constexpr double kShortRunLrFinal = 3e-8;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ot::BatchSource source_of(const data::MeasureSampler& s) {
  return [s](int n, std::uint64_t stream) { return s.sample(n, stream); };
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("enot_acceptance_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// 1 ------------------------------------------------------------------------

Outcome gradient_correctness() {
  using testing::central_difference;
  using testing::max_relative_error;
  const auto t0 = Clock::now();
  data::CounterRng rng(2024, 1);
  double worst = 0.0, worst_nested = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + static_cast<int>(rng.next_u64() % 8);
    std::vector<int> hidden(1 + rng.next_u64() % 3);
    for (int& w : hidden) w = 1 + static_cast<int>(rng.next_u64() % 32);
    const auto act = trial % 2 ? ad::Activation::elu : ad::Activation::smooth_elu;
    const nn::PotentialNetwork net = nn::init({hidden, act, static_cast<std::uint64_t>(trial)}, d, 1);
    const Matrix x = testing::random_matrix(rng, 4, d);
    const Matrix w = testing::random_matrix(rng, 4, 1);

    ad::Tape tape;
    const auto params = nn::bind_params(net, tape, true);
    const ad::Var out = tape.sum(tape.mul(nn::forward(net, params, tape.constant(x), tape), tape.constant(w)));
    const auto leaves = params.leaves();
    const Vector analytic = nn::pack_gradient(net, tape.grad(out, leaves));
    auto fp = [&](const Vector& p) {
      return nn::evaluate(nn::PotentialNetwork(net.layer_widths(), act, p), x).col(0).dot(w.col(0));
    };
    worst = std::max(worst, max_relative_error(analytic, central_difference(fp, net.params())));

    const Matrix gx = nn::input_gradient(net, x);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      auto fx = [&](const Vector& xi) { return nn::evaluate(net, xi.transpose())(0, 0); };
      worst = std::max(worst, max_relative_error(gx.row(i).transpose(), central_difference(fx, x.row(i).transpose())));
    }

    // Nested: d/dtheta of 0.5 |x - grad f(x) - r|^2, on a C2 activation.
    const nn::PotentialNetwork smooth(net.layer_widths(), ad::Activation::smooth_elu, net.params());
    const Matrix r = testing::random_matrix(rng, 4, d);
    auto downstream = [&](ad::Tape& t, ad::Var v) {
      return t.scale(t.sum(t.square(t.sub(t.sub(t.constant(x), v), t.constant(r)))), 0.5);
    };
    const auto nested = ad::grad_of_input_grad(smooth, x, downstream);
    auto fn = [&](const Vector& p) {
      const nn::PotentialNetwork probe(net.layer_widths(), ad::Activation::smooth_elu, p);
      return 0.5 * (x - nn::input_gradient(probe, x) - r).squaredNorm();
    };
    worst_nested = std::max(worst_nested, max_relative_error(nested.param_grad, central_difference(fn, smooth.params())));
  }
  const double dt = seconds_since(t0);
  return {worst < kGradTol && worst_nested < kNestedTol && dt < kGradBudgetS,
          fmt("max rel err %.2e (< %.0e), nested %.2e (< %.0e), %.1f s (< %.0f s)", worst, kGradTol, worst_nested,
              kNestedTol, dt, kGradBudgetS)};
}

// 2 ------------------------------------------------------------------------

Outcome expectile_properties() {
  const std::vector<double> s = {1, 2, 3, 4};
  const double half = ot::scalar_expectile(s, 0.5);
  bool monotone = true;
  double worst = 0.0;
  data::CounterRng rng(7, 7);
  for (int set = 0; set < 50; ++set) {
    // For an isolated maximum the tau=0.999 gap is about (1 - tau) / tau * sum (max - x_i),
    // so the 2% bound holds for sets of a few tens of points; sizes are 10..30.
    std::vector<double> xs(static_cast<std::size_t>(10 + set % 21));
    const double scale = 0.1 + 10.0 * rng.uniform();
    for (double& x : xs) x = scale * rng.normal() + 5.0 * rng.normal();
    double prev = -1e300;
    for (double tau : {0.5, 0.7, 0.9, 0.99, 0.999}) {
      const double e = ot::scalar_expectile(xs, tau);
      monotone = monotone && e >= prev;
      prev = e;
    }
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    worst = std::max(worst, (*hi - ot::scalar_expectile(xs, 0.999)) / (*hi - *lo));
  }
  return {half == 2.5 && monotone && worst < kExpectileMaxTol,
          fmt("e(0.5)=%.17g (== 2.5), monotone=%s, max gap to sample max %.4f of range (< %.2f)", half,
              monotone ? "yes" : "no", worst, kExpectileMaxTol)};
}

// 3 ------------------------------------------------------------------------

Outcome oracle_agreement() {
  data::CounterRng rng(3, 3);
  const ot::CostFunction c;
  bool monotone = true;
  double worst = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const int n = 2 + inst % 5, m = 2 + (inst * 7) % 5;
    const Matrix x = testing::random_matrix(rng, n, 2), y = testing::random_matrix(rng, m, 2);
    Vector a(n), b(m);
    for (int i = 0; i < n; ++i) a(i) = inst % 2 ? 1.0 : 0.5 + rng.uniform();
    for (int j = 0; j < m; ++j) b(j) = inst % 2 ? 1.0 : 0.5 + rng.uniform();
    const oracles::DiscreteMeasurePair pair{x, y, a / a.sum(), b / b.sum()};
    const double exact = oracles::exact_discrete_ot(pair, c).cost;
    const Matrix cm = ot::cost_matrix(c, x, y);
    const double base = oracles::default_epsilon(cm);
    double prev = 1e300, gap = 0.0;
    for (double eps : {4 * base, 2 * base, base}) {
      gap = oracles::sinkhorn(pair, cm, {eps, 200000, 1e-12, true}).transport_cost - exact;
      monotone = monotone && gap <= prev + 1e-12;
      prev = gap;
    }
    worst = std::max(worst, std::abs(gap) / exact);
  }
  return {monotone && worst < kOracleGapTol,
          fmt("gap shrinks monotonically=%s, max final relative gap %.2e (< %.2f)", monotone ? "yes" : "no", worst,
              kOracleGapTol)};
}

// 4 ------------------------------------------------------------------------

Outcome gaussian_recovery(const std::vector<int>& dims) {
  std::string detail;
  bool pass = true;
  for (int d : dims) {
    double sum = 0.0, slowest = 0.0;
    std::string per_seed;
    for (std::uint64_t seed : {1, 2, 3}) {
      const auto task = data::make_gaussian_task(d, seed);
      ot::EnotConfig c;
      c.train_steps = kGaussianSteps;
      c.f_opt.lr_final = c.g_opt.lr_final = kShortRunLrFinal;
      c.seed = seed;
      const auto t0 = Clock::now();
      const auto r = ot::train(c, source_of(task.source), source_of(task.target), d);
      const double dt = seconds_since(t0);
      const double uvp = r.state.status == ot::TrainStatus::converged
                             ? metrics::l2_uvp([&](const Matrix& x) { return ot::transport_map(r.state, x, c); },
                                               task, 10000, data::derive_seed(seed, 0xE7A1))
                             : std::numeric_limits<double>::infinity();
      sum += uvp;
      slowest = std::max(slowest, dt);
      per_seed += fmt("%s%.3f", per_seed.empty() ? "" : "/", uvp);
      std::fprintf(stderr, "  d=%d seed=%llu: L2-UVP %.3f in %.0f s\n", d, static_cast<unsigned long long>(seed), uvp, dt);
    }
    const double mean = sum / 3.0;
    pass = pass && mean < kUvpTol && slowest < kTaskBudgetS;
    detail += fmt("%sd=%d mean %.3f [%s] max %.0f s", detail.empty() ? "" : "; ", d, mean, per_seed.c_str(), slowest);
  }
  return {pass, detail + fmt(" (mean < %.1f, < %.0f s per task, %lld steps, lr_final %.0e)", kUvpTol, kTaskBudgetS,
                             static_cast<long long>(kGaussianSteps), kShortRunLrFinal)};
}

// 5 ------------------------------------------------------------------------

Outcome distance_estimation() {
  const Vector m{{1.0, 1.0}};
  const auto task = data::make_translation_task(m, 5);
  ot::EnotConfig c;
  c.train_steps = 4000;
  c.seed = 5;
  const auto r = ot::train(c, source_of(task.source), source_of(task.target), 2);
  // The estimator on a large held-out pair keeps Monte-Carlo noise well below the tolerance.
  const int n = 100000;
  const double dist = ot::estimate_distance(r.state, task.source.sample(n, ot::eval_stream(c.seed, 0)),
                                            task.target.sample(n, ot::eval_stream(c.seed, 1)), c);
  const double truth = 0.5 * m.squaredNorm();
  const double rel = std::abs(dist - truth) / truth;
  return {rel < kDistTol, fmt("estimate %.4f vs 0.5|m|^2 = %.4f, rel err %.4f (< %.2f); training-log estimate %.4f",
                              dist, truth, rel, kDistTol, *r.log.back().dist_estimate)};
}

// 6 ------------------------------------------------------------------------

Outcome identity_sanity() {
  const auto task = data::make_identity_task(2, 6);
  ot::EnotConfig c;
  c.train_steps = 2000;
  c.seed = 6;
  const auto r = ot::train(c, source_of(task.source), source_of(task.target), 2);
  const double tv = task.target.analytic_covariance()->trace();
  const double dist = *r.log.back().dist_estimate;
  const Matrix x = task.source.sample(10000, ot::eval_stream(c.seed, 0));
  const double move = (ot::transport_map(r.state, x, c) - x).rowwise().squaredNorm().mean();
  return {std::abs(dist) <= kIdentityDistTol * tv && move <= kIdentityMoveTol * tv,
          fmt("|dist| %.2e (<= %.3f), E|T(x)-x|^2 %.2e (<= %.3f), total variance %.3f", std::abs(dist),
              kIdentityDistTol * tv, move, kIdentityMoveTol * tv, tv)};
}

// 7 ------------------------------------------------------------------------

Outcome shift_invariance() {
  data::CounterRng rng(8, 8);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + trial % 5;
    const ot::CostFunction c{static_cast<ot::CostKind>(trial % 3)};
    const auto net = nn::init({{16, 16}, ad::Activation::elu, static_cast<std::uint64_t>(trial)}, d, 1);
    const ot::Potential g = ot::as_potential(net);
    const double k = 1000.0 * rng.normal();
    const ot::Potential gk = [&](const Matrix& p) -> Vector { return (g(p).array() + k).matrix(); };
    const Matrix x = testing::random_matrix(rng, 64, d), y = testing::random_matrix(rng, 64, d);
    const Matrix t = testing::random_matrix(rng, 64, d);
    const double diffs[] = {
        ot::loss_g(g, t, y) - ot::loss_g(gk, t, y),
        ot::reg_g(g, x, y, t, c, 0.9) - ot::reg_g(gk, x, y, t, c, 0.9),
        ot::reg_f(g, x, y, t, c, 0.9, true) - ot::reg_f(gk, x, y, t, c, 0.9, true),
        ot::distance_estimate(g, x, y, t, c) - ot::distance_estimate(gk, x, y, t, c),
    };
    for (double v : diffs) worst = std::max(worst, std::abs(v));
  }
  return {worst <= kShiftTol, fmt("max |change| %.2e over 100 batches, shifts up to ~1e3 (<= %.0e)", worst, kShiftTol)};
}

// 8 ------------------------------------------------------------------------

Outcome runtime_property() {
  auto cfg = cli::preset("synthetic2d");
  cfg.normalize();
  cli::validate(cfg);
  const auto task = cli::build_task(cfg.task);
  const int iters = 5000;
  ot::EnotConfig c = cfg.enot;
  c.train_steps = 20000;  // the schedule of the full run; timing stops after `iters`
  std::vector<double> cumulative;
  cumulative.reserve(iters);
  ot::TrainOptions opt;
  opt.stop_after = iters;
  const auto t0 = Clock::now();
  opt.on_step = [&](const ot::StepRecord&) { cumulative.push_back(seconds_since(t0)); };
  ot::train(c, source_of(task.source), source_of(task.target), 2, opt);

  // R^2 of cumulative time against iteration index.
  const double n = static_cast<double>(cumulative.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < cumulative.size(); ++i) {
    const double xi = static_cast<double>(i + 1), yi = cumulative[i];
    sx += xi, sy += yi, sxx += xi * xi, sxy += xi * yi, syy += yi * yi;
  }
  const double cov = sxy - sx * sy / n, vx = sxx - sx * sx / n, vy = syy - sy * sy / n;
  const double r2 = cov * cov / (vx * vy);
  const double slope = cov / vx;
  const double projected = slope * 20000.0;
  return {r2 > kLinearR2 && projected < kRuntimeBudgetS,
          fmt("R^2 %.6f (> %.3f) over %d steps, %.1f ms/step, projected 20k steps %.0f s (< %.0f s)", r2, kLinearR2,
              iters, 1e3 * slope, projected, kRuntimeBudgetS)};
}

// 9 ------------------------------------------------------------------------

Outcome ablation_sweep() {
  const fs::path out = scratch("sweep");
  cli::SweepArgs a;
  a.overrides = {"task.kind=gaussian", "task.dim=4",   "task.seed=9",        "enot.train_steps=400",
                 "enot.batch_size=256", "f_net.hidden=64,64,64", "g_net.hidden=64,64,64", "eval.n_eval=500",
                 "eval.uvp_samples=2000"};
  a.out_dir = out.string();
  a.tau_grid = cli::default_tau_grid();
  a.lambda_grid = cli::default_lambda_grid();
  std::ostringstream log;
  const int code = cli::cmd_sweep(a, log);
  std::istringstream in(slurp(out / "sweep.csv"));
  std::string line;
  std::getline(in, line);
  const bool header = line == "tau,lambda,seed,status,steps,l2_uvp,sinkhorn_forward,dist_estimate,runtime_s";
  int rows = 0, converged = 0, diverged = 0, bad = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 9) {
      ++bad;
    } else if (f[3] == "converged") {
      ++converged;
      if (f[5].empty() || !std::isfinite(std::stod(f[5]))) ++bad;
    } else if (f[3] == "diverged") {
      ++diverged;
      if (!f[5].empty()) ++bad;
    } else {
      ++bad;
    }
  }
  const int expected = static_cast<int>(a.tau_grid.size() * a.lambda_grid.size());
  fs::remove_all(out);
  return {code == 0 && header && rows == expected && bad == 0,
          fmt("exit %d, %d/%d rows (%d converged, %d diverged), %d malformed", code, rows, expected, converged,
              diverged, bad)};
}

// 10 -----------------------------------------------------------------------

Outcome geodesic_mode() {
  const auto task = data::make_sphere_task(3, 1.0, 0.15, 10);
  ot::EnotConfig c;
  c.cost.kind = ot::CostKind::sphere_geodesic;
  c.train_steps = 10000;
  c.f_opt.lr_final = c.g_opt.lr_final = kShortRunLrFinal;
  c.batch_size = 256;
  c.f_arch.hidden = c.g_arch.hidden = {64, 64, 64};
  c.seed = 10;
  const ot::TrainState init = ot::init_state(c, 3);
  const auto r = ot::train(c, source_of(task.source), source_of(task.target), 3);
  const Matrix x = task.source.sample(10000, 77);
  const double norm_err = (ot::transport_map(r.state, x, c).rowwise().norm().array() - 1.0).abs().maxCoeff();
  const int n = 1000;
  auto div = [&](const ot::TrainState& s) {
    return metrics::pushforward_sinkhorn([&](const Matrix& p) { return ot::transport_map(s, p, c); }, task.source,
                                         task.target, n, std::nullopt, c.cost, 1)
        .debiased;
  };
  const double before = div(init), after = div(r.state);
  return {norm_err <= kSphereNormTol && after * kSphereGain <= before,
          fmt("max | |T(x)| - 1 | %.1e (<= %.0e), divergence %.4f -> %.4f, ratio %.1f (>= %.0f)", norm_err,
              kSphereNormTol, before, after, before / after, kSphereGain)};
}

// 11 -----------------------------------------------------------------------

Outcome reproducibility() {
  const fs::path a = scratch("rep_a"), b = scratch("rep_b"), p = scratch("rep_p");
  auto args = [](const fs::path& dir) {
    cli::TrainArgs t;
    t.overrides = {"run.seed=11",          "run.out_dir=" + dir.string(), "task.dim=3",
                   "enot.train_steps=300", "enot.batch_size=128",         "f_net.hidden=32,32",
                   "g_net.hidden=32,32",   "eval.n_eval=300",             "eval.uvp_samples=2000"};
    return t;
  };
  std::ostringstream log;
  bool ok = cli::cmd_train(args(a), log) == 0 && cli::cmd_train(args(b), log) == 0;
  auto part = args(p);
  part.stop_after = 137;
  ok = ok && cli::cmd_train(part, log) == 0;
  cli::TrainArgs resume;
  resume.resume = (p / "step_137.ckpt").string();
  ok = ok && cli::cmd_train(resume, log) == 0;
  const std::string ma = slurp(a / "metrics.csv");
  const bool rerun = !ma.empty() && ma == slurp(b / "metrics.csv") && slurp(a / "eval.csv") == slurp(b / "eval.csv");
  bool same_state = false;
  if (ok) {
    // The embedded configs differ in out_dir only; compare the trained state.
    const auto ca = cli::load_checkpoint((a / "final.ckpt").string());
    const auto cp = cli::load_checkpoint((p / "final.ckpt").string());
    same_state = ca.state.f.params() == cp.state.f.params() && ca.state.g.params() == cp.state.g.params() &&
                 ca.state.opt_f.m == cp.state.opt_f.m && ca.state.opt_g.v == cp.state.opt_g.v &&
                 ca.state.step == cp.state.step;
  }
  const bool resumed =
      ma == slurp(p / "metrics.csv") && slurp(a / "eval.csv") == slurp(p / "eval.csv") && same_state;
  for (const auto& d : {a, b, p}) fs::remove_all(d);
  return {ok && rerun && resumed, fmt("runs ok=%s, rerun identical=%s, resume at 137/300 identical=%s",
                                      ok ? "yes" : "no", rerun ? "yes" : "no", resumed ? "yes" : "no")};
}

struct Criterion {
  std::string id;
  std::string name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<Criterion> all = {
      {"1", "gradient correctness", gradient_correctness},
      {"2", "expectile properties", expectile_properties},
      {"3", "oracle agreement", oracle_agreement},
      {"4", "gaussian recovery", [] { return gaussian_recovery({2, 4, 8}); }},
      {"4.d2", "gaussian recovery d=2", [] { return gaussian_recovery({2}); }},
      {"4.d4", "gaussian recovery d=4", [] { return gaussian_recovery({4}); }},
      {"4.d8", "gaussian recovery d=8", [] { return gaussian_recovery({8}); }},
      {"5", "distance estimation", distance_estimation},
      {"6", "identity sanity", identity_sanity},
      {"7", "shift invariance", shift_invariance},
      {"8", "no-inner-loop runtime", runtime_property},
      {"9", "ablation sweep", ablation_sweep},
      {"10", "geodesic mode", geodesic_mode},
      {"11", "reproducibility", reproducibility},
  };
  std::vector<std::string> wanted(argv + 1, argv + argc);
  if (wanted.empty())
    for (const auto& c : all)
      if (c.id.find('.') == std::string::npos) wanted.push_back(c.id);

  int failures = 0;
  for (const auto& id : wanted) {
    const auto it = std::find_if(all.begin(), all.end(), [&](const Criterion& c) { return c.id == id; });
    if (it == all.end()) {
      std::fprintf(stderr, "unknown criterion %s\n", id.c_str());
      return 2;
    }
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = it->run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s %s %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", it->id.c_str(), it->name.c_str(),
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
