#include "enot/ot/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "enot/autodiff/nested.hpp"
#include "enot/autodiff/tape.hpp"
#include "enot/data/rng.hpp"
#include "enot/ot/losses.hpp"

namespace enot::ot {

std::string_view to_string(MapParametrization m) {
  return m == MapParametrization::residual_mlp ? "residual_mlp" : "potential_gradient";
}

std::optional<MapParametrization> parse_map_parametrization(std::string_view name) {
  if (name == "residual_mlp") return MapParametrization::residual_mlp;
  if (name == "potential_gradient") return MapParametrization::potential_gradient;
  return std::nullopt;
}

std::string_view to_string(TrainStatus s) {
  switch (s) {
    case TrainStatus::running: return "running";
    case TrainStatus::converged: return "converged";
    case TrainStatus::diverged: return "diverged";
  }
  return "?";
}

std::optional<TrainStatus> parse_train_status(std::string_view name) {
  for (auto s : {TrainStatus::running, TrainStatus::converged, TrainStatus::diverged})
    if (name == to_string(s)) return s;
  return std::nullopt;
}

namespace {

void check_optimizer(const OptimizerSettings& o, const char* who) {
  const std::string w(who);
  require(std::isfinite(o.lr0) && o.lr0 >= 0.0 && std::isfinite(o.lr_final) && o.lr_final >= 0.0,
          ErrorKind::BadConfig, w + " learning rates must be finite and non-negative");
  require(o.beta1 >= 0.0 && o.beta1 < 1.0 && o.beta2 >= 0.0 && o.beta2 < 1.0, ErrorKind::BadConfig,
          w + " Adam betas must lie in [0, 1)");
  require(o.eps > 0.0, ErrorKind::BadConfig, w + " Adam eps must be positive");
}

void check_smooth(const nn::ArchitectureSpec& arch, const char* who, std::vector<std::string>& warnings) {
  require(ad::smoothness_order(arch.activation) >= 1, ErrorKind::NonSmoothActivation,
          std::string(who) + " uses " + std::string(ad::to_string(arch.activation)) +
              ", whose derivative is discontinuous; the map needs a differentiable input gradient");
  if (ad::smoothness_order(arch.activation) < 2)
    warnings.push_back(std::string(who) + " uses " + std::string(ad::to_string(arch.activation)) +
                       ": second derivative jumps at 0, smooth_elu is recommended for gradient maps");
}

std::uint64_t network_seed(const EnotConfig& config, const nn::ArchitectureSpec& arch, std::uint64_t role) {
  return data::derive_seed(data::derive_seed(config.seed, role), arch.init_seed);
}

optim::CosineSchedule schedule(const OptimizerSettings& o, std::int64_t total) {
  return {o.lr0, o.lr_final, std::max<std::int64_t>(total, 1)};
}

double lr_at(const OptimizerSettings& o, const EnotConfig& config, std::int64_t step) {
  const auto s = schedule(o, config.train_steps);
  return optim::cosine_lr(s, std::min(step, s.total_steps));
}

Matrix potential_map(const nn::PotentialNetwork& net, const Matrix& x, const CostFunction& c) {
  return x - conjugate_gradient(c, nn::input_gradient(net, x));
}

std::optional<double> finite_or_empty(double v) {
  if (std::isfinite(v)) return v;
  return std::nullopt;
}

}  // namespace

std::vector<std::string> validate(EnotConfig& config) {
  std::vector<std::string> warnings;
  require(std::isfinite(config.tau) && config.tau >= 0.5, ErrorKind::BadConfig, "tau must lie in [0.5, 0.99]");
  if (config.tau > kMaxTau) {
    warnings.push_back("tau " + std::to_string(config.tau) + " clamped to 0.99");
    config.tau = kMaxTau;
  }
  require(std::isfinite(config.lambda) && config.lambda >= 0.0, ErrorKind::BadConfig, "lambda must be >= 0");
  require(config.batch_size >= 1, ErrorKind::BadConfig, "batch_size must be >= 1");
  require(config.train_steps >= 0, ErrorKind::BadConfig, "train_steps must be >= 0");
  check_optimizer(config.f_opt, "optimizer f");
  check_optimizer(config.g_opt, "optimizer g");
  for (const auto* arch : {&config.f_arch, &config.g_arch})
    for (int w : arch->hidden) require(w >= 1, ErrorKind::BadConfig, "hidden widths must be positive");

  if (config.bidirectional)
    require(config.cost.is_h_of_difference() && config.cost.has_conjugate_gradient(),
            ErrorKind::MissingConjugateGradient,
            "bidirectional training needs c(x, y) = h(x - y) with a closed-form grad h*");
  if (config.uses_potential_maps()) {
    require(config.cost.has_conjugate_gradient(), ErrorKind::MissingConjugateGradient,
            std::string(to_string(config.cost.kind)) + " has no closed-form grad h* for gradient maps");
    check_smooth(config.f_arch, "network f", warnings);
    if (config.bidirectional) check_smooth(config.g_arch, "network g", warnings);
  }
  return warnings;
}

TrainState init_state(const EnotConfig& config, int dim) {
  require(dim >= 1, ErrorKind::BadParams, "dimension must be >= 1");
  nn::ArchitectureSpec fa = config.f_arch;
  nn::ArchitectureSpec ga = config.g_arch;
  fa.init_seed = network_seed(config, config.f_arch, 0xF);
  ga.init_seed = network_seed(config, config.g_arch, 0x9);

  TrainState s;
  if (config.uses_potential_maps())
    s.f = nn::init(fa, dim, 1, true);
  else
    s.f = nn::init(fa, dim, dim, true);
  // g only defines a map in bidirectional mode.
  s.g = nn::init(ga, dim, 1, config.bidirectional);
  s.opt_f = optim::AdamState::zeros(s.f.params().size(), config.f_opt.beta1, config.f_opt.beta2, config.f_opt.eps);
  s.opt_g = optim::AdamState::zeros(s.g.params().size(), config.g_opt.beta1, config.g_opt.beta2, config.g_opt.eps);
  return s;
}

Matrix transport_map(const TrainState& state, const Matrix& x, const EnotConfig& config) {
  if (config.uses_potential_maps()) return potential_map(state.f, x, config.cost);
  Matrix t = x + nn::evaluate(state.f, x);
  if (config.cost.kind == CostKind::sphere_geodesic) t.rowwise().normalize();
  return t;
}

Matrix inverse_map(const TrainState& state, const Matrix& y, const EnotConfig& config) {
  require(config.bidirectional, ErrorKind::NotBidirectional, "no inverse map outside bidirectional mode");
  return potential_map(state.g, y, config.cost);
}

double estimate_distance(const TrainState& state, const Matrix& x, const Matrix& y, const EnotConfig& config) {
  return distance_estimate(as_potential(state.g), x, y, transport_map(state, x, config), config.cost);
}

StepRecord train_step(TrainState& state, const Matrix& x, const Matrix& y, const EnotConfig& config,
                      const StepOptions& options) {
  require(x.rows() > 0 && y.rows() > 0, ErrorKind::EmptyBatch, "empty batch");
  require(x.rows() == y.rows(), ErrorKind::ShapeMismatch, "batches differ in length");
  require(x.cols() == y.cols(), ErrorKind::DimMismatch, "batches differ in dimension");

  StepRecord rec;
  rec.step = state.step + 1;
  rec.status = state.status;
  if (state.status != TrainStatus::running) return rec;

  const bool inverse = options.direction == Direction::inverse;
  require(!inverse || config.bidirectional, ErrorKind::NotBidirectional, "inverse step outside bidirectional mode");

  nn::PotentialNetwork& mapper = inverse ? state.g : state.f;
  nn::PotentialNetwork& critic = inverse ? state.f : state.g;
  optim::AdamState& mapper_opt = inverse ? state.opt_g : state.opt_f;
  optim::AdamState& critic_opt = inverse ? state.opt_f : state.opt_g;
  const double lr_mapper = lr_at(inverse ? config.g_opt : config.f_opt, config, state.step);
  const double lr_critic = lr_at(inverse ? config.f_opt : config.g_opt, config, state.step);
  const Matrix& src = inverse ? y : x;
  const Matrix& dst = inverse ? x : y;
  const CostFunction& c = config.cost;

  // One tape serves both updates. The critic's pass on T(x) is shared:
  // gradients only flow towards the leaves requested in each grad() call,
  // so the map loss never touches critic weights and the critic loss never
  // reaches back into the map.
  thread_local ad::Tape tape;
  tape.reset();
  const bool gradient_map = config.uses_potential_maps();
  const nn::TapeParams q = nn::bind_params(critic, tape, true);
  const ad::Var xs = tape.constant(src);
  nn::TapeParams p;
  ad::Var tv;
  if (gradient_map) {
    tv = tape.variable(potential_map(mapper, src, c));
  } else {
    p = nn::bind_params(mapper, tape, true);
    tv = nn::residual_map_forward(mapper, p, xs, tape);
    if (c.kind == CostKind::sphere_geodesic) tv = tape.row_normalize(tv);
  }
  const ad::Var gt = nn::forward(critic, q, tv, tape);
  const ad::Var cxt = paired_cost(c, xs, tv, tape);
  // Map loss: mean [c(x, T(x)) - g(T(x))].
  const ad::Var lmap = tape.mean(tape.sub(cxt, gt));

  // Critic loss: mean g(T(x)) - mean g(y) + lambda * R.
  const ad::Var gy = nn::forward(critic, q, tape.constant(dst), tape);
  const ad::Var dual = tape.sub(tape.mean(gt), tape.mean(gy));
  const Matrix offset = tape.value(cxt) - paired_cost(c, src, dst);
  const ad::Var arg = tape.add(tape.sub(tape.constant(offset), gt), gy);
  const ad::Var r = tape.mean(tape.expectile(arg, config.tau));
  ad::Var total = dual;
  if (!options.omit_regularizer && config.lambda != 0.0) total = tape.add(dual, tape.scale(r, config.lambda));

  Vector mapper_grad;
  if (gradient_map) {
    const ad::Var wrt[] = {tv};
    const Matrix u = -*c.conjugate_gradient_scale() * tape.grad(lmap, wrt)[0];
    mapper_grad = ad::input_gradient_jvp(mapper, src, u).mixed_param_grad;
  } else {
    const auto leaves = p.leaves();
    mapper_grad = nn::pack_gradient(mapper, tape.grad(lmap, leaves));
  }
  const auto critic_leaves = q.leaves();
  const Vector critic_grad = nn::pack_gradient(critic, tape.grad(total, critic_leaves));

  const double loss_map = tape.scalar_value(lmap);
  const double loss_dual = tape.scalar_value(dual);
  const double reg = tape.scalar_value(r);
  const double dist = tape.value(gy).mean() + (tape.value(cxt) - tape.value(gt)).mean();

  rec.lr = lr_at(config.f_opt, config, state.step);
  (inverse ? rec.loss_g : rec.loss_f) = finite_or_empty(loss_map);
  (inverse ? rec.loss_f : rec.loss_g) = finite_or_empty(loss_dual);
  (inverse ? rec.reg_f : rec.reg_g) = finite_or_empty(reg);
  rec.dist_estimate = finite_or_empty(dist);

  const bool finite = std::isfinite(loss_map) && std::isfinite(loss_dual) && std::isfinite(reg) &&
                      std::isfinite(dist) && mapper_grad.allFinite() && critic_grad.allFinite();
  if (!finite) {
    state.status = TrainStatus::diverged;
    rec.status = TrainStatus::diverged;
    return rec;
  }

  optim::adam_step(mapper_opt, mapper.params(), mapper_grad, lr_mapper);
  optim::adam_step(critic_opt, critic.params(), critic_grad, lr_critic);
  state.step += 1;
  return rec;
}

std::uint64_t batch_stream(std::uint64_t seed, std::int64_t t, int side) {
  return data::derive_seed(seed, 2 * static_cast<std::uint64_t>(t) + static_cast<std::uint64_t>(side));
}

std::uint64_t eval_stream(std::uint64_t seed, int side) {
  return data::derive_seed(data::derive_seed(seed, 0xE7A15EEDULL), static_cast<std::uint64_t>(side));
}

double final_distance_estimate(const TrainState& state, const EnotConfig& config, const BatchSource& alpha,
                               const BatchSource& beta) {
  const Matrix x = alpha(config.batch_size, eval_stream(config.seed, 0));
  const Matrix y = beta(config.batch_size, eval_stream(config.seed, 1));
  return estimate_distance(state, x, y, config);
}

TrainResult train(const EnotConfig& raw_config, const BatchSource& alpha, const BatchSource& beta, int dim,
                  const TrainOptions& options) {
  EnotConfig config = raw_config;
  validate(config);

  TrainResult out{options.resume ? *options.resume : init_state(config, dim), {}};
  TrainState& st = out.state;
  if (config.train_steps == 0 || st.status != TrainStatus::running) return out;

  const std::int64_t end = std::min(config.train_steps, options.stop_after.value_or(config.train_steps));
  for (std::int64_t t = st.step + 1; t <= end; ++t) {
    const Matrix x = alpha(config.batch_size, batch_stream(config.seed, t, 0));
    const Matrix y = beta(config.batch_size, batch_stream(config.seed, t, 1));
    require(x.cols() == dim && y.cols() == dim, ErrorKind::DimMismatch, "sampler dimension differs from the run");
    StepOptions so;
    so.direction = config.bidirectional && t % 2 == 1 ? Direction::inverse : Direction::forward;
    out.log.push_back(train_step(st, x, y, config, so));
    if (options.on_step) options.on_step(out.log.back());
    if (st.status == TrainStatus::diverged) return out;
  }

  if (st.step == config.train_steps) {
    st.status = TrainStatus::converged;
    StepRecord summary;
    summary.step = st.step;
    summary.dist_estimate = final_distance_estimate(st, config, alpha, beta);
    summary.status = TrainStatus::converged;
    out.log.push_back(summary);
    if (options.on_step) options.on_step(summary);
  }
  return out;
}

}  // namespace enot::ot
