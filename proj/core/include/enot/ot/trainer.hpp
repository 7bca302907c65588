#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "enot/common.hpp"
#include "enot/nn/mlp.hpp"
#include "enot/optim/adam.hpp"
#include "enot/ot/cost.hpp"

namespace enot::ot {

enum class MapParametrization : std::uint8_t { residual_mlp, potential_gradient };
enum class TrainStatus : std::uint8_t { running, converged, diverged };

std::string_view to_string(MapParametrization m);
std::optional<MapParametrization> parse_map_parametrization(std::string_view name);
std::string_view to_string(TrainStatus s);
std::optional<TrainStatus> parse_train_status(std::string_view name);

inline constexpr double kMaxTau = 0.99;

struct OptimizerSettings {
  double lr0 = 3e-4;
  double lr_final = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.9;
  double eps = 1e-8;

  bool operator==(const OptimizerSettings&) const = default;
};

struct EnotConfig {
  double tau = 0.9;
  double lambda = 0.3;
  bool bidirectional = false;
  MapParametrization map_parametrization = MapParametrization::residual_mlp;
  int batch_size = 1024;
  std::int64_t train_steps = 200000;
  CostFunction cost;
  std::uint64_t seed = 0;

  nn::ArchitectureSpec f_arch;
  nn::ArchitectureSpec g_arch;
  OptimizerSettings f_opt{3e-4, 1e-4, 0.9, 0.9, 1e-8};
  OptimizerSettings g_opt{3e-4, 1e-4, 0.9, 0.7, 1e-8};

  /// The forward map is x - grad h*(grad f(x)) rather than x + net(x).
  bool uses_potential_maps() const {
    return bidirectional || map_parametrization == MapParametrization::potential_gradient;
  }

  bool operator==(const EnotConfig&) const = default;
};

/// Checks and normalizes a config in place. tau above 0.99 is clamped; each
/// adjustment or tolerated risk is returned as a warning line. Throws
/// BadConfig, MissingConjugateGradient or NonSmoothActivation.
std::vector<std::string> validate(EnotConfig& config);

struct TrainState {
  nn::PotentialNetwork f;
  nn::PotentialNetwork g;
  optim::AdamState opt_f;
  optim::AdamState opt_g;
  std::int64_t step = 0;
  TrainStatus status = TrainStatus::running;
};

/// Fresh networks and optimizer states for points of dimension `dim`.
TrainState init_state(const EnotConfig& config, int dim);

/// T(x) for the current forward network.
Matrix transport_map(const TrainState& state, const Matrix& x, const EnotConfig& config);
/// T^-1(y) = y - grad h*(grad g(y)); throws NotBidirectional outside bidirectional mode.
Matrix inverse_map(const TrainState& state, const Matrix& y, const EnotConfig& config);

/// mean [g(y) + c(x, T(x)) - g(T(x))] with T from `state`.
double estimate_distance(const TrainState& state, const Matrix& x, const Matrix& y, const EnotConfig& config);

/// One metrics row. Fields that do not apply to the row are empty.
struct StepRecord {
  std::int64_t step = 0;
  std::optional<double> lr;
  std::optional<double> loss_f;
  std::optional<double> loss_g;
  std::optional<double> reg_g;
  std::optional<double> reg_f;
  std::optional<double> dist_estimate;
  TrainStatus status = TrainStatus::running;
};

enum class Direction : std::uint8_t { forward, inverse };

struct StepOptions {
  Direction direction = Direction::forward;
  /// Leaves the expectile term out of the critic update entirely.
  bool omit_regularizer = false;
};

/// One ENOT update on a batch pair. Both networks step from gradients taken
/// at the pre-update parameters. Any non-finite loss or gradient sets
/// status=diverged and leaves parameters and optimizer states untouched.
/// The returned record holds the pre-update losses.
StepRecord train_step(TrainState& state, const Matrix& x, const Matrix& y, const EnotConfig& config,
                      const StepOptions& options = {});

/// Produces batch `n` points for a given stream key.
using BatchSource = std::function<Matrix(int n, std::uint64_t stream)>;

/// Stream key of the step-t batch for side 0 (source) or 1 (target).
std::uint64_t batch_stream(std::uint64_t seed, std::int64_t t, int side);
/// Stream key of the held-out batch used for the final distance estimate.
std::uint64_t eval_stream(std::uint64_t seed, int side);

struct TrainResult {
  TrainState state;
  std::vector<StepRecord> log;
};

struct TrainOptions {
  /// Continue from this state instead of a fresh one.
  std::optional<TrainState> resume;
  /// Stop once state.step reaches this value (no final row unless it equals train_steps).
  std::optional<std::int64_t> stop_after;
  std::function<void(const StepRecord&)> on_step;
};

/// Training loop over steps t = state.step + 1 .. train_steps. In
/// bidirectional mode odd t train the inverse direction. On completion the
/// log ends with a summary row carrying the distance estimate on a fresh
/// held-out batch pair.
TrainResult train(const EnotConfig& config, const BatchSource& alpha, const BatchSource& beta, int dim,
                  const TrainOptions& options = {});

/// The held-out estimate written in the summary row.
double final_distance_estimate(const TrainState& state, const EnotConfig& config, const BatchSource& alpha,
                               const BatchSource& beta);

}  // namespace enot::ot
