#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "enot/cli/checkpoint.hpp"
#include "enot/cli/config.hpp"
#include "enot/cli/csv.hpp"

namespace enot::cli {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitDiverged = 3, kExitIo = 4 };

int exit_code_for(ErrorKind kind);

struct TrainArgs {
  std::optional<std::string> config_path;
  std::vector<std::string> overrides;  // section.key=value
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;  // resumed runs default to the checkpoint's directory
  std::optional<std::string> resume;  // checkpoint to continue from
  std::optional<std::int64_t> stop_after;
};

struct EvalArgs {
  std::string checkpoint;
  std::vector<std::string> overrides;  // task.* and eval.* only
  std::optional<std::string> out_dir;  // defaults to the checkpoint's directory
};

struct SweepArgs {
  std::optional<std::string> config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::vector<double> tau_grid;
  std::vector<double> lambda_grid;
  std::vector<std::uint64_t> seeds;  // empty: the config seed only
  int workers = 1;
};

struct ExportArgs {
  std::string checkpoint;
  int grid_x = 50;
  int grid_y = 50;
  int arrows = 256;
  std::optional<std::string> out_dir;
};

/// Writes config.ini, metrics.csv, and then final.ckpt plus eval.csv when
/// the run ends (or step_<n>.ckpt when --stop-after cuts it short).
int cmd_train(const TrainArgs& args, std::ostream& log);
/// Writes eval.csv.
int cmd_eval(const EvalArgs& args, std::ostream& log);
/// Writes sweep.csv.
int cmd_sweep(const SweepArgs& args, std::ostream& log);
/// Writes arrows.csv and contours.csv.
int cmd_export_plots(const ExportArgs& args, std::ostream& log);

/// The evaluation written to eval.csv for a state trained under `config`.
EvalRow evaluate(const RunConfig& config, const ot::TrainState& state, const data::GroundTruthTask& task);

struct SweepCell {
  double tau = 0.0;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  std::string status;  // converged, diverged or error
  std::int64_t steps = 0;
  std::optional<double> l2_uvp;
  std::optional<double> sinkhorn_forward;
  std::optional<double> dist_estimate;
  double runtime_s = 0.0;
};

/// Trains and evaluates every (tau, lambda, seed) cell; per-cell failures
/// are recorded in the cell instead of thrown. Output order is grid order
/// (tau-major) regardless of `workers`.
std::vector<SweepCell> run_sweep(const RunConfig& base, const std::vector<double>& taus,
                                 const std::vector<double>& lambdas, const std::vector<std::uint64_t>& seeds,
                                 int workers);

// sweep.csv: tau,lambda,seed,status,steps,l2_uvp,sinkhorn_forward,dist_estimate,runtime_s
void write_sweep_csv(std::ostream& out, const std::vector<SweepCell>& cells);

std::vector<double> default_tau_grid();
std::vector<double> default_lambda_grid();

}  // namespace enot::cli
