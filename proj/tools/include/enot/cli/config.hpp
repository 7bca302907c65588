#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "enot/data/samplers.hpp"
#include "enot/metrics/metrics.hpp"
#include "enot/ot/trainer.hpp"

namespace enot::cli {

enum class TaskKind : std::uint8_t { gaussian, translation, identity, mix, pair2d, sphere };

std::string_view to_string(TaskKind k);
std::optional<TaskKind> parse_task_kind(std::string_view name);

/// Which measures to transport. Only the fields of the selected kind are used.
struct TaskSpec {
  TaskKind kind = TaskKind::gaussian;
  int dim = 2;
  std::uint64_t seed = 0;
  std::vector<double> shift = {1.0};  // translation; one value is broadcast
  int k_source = 3;                   // mix
  int k_target = 10;
  data::SamplerKind source = data::SamplerKind::gaussian;  // pair2d: gaussian, circles2d, moons2d
  data::SamplerKind target = data::SamplerKind::moons2d;
  double noise = 0.05;
  double angle = 1.0;  // sphere
  double spread = 0.15;

  bool operator==(const TaskSpec&) const = default;
};

struct EvalSettings {
  int n_eval = metrics::kDefaultEvalSize;  // points per side for the Sinkhorn divergence
  int uvp_samples = 10000;
  std::optional<double> sinkhorn_epsilon;  // empty: scaled to the target sample

  bool operator==(const EvalSettings&) const = default;
};

struct RunConfig {
  std::string preset = "high_dim";
  std::string out_dir = "runs/enot";
  TaskSpec task;
  ot::EnotConfig enot;
  /// "auto" activations: smooth_elu when the maps are potential gradients,
  /// else elu. normalize() writes the resolved value into enot.*_arch.
  bool f_activation_auto = true;
  bool g_activation_auto = true;
  EvalSettings eval;

  /// Resolves "auto" activations against the current map mode.
  void normalize();

  bool operator==(const RunConfig&) const = default;
};

std::vector<std::string> preset_names();
/// The defaults of a named hyperparameter table. Throws BadConfig.
RunConfig preset(std::string_view name);

/// Parses INI text. A `run.preset` key selects the base values, then every
/// other key overrides it. Unknown sections or keys throw BadConfig.
RunConfig parse_config(std::string_view text, const std::vector<std::string>& overrides = {});
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});
/// Writes every field, so parse_config(serialize(c)) == c.
std::string serialize(const RunConfig& config);

/// Checks the task and the training config together (normalizing tau) and
/// returns the warnings. Throws BadConfig and the trainer's config errors.
std::vector<std::string> validate(RunConfig& config);

data::GroundTruthTask build_task(const TaskSpec& spec);

}  // namespace enot::cli
