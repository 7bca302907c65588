// enot: train, evaluate and sweep expectile-regularized neural OT solvers.
#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#include "enot/cli/commands.hpp"

namespace {

template <class T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream one(item);
    T v{};
    if (!(one >> v) || !(one >> std::ws).eof()) throw CLI::ValidationError(what, "bad list entry '" + item + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace enot::cli;
  CLI::App app{"Expectile-regularized neural optimal transport"};
  app.require_subcommand(1);

  TrainArgs train;
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir, resume;
  std::int64_t stop_after = 0;
  auto* t = app.add_subcommand("train", "Train a transport map; writes metrics.csv, final.ckpt and eval.csv");
  t->add_option("--config", config_path, "INI config file");
  t->add_option("--set", train.overrides, "Override a config key, section.key=value (repeatable)");
  auto* t_seed = t->add_option("--seed", seed, "Training seed");
  t->add_option("--out-dir", out_dir, "Output directory (default: run.out_dir; with --resume, the checkpoint's directory)");
  t->add_option("--resume", resume, "Continue from a checkpoint");
  auto* t_stop = t->add_option("--stop-after", stop_after, "Stop at this step and write step_<n>.ckpt");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint; writes eval.csv");
  e->add_option("checkpoint", eval.checkpoint, "Checkpoint file")->required();
  e->add_option("--set", eval.overrides, "Override a task.* or eval.* key (repeatable)");
  e->add_option("--out-dir", out_dir, "Output directory (default: the checkpoint's directory)");

  SweepArgs sweep;
  std::string tau_grid, lambda_grid, seeds;
  auto* s = app.add_subcommand("sweep", "Train and evaluate over a tau x lambda grid; writes sweep.csv");
  s->add_option("--config", config_path, "INI config file");
  s->add_option("--set", sweep.overrides, "Override a config key (repeatable)");
  auto* s_seed = s->add_option("--seed", seed, "Base training seed");
  s->add_option("--out-dir", out_dir, "Output directory");
  s->add_option("--tau-grid", tau_grid, "Comma-separated tau values");
  s->add_option("--lambda-grid", lambda_grid, "Comma-separated lambda values");
  s->add_option("--seeds", seeds, "Comma-separated training seeds");
  s->add_option("--workers", sweep.workers, "Parallel runs")->check(CLI::PositiveNumber);

  ExportArgs plots;
  std::string grid = "50";
  auto* p = app.add_subcommand("export-plots", "Write arrows.csv and contours.csv for a 2D checkpoint");
  p->add_option("checkpoint", plots.checkpoint, "Checkpoint file")->required();
  p->add_option("--grid", grid, "Contour grid, N or NxM");
  p->add_option("--arrows", plots.arrows, "Number of arrows")->check(CLI::PositiveNumber);
  p->add_option("--out-dir", out_dir, "Output directory (default: the checkpoint's directory)");

  try {
    app.parse(argc, argv);
    if (!tau_grid.empty()) sweep.tau_grid = parse_list<double>(tau_grid, "--tau-grid");
    if (!lambda_grid.empty()) sweep.lambda_grid = parse_list<double>(lambda_grid, "--lambda-grid");
    if (!seeds.empty()) sweep.seeds = parse_list<std::uint64_t>(seeds, "--seeds");
    const auto x = grid.find('x');
    plots.grid_x = std::stoi(grid.substr(0, x));
    plots.grid_y = x == std::string::npos ? plots.grid_x : std::stoi(grid.substr(x + 1));
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kExitConfig;
  } catch (const std::exception& err) {
    std::cerr << "error: --grid: " << err.what() << '\n';
    return kExitConfig;
  }

  const auto opt = [](const std::string& v) { return v.empty() ? std::nullopt : std::optional<std::string>(v); };
  if (*t) {
    train.config_path = opt(config_path);
    train.out_dir = opt(out_dir);
    train.resume = opt(resume);
    if (*t_seed) train.seed = seed;
    if (*t_stop) train.stop_after = stop_after;
    return cmd_train(train, std::cerr);
  }
  if (*e) {
    eval.out_dir = opt(out_dir);
    return cmd_eval(eval, std::cerr);
  }
  if (*s) {
    sweep.config_path = opt(config_path);
    sweep.out_dir = opt(out_dir);
    if (*s_seed) sweep.seed = seed;
    return cmd_sweep(sweep, std::cerr);
  }
  plots.out_dir = opt(out_dir);
  return cmd_export_plots(plots, std::cerr);
}
