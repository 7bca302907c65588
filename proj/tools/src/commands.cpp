#include "enot/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include "enot/data/rng.hpp"

namespace enot::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kUvpStream = 0xE7A1;
constexpr std::uint64_t kSinkhornStream = 0xE7A2;
constexpr std::uint64_t kArrowStream = 0xA770;
constexpr std::uint64_t kBoundsStream = 0xB0B0;

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::trunc) {
  std::ofstream out(path, std::ios::out | mode);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw Error(ErrorKind::Io, "write to " + path.string() + " failed");
}

ot::BatchSource source_of(const data::MeasureSampler& s) {
  return [&s](int n, std::uint64_t stream) { return s.sample(n, stream); };
}

RunConfig config_from(const std::optional<std::string>& path, const std::vector<std::string>& overrides,
                      std::optional<std::uint64_t> seed) {
  RunConfig c = path ? load_config(*path, overrides) : parse_config("", overrides);
  if (seed) c.enot.seed = *seed;
  return c;
}

void report_warnings(const std::vector<std::string>& warnings, std::ostream& log) {
  for (const auto& w : warnings) log << "warning: " << w << '\n';
}

// Keeps the header and the rows up to `step` so a resumed run appends
// exactly what the uninterrupted run would have written.
void truncate_metrics(const fs::path& path, std::int64_t step) {
  std::ifstream in(path);
  std::string line;
  std::ostringstream kept;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      kept << line << '\n';
      header = false;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) break;
    if (std::stoll(line.substr(0, comma)) > step) break;
    kept << line << '\n';
  }
  in.close();
  auto out = open_out(path);
  out << kept.str();
  finish(out, path);
}

template <class F>
int guarded(std::ostream& log, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::BadConfig:
    case ErrorKind::BadParams:
    case ErrorKind::MissingConjugateGradient:
    case ErrorKind::NonSmoothActivation:
    case ErrorKind::NotBidirectional:
    case ErrorKind::IncompatibleTask:
    case ErrorKind::NotTwoDimensional: return kExitConfig;
    case ErrorKind::Io:
    case ErrorKind::CorruptCheckpoint: return kExitIo;
    default: return kExitFailure;
  }
}

EvalRow evaluate(const RunConfig& config, const ot::TrainState& state, const data::GroundTruthTask& task) {
  const ot::EnotConfig& e = config.enot;
  const metrics::MapFn forward = [&](const Matrix& x) { return ot::transport_map(state, x, e); };
  EvalRow row;
  row.step = state.step;
  row.status = state.status;
  row.cost = e.cost.kind;
  row.report.n_eval = config.eval.n_eval;
  if (task.optimal_map)
    row.report.l2_uvp = metrics::l2_uvp(forward, task, config.eval.uvp_samples, data::derive_seed(e.seed, kUvpStream));
  const auto stream = data::derive_seed(e.seed, kSinkhornStream);
  const auto fwd = metrics::pushforward_sinkhorn(forward, task.source, task.target, config.eval.n_eval,
                                                 config.eval.sinkhorn_epsilon, e.cost, stream);
  row.report.sinkhorn_forward = fwd.debiased;
  row.report.sinkhorn_forward_raw = fwd.raw;
  row.sinkhorn_epsilon = fwd.epsilon;
  if (e.bidirectional) {
    const metrics::MapFn inverse = [&](const Matrix& y) { return ot::inverse_map(state, y, e); };
    row.report.sinkhorn_backward = metrics::pushforward_sinkhorn(inverse, task.target, task.source,
                                                                 config.eval.n_eval, config.eval.sinkhorn_epsilon,
                                                                 e.cost, stream)
                                       .debiased;
  }
  row.report.dist_estimate = ot::final_distance_estimate(state, e, source_of(task.source), source_of(task.target));
  return row;
}

int cmd_train(const TrainArgs& args, std::ostream& log) {
  return guarded(log, [&] {
    RunConfig config;
    std::optional<Checkpoint> resume;
    if (args.resume) {
      require(!args.config_path && args.overrides.empty() && !args.seed, ErrorKind::BadConfig,
              "--resume takes the configuration from the checkpoint; drop --config, --set and --seed");
      resume = load_checkpoint(*args.resume);
      config = resume->config;
    } else {
      config = config_from(args.config_path, args.overrides, args.seed);
    }
    if (args.out_dir) config.out_dir = *args.out_dir;
    report_warnings(validate(config), log);
    require(!args.stop_after || *args.stop_after >= 0, ErrorKind::BadConfig, "--stop-after must be >= 0");

    const data::GroundTruthTask task = build_task(config.task);
    const int dim = task.source.dim();
    // A resumed run continues next to its checkpoint unless told otherwise.
    fs::path out = config.out_dir;
    if (resume && !args.out_dir) {
      out = fs::path(*args.resume).parent_path();
      if (out.empty()) out = ".";
    }
    ensure_dir(out);
    {
      auto cfg = open_out(out / "config.ini");
      cfg << serialize(config);
      finish(cfg, out / "config.ini");
    }

    const fs::path metrics_path = out / "metrics.csv";
    std::ofstream metrics;
    if (resume && fs::exists(metrics_path)) {
      truncate_metrics(metrics_path, resume->state.step);
      metrics = open_out(metrics_path, std::ios::app);
    } else {
      metrics = open_out(metrics_path);
      write_metrics_header(metrics);
    }

    ot::TrainOptions options;
    if (resume) options.resume = resume->state;
    options.stop_after = args.stop_after;
    options.on_step = [&](const ot::StepRecord& r) { write_metrics_row(metrics, r); };
    const auto started = std::chrono::steady_clock::now();
    ot::TrainResult result = ot::train(config.enot, source_of(task.source), source_of(task.target), dim, options);
    finish(metrics, metrics_path);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const ot::TrainState& st = result.state;
    log << "trained to step " << st.step << "/" << config.enot.train_steps << " (" << ot::to_string(st.status)
        << ") in " << seconds << " s\n";

    const Checkpoint ckpt{config, dim, st};
    const bool finished = st.step == config.enot.train_steps || st.status == ot::TrainStatus::diverged;
    if (!finished) {
      const fs::path p = out / ("step_" + std::to_string(st.step) + ".ckpt");
      save_checkpoint(p.string(), ckpt);
      log << "checkpoint " << p.string() << '\n';
      return static_cast<int>(kExitOk);
    }
    save_checkpoint((out / "final.ckpt").string(), ckpt);
    const EvalRow row = evaluate(config, st, task);
    auto eval = open_out(out / "eval.csv");
    write_eval_header(eval);
    write_eval_row(eval, row);
    finish(eval, out / "eval.csv");
    if (st.status == ot::TrainStatus::diverged) {
      log << "training diverged at step " << st.step << '\n';
      return static_cast<int>(kExitDiverged);
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_eval(const EvalArgs& args, std::ostream& log) {
  return guarded(log, [&] {
    for (const auto& o : args.overrides)
      require(o.rfind("task.", 0) == 0 || o.rfind("eval.", 0) == 0, ErrorKind::BadConfig,
              "eval only accepts task.* and eval.* overrides, got '" + o + "'");
    const Checkpoint ckpt = load_checkpoint(args.checkpoint);
    RunConfig config = parse_config(serialize(ckpt.config), args.overrides);
    report_warnings(validate(config), log);
    const data::GroundTruthTask task = build_task(config.task);
    require(task.source.dim() == ckpt.dim, ErrorKind::IncompatibleTask,
            "task dimension " + std::to_string(task.source.dim()) + " differs from the checkpoint's " +
                std::to_string(ckpt.dim));

    const EvalRow row = evaluate(config, ckpt.state, task);
    fs::path out = args.out_dir ? fs::path(*args.out_dir) : fs::path(args.checkpoint).parent_path();
    if (out.empty()) out = ".";
    ensure_dir(out);
    auto f = open_out(out / "eval.csv");
    write_eval_header(f);
    write_eval_row(f, row);
    finish(f, out / "eval.csv");
    write_eval_row(log, row);
    return static_cast<int>(kExitOk);
  });
}

std::vector<double> default_tau_grid() { return {0.5, 0.7, 0.9, 0.95, 0.99}; }
std::vector<double> default_lambda_grid() { return {0.0, 0.25, 0.5, 0.75, 1.0}; }

std::vector<SweepCell> run_sweep(const RunConfig& base, const std::vector<double>& taus,
                                 const std::vector<double>& lambdas, const std::vector<std::uint64_t>& seeds,
                                 int workers) {
  std::vector<SweepCell> cells;
  for (double tau : taus)
    for (double lambda : lambdas)
      for (std::uint64_t seed : seeds) cells.push_back({tau, lambda, seed, "", 0, {}, {}, {}, 0.0});

  const data::GroundTruthTask task = build_task(base.task);
  auto run_cell = [&](SweepCell& cell) {
    const auto started = std::chrono::steady_clock::now();
    try {
      RunConfig c = base;
      c.enot.tau = cell.tau;
      c.enot.lambda = cell.lambda;
      c.enot.seed = cell.seed;
      validate(c);
      const auto result = ot::train(c.enot, source_of(task.source), source_of(task.target), task.source.dim());
      cell.steps = result.state.step;
      cell.status = std::string(ot::to_string(result.state.status));
      if (result.state.status != ot::TrainStatus::diverged) {
        const EvalRow row = evaluate(c, result.state, task);
        cell.l2_uvp = row.report.l2_uvp;
        cell.sinkhorn_forward = row.report.sinkhorn_forward;
        cell.dist_estimate = row.report.dist_estimate;
        if (!std::isfinite(row.report.sinkhorn_forward) || !std::isfinite(row.report.dist_estimate) ||
            (row.report.l2_uvp && !std::isfinite(*row.report.l2_uvp))) {
          cell.status = std::string(ot::to_string(ot::TrainStatus::diverged));
          cell.l2_uvp.reset();
          cell.sinkhorn_forward.reset();
          cell.dist_estimate.reset();
        }
      }
    } catch (const std::exception&) {
      cell.status = "error";
    }
    cell.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) run_cell(cells[i]);
  };
  const auto n_threads = static_cast<std::size_t>(std::clamp<int>(workers, 1, static_cast<int>(cells.size())));
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return cells;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepCell>& cells) {
  out << "tau,lambda,seed,status,steps,l2_uvp,sinkhorn_forward,dist_estimate,runtime_s\n";
  for (const auto& c : cells)
    out << csv_number(c.tau) << ',' << csv_number(c.lambda) << ',' << c.seed << ',' << c.status << ',' << c.steps
        << ',' << csv_number(c.l2_uvp) << ',' << csv_number(c.sinkhorn_forward) << ','
        << csv_number(c.dist_estimate) << ',' << csv_number(c.runtime_s) << '\n';
}

int cmd_sweep(const SweepArgs& args, std::ostream& log) {
  return guarded(log, [&] {
    RunConfig config = config_from(args.config_path, args.overrides, args.seed);
    report_warnings(validate(config), log);
    const auto taus = args.tau_grid.empty() ? default_tau_grid() : args.tau_grid;
    const auto lambdas = args.lambda_grid.empty() ? default_lambda_grid() : args.lambda_grid;
    for (double t : taus)
      require(std::isfinite(t) && t >= 0.5 && t < 1.0, ErrorKind::BadConfig, "tau grid values must lie in [0.5, 1)");
    for (double l : lambdas)
      require(std::isfinite(l) && l >= 0.0, ErrorKind::BadConfig, "lambda grid values must be >= 0");
    require(args.workers >= 1, ErrorKind::BadConfig, "--workers must be >= 1");
    const std::vector<std::uint64_t> seeds = args.seeds.empty() ? std::vector{config.enot.seed} : args.seeds;

    const fs::path out = args.out_dir ? fs::path(*args.out_dir) : fs::path(config.out_dir);
    ensure_dir(out);
    const auto cells = run_sweep(config, taus, lambdas, seeds, args.workers);
    auto f = open_out(out / "sweep.csv");
    write_sweep_csv(f, cells);
    finish(f, out / "sweep.csv");
    const auto bad = std::count_if(cells.begin(), cells.end(), [](const SweepCell& c) { return c.status != "converged"; });
    log << cells.size() << " cells, " << bad << " not converged\n";
    return static_cast<int>(kExitOk);
  });
}

int cmd_export_plots(const ExportArgs& args, std::ostream& log) {
  return guarded(log, [&] {
    require(args.grid_x >= 1 && args.grid_y >= 1 && args.arrows >= 1, ErrorKind::BadConfig,
            "grid sizes and arrow count must be positive");
    const Checkpoint ckpt = load_checkpoint(args.checkpoint);
    require(ckpt.dim == 2, ErrorKind::NotTwoDimensional,
            "plot export needs a 2D task, the checkpoint has dimension " + std::to_string(ckpt.dim));
    const RunConfig& config = ckpt.config;
    const data::GroundTruthTask task = build_task(config.task);
    const ot::TrainState& st = ckpt.state;
    fs::path out = args.out_dir ? fs::path(*args.out_dir) : fs::path(args.checkpoint).parent_path();
    if (out.empty()) out = ".";
    ensure_dir(out);

    const Matrix x = task.source.sample(args.arrows, data::derive_seed(config.enot.seed, kArrowStream));
    const Matrix tx = ot::transport_map(st, x, config.enot);
    {
      auto f = open_out(out / "arrows.csv");
      f << "x0,x1,t0,t1\n";
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        f << csv_number(x(i, 0)) << ',' << csv_number(x(i, 1)) << ',' << csv_number(tx(i, 0)) << ','
          << csv_number(tx(i, 1)) << '\n';
      finish(f, out / "arrows.csv");
    }

    // Grid over both samples' bounding box with 10% padding.
    const auto bstream = data::derive_seed(config.enot.seed, kBoundsStream);
    Matrix both(4000, 2);
    both << task.source.sample(2000, bstream), task.target.sample(2000, bstream);
    const Eigen::RowVector2d lo = both.colwise().minCoeff();
    const Eigen::RowVector2d hi = both.colwise().maxCoeff();
    const Eigen::RowVector2d pad = 0.1 * (hi - lo);
    Matrix grid(static_cast<Eigen::Index>(args.grid_x) * args.grid_y, 2);
    for (int i = 0; i < args.grid_x; ++i)
      for (int j = 0; j < args.grid_y; ++j) {
        const double u = args.grid_x == 1 ? 0.5 : static_cast<double>(i) / (args.grid_x - 1);
        const double v = args.grid_y == 1 ? 0.5 : static_cast<double>(j) / (args.grid_y - 1);
        const Eigen::Index r = static_cast<Eigen::Index>(i) * args.grid_y + j;
        grid(r, 0) = lo(0) - pad(0) + u * (hi(0) - lo(0) + 2 * pad(0));
        grid(r, 1) = lo(1) - pad(1) + v * (hi(1) - lo(1) + 2 * pad(1));
      }
    const Matrix g = nn::evaluate(st.g, grid);
    const bool f_is_potential = config.enot.uses_potential_maps();
    const Matrix fv = f_is_potential ? nn::evaluate(st.f, grid) : Matrix();
    {
      auto f = open_out(out / "contours.csv");
      f << "x0,x1,g,f\n";
      for (Eigen::Index r = 0; r < grid.rows(); ++r)
        f << csv_number(grid(r, 0)) << ',' << csv_number(grid(r, 1)) << ',' << csv_number(g(r, 0)) << ','
          << (f_is_potential ? csv_number(fv(r, 0)) : std::string()) << '\n';
      finish(f, out / "contours.csv");
    }
    log << "wrote " << x.rows() << " arrows and " << grid.rows() << " contour points to " << out.string() << '\n';
    return static_cast<int>(kExitOk);
  });
}

}  // namespace enot::cli
