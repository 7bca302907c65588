#pragma once

#include <optional>
#include <ostream>
#include <string>

#include "enot/metrics/metrics.hpp"
#include "enot/ot/trainer.hpp"

namespace enot::cli {

/// Shortest round-trip decimal, or an empty field for missing and non-finite values.
std::string csv_number(std::optional<double> v);

// metrics.csv: step,lr,loss_f,loss_g,reg_g,reg_f,dist_estimate,status
void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const ot::StepRecord& r);

struct EvalRow {
  std::int64_t step = 0;
  ot::TrainStatus status = ot::TrainStatus::running;
  ot::CostKind cost = ot::CostKind::half_sq_euclidean;
  metrics::EvalReport report;
  double sinkhorn_epsilon = 0.0;
};

// eval.csv: step,status,cost,n_eval,l2_uvp,sinkhorn_forward,sinkhorn_forward_raw,
//           sinkhorn_backward,sinkhorn_epsilon,dist_estimate
void write_eval_header(std::ostream& out);
void write_eval_row(std::ostream& out, const EvalRow& r);

}  // namespace enot::cli
