#include "enot/cli/csv.hpp"

#include <cmath>
#include <charconv>

namespace enot::cli {

std::string csv_number(std::optional<double> v) {
  if (!v || !std::isfinite(*v)) return {};
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, *v);
  return std::string(buf, r.ptr);
}

void write_metrics_header(std::ostream& out) { out << "step,lr,loss_f,loss_g,reg_g,reg_f,dist_estimate,status\n"; }

void write_metrics_row(std::ostream& out, const ot::StepRecord& r) {
  out << r.step << ',' << csv_number(r.lr) << ',' << csv_number(r.loss_f) << ',' << csv_number(r.loss_g) << ','
      << csv_number(r.reg_g) << ',' << csv_number(r.reg_f) << ',' << csv_number(r.dist_estimate) << ','
      << ot::to_string(r.status) << '\n';
}

void write_eval_header(std::ostream& out) {
  out << "step,status,cost,n_eval,l2_uvp,sinkhorn_forward,sinkhorn_forward_raw,sinkhorn_backward,sinkhorn_epsilon,"
         "dist_estimate\n";
}

void write_eval_row(std::ostream& out, const EvalRow& r) {
  const auto& e = r.report;
  out << r.step << ',' << ot::to_string(r.status) << ',' << ot::to_string(r.cost) << ',' << e.n_eval << ','
      << csv_number(e.l2_uvp) << ',' << csv_number(e.sinkhorn_forward) << ',' << csv_number(e.sinkhorn_forward_raw)
      << ',' << csv_number(e.sinkhorn_backward) << ',' << csv_number(r.sinkhorn_epsilon) << ','
      << csv_number(e.dist_estimate) << '\n';
}

}  // namespace enot::cli
