#include "enot/ot/losses.hpp"

#include "enot/ot/expectile.hpp"

namespace enot::ot {

namespace {

void require_batch(const Matrix& a, const Matrix& b) {
  require(a.rows() > 0 && b.rows() > 0, ErrorKind::EmptyBatch, "empty batch");
  require(a.rows() == b.rows(), ErrorKind::ShapeMismatch, "batches differ in length");
  require(a.cols() == b.cols(), ErrorKind::DimMismatch, "batches differ in dimension");
}

double mean_expectile(const Vector& u, double tau) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) s += expectile_loss(u(i), tau);
  return s / static_cast<double>(u.size());
}

Vector regularizer_argument(const Potential& g, const Matrix& x, const Matrix& y, const Matrix& t,
                            const CostFunction& c) {
  require_batch(x, y);
  require_batch(x, t);
  return paired_cost(c, x, t).col(0) - g(t) - paired_cost(c, x, y).col(0) + g(y);
}

}  // namespace

Potential as_potential(const nn::PotentialNetwork& net) {
  return [&net](const Matrix& x) -> Vector { return nn::evaluate(net, x).col(0); };
}

Potential constant_potential(double k) {
  return [k](const Matrix& x) -> Vector { return Vector::Constant(x.rows(), k); };
}

double loss_g(const Potential& g, const Matrix& t_outputs, const Matrix& y) {
  require_batch(t_outputs, y);
  return -g(y).mean() + g(t_outputs).mean();
}

double loss_f(const Potential& g, const Matrix& x, const Matrix& t_outputs, const CostFunction& c) {
  require_batch(x, t_outputs);
  return (paired_cost(c, x, t_outputs).col(0) - g(t_outputs)).mean();
}

double reg_g(const Potential& g, const Matrix& x, const Matrix& y, const Matrix& t_outputs, const CostFunction& c,
             double tau) {
  return mean_expectile(regularizer_argument(g, x, y, t_outputs, c), tau);
}

double reg_f(const Potential& f, const Matrix& x, const Matrix& y, const Matrix& tinv_outputs, const CostFunction& c,
             double tau, bool bidirectional) {
  require(bidirectional, ErrorKind::NotBidirectional, "reg_f is only defined for bidirectional training");
  require_batch(x, y);
  require_batch(y, tinv_outputs);
  const Vector u = paired_cost(c, tinv_outputs, y).col(0) - f(tinv_outputs) - paired_cost(c, x, y).col(0) + f(x);
  return mean_expectile(u, tau);
}

double distance_estimate(const Potential& g, const Matrix& x, const Matrix& y, const Matrix& t_outputs,
                         const CostFunction& c) {
  require_batch(x, y);
  require_batch(x, t_outputs);
  return g(y).mean() + (paired_cost(c, x, t_outputs).col(0) - g(t_outputs)).mean();
}

double c_transform_bruteforce(const Potential& g, const Vector& y, const Matrix& x_samples, const CostFunction& c) {
  require(x_samples.rows() > 0, ErrorKind::EmptyBatch, "no samples for the c-transform");
  require(x_samples.cols() == y.size(), ErrorKind::DimMismatch, "samples and query differ in dimension");
  const Matrix ys = y.transpose().replicate(x_samples.rows(), 1);
  return (paired_cost(c, x_samples, ys).col(0) - g(x_samples)).minCoeff();
}

}  // namespace enot::ot
