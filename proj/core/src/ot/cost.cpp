#include "enot/ot/cost.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace enot::ot {

bool CostFunction::is_h_of_difference() const { return kind != CostKind::sphere_geodesic; }

std::optional<double> CostFunction::conjugate_gradient_scale() const {
  switch (kind) {
    case CostKind::half_sq_euclidean: return 1.0;  // h = |z|^2 / 2 is self-conjugate
    case CostKind::sq_euclidean: return 0.5;       // h* (w) = |w|^2 / 4
    case CostKind::euclidean:                      // h not strictly convex
    case CostKind::sphere_geodesic: return std::nullopt;
  }
  return std::nullopt;
}

std::string_view to_string(CostKind kind) {
  switch (kind) {
    case CostKind::half_sq_euclidean: return "half_sq_euclidean";
    case CostKind::sq_euclidean: return "sq_euclidean";
    case CostKind::euclidean: return "euclidean";
    case CostKind::sphere_geodesic: return "sphere_geodesic";
  }
  return "?";
}

std::optional<CostKind> parse_cost(std::string_view name) {
  for (auto k : {CostKind::half_sq_euclidean, CostKind::sq_euclidean, CostKind::euclidean,
                 CostKind::sphere_geodesic})
    if (name == to_string(k)) return k;
  return std::nullopt;
}

namespace {

double clamped_acos(double u) { return std::acos(std::clamp(u, -1.0 + ad::kAcosClamp, 1.0 - ad::kAcosClamp)); }

}  // namespace

void require_on_sphere(const Matrix& points) {
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    require(std::abs(points.row(i).norm() - 1.0) <= kSphereTolerance, ErrorKind::NotOnSphere,
            "row " + std::to_string(i) + " is not unit norm");
}

double cost(const CostFunction& c, std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), ErrorKind::DimMismatch, "points differ in dimension");
  const Eigen::Map<const Vector> a(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::Map<const Vector> b(y.data(), static_cast<Eigen::Index>(y.size()));
  switch (c.kind) {
    case CostKind::half_sq_euclidean: return 0.5 * (a - b).squaredNorm();
    case CostKind::sq_euclidean: return (a - b).squaredNorm();
    case CostKind::euclidean: return (a - b).norm();
    case CostKind::sphere_geodesic:
      require(std::abs(a.norm() - 1.0) <= kSphereTolerance && std::abs(b.norm() - 1.0) <= kSphereTolerance,
              ErrorKind::NotOnSphere, "geodesic cost needs unit-norm points");
      if ((a - b).squaredNorm() == 0.0) return 0.0;
      return clamped_acos(a.dot(b));
  }
  return 0.0;
}

Matrix paired_cost(const CostFunction& c, const Matrix& x, const Matrix& y) {
  require(x.rows() == y.rows() && x.cols() == y.cols(), ErrorKind::DimMismatch, "paired batches differ in shape");
  switch (c.kind) {
    case CostKind::half_sq_euclidean: return 0.5 * (x - y).rowwise().squaredNorm();
    case CostKind::sq_euclidean: return (x - y).rowwise().squaredNorm();
    case CostKind::euclidean: return (x - y).rowwise().norm();
    case CostKind::sphere_geodesic: {
      require_on_sphere(x);
      require_on_sphere(y);
      Matrix out(x.rows(), 1);
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        out(i, 0) = (x.row(i) - y.row(i)).squaredNorm() == 0.0 ? 0.0 : clamped_acos(x.row(i).dot(y.row(i)));
      return out;
    }
  }
  return {};
}

Matrix cost_matrix(const CostFunction& c, const Matrix& x, const Matrix& y) {
  require(x.cols() == y.cols(), ErrorKind::DimMismatch, "point sets differ in dimension");
  Matrix sq(x.rows(), y.rows());
  for (Eigen::Index j = 0; j < y.rows(); ++j) sq.col(j) = (x.rowwise() - y.row(j)).rowwise().squaredNorm();
  switch (c.kind) {
    case CostKind::half_sq_euclidean: return 0.5 * sq;
    case CostKind::sq_euclidean: return sq;
    case CostKind::euclidean: return sq.cwiseSqrt();
    case CostKind::sphere_geodesic: {
      require_on_sphere(x);
      require_on_sphere(y);
      Matrix cross;
      cross.noalias() = x * y.transpose();
      Matrix out = cross.array().max(-1.0 + ad::kAcosClamp).min(1.0 - ad::kAcosClamp).acos();
      out = (sq.array() == 0.0).select(0.0, out);
      return out;
    }
  }
  return {};
}

ad::Var paired_cost(const CostFunction& c, ad::Var x, ad::Var y, ad::Tape& tape) {
  switch (c.kind) {
    case CostKind::half_sq_euclidean: return tape.scale(tape.row_sum(tape.square(tape.sub(x, y))), 0.5);
    case CostKind::sq_euclidean: return tape.row_sum(tape.square(tape.sub(x, y)));
    case CostKind::euclidean: return tape.sqrt(tape.row_sum(tape.square(tape.sub(x, y))));
    case CostKind::sphere_geodesic: return tape.acos_clamped(tape.row_sum(tape.mul(x, y)));
  }
  return {};
}

Matrix conjugate_gradient(const CostFunction& c, const Matrix& w) {
  const auto scale = c.conjugate_gradient_scale();
  require(scale.has_value(), ErrorKind::MissingConjugateGradient,
          std::string(to_string(c.kind)) + " has no closed-form conjugate gradient");
  return *scale * w;
}

}  // namespace enot::ot
