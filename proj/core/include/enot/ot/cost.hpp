#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "enot/autodiff/tape.hpp"
#include "enot/common.hpp"

namespace enot::ot {

enum class CostKind : std::uint8_t {
  half_sq_euclidean,  // 0.5 |x - y|^2
  sq_euclidean,       // |x - y|^2
  euclidean,          // |x - y|
  sphere_geodesic,    // arccos(x . y) on the unit sphere
};

/// Tolerance on |x| = 1 for points passed to the geodesic cost.
inline constexpr double kSphereTolerance = 1e-9;

struct CostFunction {
  CostKind kind = CostKind::half_sq_euclidean;

  /// True when c(x, y) = h(x - y).
  bool is_h_of_difference() const;
  /// For quadratic h the gradient of the convex conjugate is linear,
  /// grad h*(w) = s w; returns s when known.
  std::optional<double> conjugate_gradient_scale() const;
  bool has_conjugate_gradient() const { return conjugate_gradient_scale().has_value(); }

  bool operator==(const CostFunction&) const = default;
};

std::string_view to_string(CostKind kind);
std::optional<CostKind> parse_cost(std::string_view name);

double cost(const CostFunction& c, std::span<const double> x, std::span<const double> y);
/// c(x_i, y_i) for aligned rows; returns n x 1.
Matrix paired_cost(const CostFunction& c, const Matrix& x, const Matrix& y);
/// C_ij = c(x_i, y_j).
Matrix cost_matrix(const CostFunction& c, const Matrix& x, const Matrix& y);
/// Tape version of paired_cost; returns an n x 1 node.
ad::Var paired_cost(const CostFunction& c, ad::Var x, ad::Var y, ad::Tape& tape);

/// grad h*(w) applied row-wise; throws MissingConjugateGradient when unknown.
Matrix conjugate_gradient(const CostFunction& c, const Matrix& w);

void require_on_sphere(const Matrix& points);

}  // namespace enot::ot
