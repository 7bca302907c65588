#pragma once

#include <functional>

#include "enot/common.hpp"
#include "enot/nn/mlp.hpp"
#include "enot/ot/cost.hpp"

namespace enot::ot {

/// A scalar potential evaluated on a batch: n x d points -> n values.
using Potential = std::function<Vector(const Matrix&)>;

Potential as_potential(const nn::PotentialNetwork& net);
Potential constant_potential(double k);

/// -mean g(y) + mean g(T(x)).
double loss_g(const Potential& g, const Matrix& t_outputs, const Matrix& y);
/// mean [c(x, T(x)) - g(T(x))].
double loss_f(const Potential& g, const Matrix& x, const Matrix& t_outputs, const CostFunction& c);
/// mean L_tau(c(x, T(x)) - g(T(x)) - c(x, y) + g(y)) with x_i paired to y_i.
double reg_g(const Potential& g, const Matrix& x, const Matrix& y, const Matrix& t_outputs, const CostFunction& c,
             double tau);
/// Mirror of reg_g for the inverse direction. Only defined in bidirectional
/// mode; pass the run's flag so misuse is reported as NotBidirectional.
double reg_f(const Potential& f, const Matrix& x, const Matrix& y, const Matrix& tinv_outputs, const CostFunction& c,
             double tau, bool bidirectional);
/// mean [g(y) + c(x, T(x)) - g(T(x))].
double distance_estimate(const Potential& g, const Matrix& x, const Matrix& y, const Matrix& t_outputs,
                         const CostFunction& c);

/// min over samples x of c(x, y) - g(x).
double c_transform_bruteforce(const Potential& g, const Vector& y, const Matrix& x_samples, const CostFunction& c);

}  // namespace enot::ot
