#pragma once

#include <span>

namespace enot::ot {

/// Asymmetric squared loss |tau - 1[u <= 0]| u^2.
double expectile_loss(double u, double tau);

/// The tau-expectile of a sample set: the unique e with
/// tau * sum_{s > e} (s - e) = (1 - tau) * sum_{s <= e} (e - s),
/// located by bisection to an absolute bracket width of 1e-10.
double scalar_expectile(std::span<const double> samples, double tau);

}  // namespace enot::ot
