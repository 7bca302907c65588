#include "enot/autodiff/activation.hpp"

#include <cmath>

namespace enot::ad {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::elu: return "elu";
    case Activation::smooth_elu: return "smooth_elu";
    case Activation::leaky_relu: return "leaky_relu";
  }
  return "?";
}

std::optional<Activation> parse_activation(std::string_view name) {
  if (name == "elu") return Activation::elu;
  if (name == "smooth_elu") return Activation::smooth_elu;
  if (name == "leaky_relu") return Activation::leaky_relu;
  return std::nullopt;
}

int smoothness_order(Activation a) {
  switch (a) {
    case Activation::elu: return 1;
    case Activation::smooth_elu: return 2;
    case Activation::leaky_relu: return 0;
  }
  return 0;
}

double activate(Activation a, double z) {
  switch (a) {
    case Activation::elu: return z > 0 ? z : std::expm1(z);
    case Activation::smooth_elu: return z > 0 ? z + z * z / (2.0 * (1.0 + z)) : std::expm1(z);
    case Activation::leaky_relu: return z > 0 ? z : kLeakySlope * z;
  }
  return 0;
}

double activate_d1(Activation a, double z) {
  switch (a) {
    case Activation::elu: return z > 0 ? 1.0 : std::exp(z);
    case Activation::smooth_elu: return z > 0 ? 1.5 - 0.5 / ((1.0 + z) * (1.0 + z)) : std::exp(z);
    case Activation::leaky_relu: return z > 0 ? 1.0 : kLeakySlope;
  }
  return 0;
}

double activate_d2(Activation a, double z) {
  switch (a) {
    case Activation::elu: return z > 0 ? 0.0 : std::exp(z);
    case Activation::smooth_elu: {
      const double w = 1.0 + z;
      return z > 0 ? 1.0 / (w * w * w) : std::exp(z);
    }
    case Activation::leaky_relu: return 0.0;
  }
  return 0;
}

// The array versions are written without select() so that Eigen vectorizes
// them: exp(min(z, 0)) - 1 vanishes for z > 0, max(z, 0) vanishes for z <= 0,
// and ceil(min(max(z, 0), 1)) is the step function.
void activate(Activation a, const Matrix& z, Matrix& out) {
  out.resize(z.rows(), z.cols());
  const auto zz = z.array();
  switch (a) {
    case Activation::elu:
      out.array() = zz.max(0.0) + (zz.min(0.0).exp() - 1.0);
      break;
    case Activation::smooth_elu: {
      const auto zp = zz.max(0.0);
      out.array() = zp + zp.square() / (2.0 * (1.0 + zp)) + (zz.min(0.0).exp() - 1.0);
      break;
    }
    case Activation::leaky_relu:
      out.array() = zz.max(0.0) + kLeakySlope * zz.min(0.0);
      break;
  }
}

void activate_d1(Activation a, const Matrix& z, Matrix& out) {
  out.resize(z.rows(), z.cols());
  const auto zz = z.array();
  switch (a) {
    case Activation::elu:
      out.array() = zz.min(0.0).exp();
      break;
    case Activation::smooth_elu: {
      const auto w = 1.0 + zz.max(0.0);
      out.array() = zz.min(0.0).exp() + (0.5 - 0.5 / w.square());
      break;
    }
    case Activation::leaky_relu:
      out.array() = kLeakySlope + (1.0 - kLeakySlope) * zz.max(0.0).min(1.0).ceil();
      break;
  }
}

void activate_d2(Activation a, const Matrix& z, Matrix& out) {
  out.resize(z.rows(), z.cols());
  const auto zz = z.array();
  switch (a) {
    case Activation::elu:
      out.array() = zz.min(0.0).exp() - zz.max(0.0).min(1.0).ceil();
      break;
    case Activation::smooth_elu: {
      const auto w = 1.0 + zz.max(0.0);
      out.array() = (zz.min(0.0).exp() - 1.0) + 1.0 / (w * w * w);
      break;
    }
    case Activation::leaky_relu:
      out.setZero();
      break;
  }
}

}  // namespace enot::ad
