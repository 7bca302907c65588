#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "enot/common.hpp"

namespace enot::ad {

enum class Activation : std::uint8_t {
  elu,
  smooth_elu,  // ELU for z <= 0, z + z^2 / (2 (1 + z)) for z > 0; C^2 at the origin
  leaky_relu,
};

inline constexpr double kLeakySlope = 0.01;

std::string_view to_string(Activation a);
std::optional<Activation> parse_activation(std::string_view name);

/// Highest order of continuous derivative everywhere (leaky 0, ELU 1, smooth ELU 2).
int smoothness_order(Activation a);

double activate(Activation a, double z);
double activate_d1(Activation a, double z);
double activate_d2(Activation a, double z);

// Elementwise array versions; `out` is resized to match `z`.
void activate(Activation a, const Matrix& z, Matrix& out);
void activate_d1(Activation a, const Matrix& z, Matrix& out);
void activate_d2(Activation a, const Matrix& z, Matrix& out);

}  // namespace enot::ad
