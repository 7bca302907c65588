#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace enot {

// Points are stored one per row: an n x d batch is an n x d matrix.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class ErrorKind : std::uint8_t {
  UnboundLeaf,
  NonFiniteValue,
  NonScalarOutput,
  NonSmoothActivation,
  DimMismatch,
  ShapeMismatch,
  NonFiniteGradient,
  OutOfRangeStep,
  EmptyBatch,
  EmptySamples,
  NotOnSphere,
  MissingConjugateGradient,
  NotBidirectional,
  NotSPD,
  TooLarge,
  BadParams,
  NoGroundTruth,
  NotTwoDimensional,
  IncompatibleTask,
  BadConfig,
  Io,
  CorruptCheckpoint,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) throw Error(kind, message);
}

bool all_finite(const Matrix& m);

}  // namespace enot
