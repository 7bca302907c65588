#include "enot/common.hpp"

namespace enot {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnboundLeaf: return "UnboundLeaf";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::NonScalarOutput: return "NonScalarOutput";
    case ErrorKind::NonSmoothActivation: return "NonSmoothActivation";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorKind::OutOfRangeStep: return "OutOfRangeStep";
    case ErrorKind::EmptyBatch: return "EmptyBatch";
    case ErrorKind::EmptySamples: return "EmptySamples";
    case ErrorKind::NotOnSphere: return "NotOnSphere";
    case ErrorKind::MissingConjugateGradient: return "MissingConjugateGradient";
    case ErrorKind::NotBidirectional: return "NotBidirectional";
    case ErrorKind::NotSPD: return "NotSPD";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::BadParams: return "BadParams";
    case ErrorKind::NoGroundTruth: return "NoGroundTruth";
    case ErrorKind::NotTwoDimensional: return "NotTwoDimensional";
    case ErrorKind::IncompatibleTask: return "IncompatibleTask";
    case ErrorKind::BadConfig: return "BadConfig";
    case ErrorKind::Io: return "Io";
    case ErrorKind::CorruptCheckpoint: return "CorruptCheckpoint";
  }
  return "Unknown";
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace enot
