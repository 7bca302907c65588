#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "enot/cli/config.hpp"
#include "enot/ot/trainer.hpp"

namespace enot::cli {

/// Everything needed to continue a run. Batches are drawn from counter-based
/// streams keyed by (seed, step), so the step doubles as the PRNG position.
struct Checkpoint {
  RunConfig config;
  int dim = 0;
  ot::TrainState state;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Container layout, all integers and reals little-endian:
///   "ENOTCKPT" | u32 version | u64 n + n bytes of INI config | u32 dim |
///   i64 step | u8 status | per optimizer (f, g): i64 step, f64 beta1,
///   beta2, eps | six f64 blocks (u64 n + n values): f params, g params,
///   f Adam m, f Adam v, g Adam m, g Adam v | u64 FNV-1a of all prior bytes.
std::vector<unsigned char> encode_checkpoint(const Checkpoint& ckpt);
/// Throws CorruptCheckpoint on any malformed, truncated or mismatched input.
Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes);

/// Throws Io when the file cannot be written.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
/// Throws Io when the file cannot be read, CorruptCheckpoint otherwise.
Checkpoint load_checkpoint(const std::string& path);

std::uint64_t fnv1a(const unsigned char* data, std::size_t n);

}  // namespace enot::cli
