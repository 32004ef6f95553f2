#pragma once

// Binary training checkpoint: network parameters plus optimizer state.
//
// Layout (little-endian, no padding):
//   char[8]  magic "FPINNCK1"
//   u32      format version (1)
//   u64      layer count L+1, then L+1 x u64 layer sizes
//   u64      network seed
//   u64      parameter count P, then P x f64 values
//   f64 x 4  learning rate, beta_a, beta_b, epsilon
//   u64      Adam step count
//   u64      moment length M (0 or P), then M x f64 first, M x f64 second
//   f64      bit rate the network was trained for (0 when unknown)

#include <filesystem>

#include "fiberpinn/adam.hpp"
#include "fiberpinn/network.hpp"

namespace fiberpinn {

struct Checkpoint {
  NetworkParams params;
  AdamState adam;
  double bit_rate = 0.0;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);

/// Throws kIo on unreadable, truncated or foreign files.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace fiberpinn
