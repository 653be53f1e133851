#pragma once

#include <filesystem>
#include <string>

#include "sparsenet/network.hpp"

namespace sparsenet {

struct Checkpoint {
  Mlp model;
  std::string method;
  int epoch = 0;
};

// Binary layout (all little-endian):
//   magic "SPNETCK1", u32 version, u32 method length, method bytes,
//   i32 epoch, 4 x u64 dims, then per layer:
//   u8 kind (0 sparse, 1 dense), u64 n_in, u64 n_out, u64 count,
//   sparse: count x (u32 row, u32 col, f64 weight)
//   dense:  n_in * n_out x f64 (row-major),
//   n_out x f64 bias.
// Momentum buffers are not stored.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

// Same content as text; reals are written as hexadecimal floats so the
// round trip is exact.
void save_checkpoint_text(const Checkpoint& ckpt, const std::filesystem::path& path);

// Reads either format (detected from the first bytes). Throws DataError on
// malformed input.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sparsenet
