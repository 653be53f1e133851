#pragma once

#include <array>
#include <cstddef>

#include "sparsenet/layers.hpp"
#include "sparsenet/network.hpp"
#include "sparsenet/random.hpp"

namespace sparsenet {

struct EvolutionConfig {
  // Fraction of each sparse layer's connections replaced per rewiring step.
  double zeta = 0.3;

  void validate() const;
};

struct EvolutionStats {
  std::array<std::size_t, Mlp::kLayers> removed{};
  std::array<std::size_t, Mlp::kLayers> regrown{};

  std::size_t total_removed() const;
  std::size_t total_regrown() const;
};

// Removes floor(zeta * nnz) connections with the smallest |w|, ties broken by
// (row, col). Returns the number removed.
std::size_t prune_weights(SparseLayer& layer, double zeta);

// Adds `count` connections at empty cells chosen uniformly without
// replacement, weights as in er_init, zero momentum. Throws RewiringError
// when fewer than `count` cells are empty.
void regrow_weights(SparseLayer& layer, std::size_t count, const InitConfig& cfg, Rng& rng);

// One rewiring step on every sparse layer: prune, then regrow the same count
// (clamped to the number of empty cells). Each layer draws from its own
// substream rng.derive(layer index).
EvolutionStats evolve(Mlp& model, const EvolutionConfig& cfg, const InitConfig& init, Rng& rng);

}  // namespace sparsenet
