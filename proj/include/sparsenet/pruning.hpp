#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sparsenet/network.hpp"

namespace sparsenet {

enum class HiddenLayer { kFirst = 0, kSecond = 1 };

enum class DegreeMode {
  kInOut,    // incoming plus outgoing connections
  kOutOnly,  // outgoing connections only
};

/// When and how much neuron pruning happens.
struct PruneSchedule {
  double alpha = 0.04;  // fraction of a hidden layer removed per pruning epoch
  int beta = 10;        // first pruning epoch (0-indexed)
  int gamma = 40;       // pruning continues through epoch beta + gamma
  bool prune_first = true;
  bool prune_second = true;
  DegreeMode degree_mode = DegreeMode::kInOut;

  void validate() const;
  bool targets(HiddenLayer layer) const { return layer == HiddenLayer::kFirst ? prune_first : prune_second; }
};

struct LayerPrune {
  HiddenLayer layer = HiddenLayer::kFirst;
  std::vector<std::size_t> removed;  // indices before pruning, ascending
  std::size_t new_size = 0;
};

struct PruneReport {
  int epoch = 0;
  std::vector<LayerPrune> layers;
  std::size_t removed_connections = 0;
  Dims new_dims;

  std::size_t removed_neurons() const;
};

// True for beta <= epoch <= beta + gamma.
bool should_prune(int epoch, const PruneSchedule& sched);

// Connection count per neuron of a hidden layer, summed over its two
// adjacent layers (or outgoing only). Dense layers count every cell.
std::vector<std::size_t> neuron_degree(const Mlp& model, HiddenLayer layer, DegreeMode mode = DegreeMode::kInOut);

// Indices of the `count` smallest degrees, ties to the lowest index,
// returned in ascending index order.
std::vector<std::size_t> least_connected(std::span<const std::size_t> degrees, std::size_t count);

// Deletes the given hidden neurons and every incident connection, renumbering
// the survivors. Returns the number of connections removed. Throws
// ScheduleError if the layer would become empty.
std::size_t remove_hidden_neurons(Mlp& model, HiddenLayer layer, std::span<const std::size_t> neurons);

// Removes floor(alpha * size) least-connected neurons from each targeted
// layer. Degrees of both layers are taken before either layer shrinks.
// Throws ScheduleError outside the pruning window.
PruneReport prune_neurons(Mlp& model, const PruneSchedule& sched, int epoch);

// Hidden sizes reached after `epochs` epochs of the schedule, by iterating
// n <- n - floor(alpha * n) on every pruning epoch.
Dims pruned_dims(const Dims& initial, const PruneSchedule& sched, int epochs);

}  // namespace sparsenet
