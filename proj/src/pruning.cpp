#include "sparsenet/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sparsenet/errors.hpp"

namespace sparsenet {

namespace {

std::size_t prune_count(double alpha, std::size_t size) {
  return static_cast<std::size_t>(std::floor(alpha * static_cast<double>(size)));
}

// Connections per input (rows) or per output (cols) of one layer.
std::vector<std::size_t> incident(const Layer& layer, bool per_input) {
  std::vector<std::size_t> counts(per_input ? fan_in(layer) : fan_out(layer), 0);
  if (const auto* sparse = std::get_if<SparseLayer>(&layer)) {
    const auto idx = per_input ? sparse->rows() : sparse->cols();
    for (auto i : idx) ++counts[i];
  } else {
    std::ranges::fill(counts, per_input ? fan_out(layer) : fan_in(layer));
  }
  return counts;
}

}  // namespace

void PruneSchedule::validate() const {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in [0, 1)");
  if (beta < 0) throw ConfigError("beta must be non-negative");
  if (gamma < 0) throw ConfigError("gamma must be non-negative");
}

std::size_t PruneReport::removed_neurons() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.removed.size();
  return n;
}

bool should_prune(int epoch, const PruneSchedule& sched) {
  return epoch >= sched.beta && epoch <= sched.beta + sched.gamma;
}

std::vector<std::size_t> neuron_degree(const Mlp& model, HiddenLayer layer, DegreeMode mode) {
  const auto k = static_cast<std::size_t>(layer);
  std::vector<std::size_t> degree = incident(model.layer(k + 1), /*per_input=*/true);
  if (mode == DegreeMode::kInOut) {
    const auto in = incident(model.layer(k), /*per_input=*/false);
    for (std::size_t j = 0; j < degree.size(); ++j) degree[j] += in[j];
  }
  return degree;
}

std::vector<std::size_t> least_connected(std::span<const std::size_t> degrees, std::size_t count) {
  count = std::min(count, degrees.size());
  std::vector<std::size_t> idx(degrees.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::ranges::stable_sort(idx, [&](std::size_t a, std::size_t b) { return degrees[a] < degrees[b]; });
  idx.resize(count);
  std::ranges::sort(idx);
  return idx;
}

std::size_t remove_hidden_neurons(Mlp& model, HiddenLayer layer, std::span<const std::size_t> neurons) {
  if (neurons.empty()) return 0;
  const auto k = static_cast<std::size_t>(layer);
  const std::size_t size = fan_out(model.layer(k));
  std::vector<bool> keep(size, true);
  std::size_t removing = 0;
  for (std::size_t j : neurons) {
    if (j >= size) throw ShapeError("neuron index out of range");
    if (keep[j]) ++removing;
    keep[j] = false;
  }
  if (removing >= size) {
    throw ScheduleError("removing " + std::to_string(removing) + " neurons would empty hidden layer " +
                        std::to_string(k + 1));
  }
  std::size_t dropped = 0;
  dropped += std::visit([&](auto& l) { return l.keep_outputs(keep); }, model.layer(k));
  dropped += std::visit([&](auto& l) { return l.keep_inputs(keep); }, model.layer(k + 1));
  model.check();
  return dropped;
}

PruneReport prune_neurons(Mlp& model, const PruneSchedule& sched, int epoch) {
  sched.validate();
  if (!should_prune(epoch, sched)) {
    throw ScheduleError("epoch " + std::to_string(epoch) + " is outside the neuron pruning window");
  }
  PruneReport report;
  report.epoch = epoch;
  for (HiddenLayer h : {HiddenLayer::kFirst, HiddenLayer::kSecond}) {
    if (!sched.targets(h)) continue;
    const auto degrees = neuron_degree(model, h, sched.degree_mode);
    const std::size_t k = prune_count(sched.alpha, degrees.size());
    if (k >= degrees.size()) throw ScheduleError("neuron pruning would empty a hidden layer");
    report.layers.push_back({h, least_connected(degrees, k), degrees.size() - k});
  }
  for (const auto& lp : report.layers) {
    report.removed_connections += remove_hidden_neurons(model, lp.layer, lp.removed);
  }
  report.new_dims = model.dims();
  return report;
}

Dims pruned_dims(const Dims& initial, const PruneSchedule& sched, int epochs) {
  sched.validate();
  Dims d = initial;
  for (int e = 0; e < epochs; ++e) {
    if (!should_prune(e, sched)) continue;
    if (sched.prune_first) d.h1 -= prune_count(sched.alpha, d.h1);
    if (sched.prune_second) d.h2 -= prune_count(sched.alpha, d.h2);
  }
  return d;
}

}  // namespace sparsenet
