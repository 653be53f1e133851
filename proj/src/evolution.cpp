#include "sparsenet/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "sparsenet/errors.hpp"

namespace sparsenet {

void EvolutionConfig::validate() const {
  if (!(zeta >= 0.0 && zeta < 1.0)) throw ConfigError("zeta must lie in [0, 1)");
}

std::size_t EvolutionStats::total_removed() const { return std::accumulate(removed.begin(), removed.end(), 0UL); }
std::size_t EvolutionStats::total_regrown() const { return std::accumulate(regrown.begin(), regrown.end(), 0UL); }

std::size_t prune_weights(SparseLayer& layer, double zeta) {
  if (!(zeta >= 0.0 && zeta < 1.0)) throw ConfigError("zeta must lie in [0, 1)");
  const auto k = static_cast<std::size_t>(std::floor(zeta * static_cast<double>(layer.nnz())));
  if (k == 0) return 0;
  const auto w = layer.weights();
  const auto rows = layer.rows();
  const auto cols = layer.cols();
  std::vector<std::size_t> idx(layer.nnz());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto smaller = [&](std::size_t a, std::size_t b) {
    const double ma = std::abs(w[a]);
    const double mb = std::abs(w[b]);
    if (ma != mb) return ma < mb;
    if (rows[a] != rows[b]) return rows[a] < rows[b];
    return cols[a] < cols[b];
  };
  std::ranges::nth_element(idx, idx.begin() + static_cast<std::ptrdiff_t>(k), smaller);
  idx.resize(k);
  layer.erase(idx);
  return k;
}

void regrow_weights(SparseLayer& layer, std::size_t count, const InitConfig& cfg, Rng& rng) {
  if (count == 0) return;
  const std::size_t n_in = layer.n_in();
  const std::uint64_t cells = static_cast<std::uint64_t>(n_in) * layer.n_out();
  const std::uint64_t empty = cells - layer.nnz();
  if (count > empty) {
    throw RewiringError("cannot regrow " + std::to_string(count) + " connections: only " + std::to_string(empty) +
                        " empty cells");
  }
  const double scale = cfg.scale_for(layer.n_in(), layer.n_out());
  std::vector<Connection> added;
  added.reserve(count);
  auto emit = [&](std::uint64_t cell) {
    added.push_back({static_cast<std::uint32_t>(cell % n_in), static_cast<std::uint32_t>(cell / n_in), 0.0});
  };

  if (4 * static_cast<std::uint64_t>(count) > empty) {
    // Dense regime: enumerate empty cells and take a partial Fisher-Yates draw.
    std::vector<std::uint64_t> free_cells;
    free_cells.reserve(empty);
    const auto rows = layer.rows();
    const auto cols = layer.cols();
    std::size_t k = 0;
    for (std::uint64_t cell = 0; cell < cells; ++cell) {
      if (k < layer.nnz() && static_cast<std::uint64_t>(cols[k]) * n_in + rows[k] == cell) {
        ++k;
        continue;
      }
      free_cells.push_back(cell);
    }
    for (std::size_t i = 0; i < count; ++i) {
      std::swap(free_cells[i], free_cells[i + rng.index(free_cells.size() - i)]);
      emit(free_cells[i]);
    }
  } else {
    // Sparse regime: rejection sampling against occupied and chosen cells.
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(count * 2);
    while (added.size() < count) {
      const std::uint64_t cell = rng.index(cells);
      const auto row = static_cast<std::uint32_t>(cell % n_in);
      const auto col = static_cast<std::uint32_t>(cell / n_in);
      if (layer.contains(row, col) || !chosen.insert(cell).second) continue;
      emit(cell);
    }
  }
  for (auto& c : added) c.weight = rng.uniform(-scale, scale);
  layer.insert(added);
}

EvolutionStats evolve(Mlp& model, const EvolutionConfig& cfg, const InitConfig& init, Rng& rng) {
  cfg.validate();
  if (!model.has_sparse_layer()) throw RewiringError("evolve requires at least one sparse layer");
  EvolutionStats stats;
  for (std::size_t k = 0; k < Mlp::kLayers; ++k) {
    auto* layer = std::get_if<SparseLayer>(&model.layer(k));
    if (layer == nullptr) continue;
    Rng stream = rng.derive(k);
    const std::size_t removed = prune_weights(*layer, cfg.zeta);
    const std::uint64_t empty = static_cast<std::uint64_t>(layer->n_in()) * layer->n_out() - layer->nnz();
    const auto grow = static_cast<std::size_t>(std::min<std::uint64_t>(removed, empty));
    regrow_weights(*layer, grow, init, stream);
    stats.removed[k] = removed;
    stats.regrown[k] = grow;
  }
  return stats;
}

}  // namespace sparsenet
