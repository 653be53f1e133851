#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sparsenet/data.hpp"

namespace sparsenet {

/// Parameters of a hypercube-cluster classification problem: Gaussian
/// clusters centred on hypercube vertices in an informative subspace,
/// redundant features as random linear combinations of the informative
/// ones, the rest pure noise.
struct SyntheticSpec {
  std::string name = "synthetic";
  std::size_t n_samples = 100;
  std::size_t n_features = 20;
  std::size_t n_classes = 2;
  std::size_t n_informative = 2;
  std::size_t n_redundant = 2;
  std::size_t clusters_per_class = 2;
  double class_sep = 1.0;
  double flip_y = 0.01;
  // When positive, every feature is rounded and clipped to this many
  // integer levels, giving a discrete-valued dataset.
  int quantize_levels = 0;

  void validate() const;
};

Dataset make_classification(const SyntheticSpec& spec, std::uint64_t seed);

// Stand-ins with the sample/feature/class shape of the benchmark datasets:
// "madelon", "gisette", "yale", "lung_discrete".
std::optional<SyntheticSpec> standin_spec(std::string_view name);
std::vector<std::string> standin_names();

}  // namespace sparsenet
