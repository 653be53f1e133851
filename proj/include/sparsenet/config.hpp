#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sparsenet/data.hpp"
#include "sparsenet/evolution.hpp"
#include "sparsenet/layers.hpp"
#include "sparsenet/network.hpp"
#include "sparsenet/pruning.hpp"

namespace sparsenet {

enum class Method {
  kSet,        // sparse, rewired every epoch
  kNpset,      // SET plus neuron pruning on both hidden layers
  kNpsetL1,    // neuron pruning on the first hidden layer only
  kNpsetL2,    // neuron pruning on the second hidden layer only
  kDirectSet,  // sparse, trained at the post-pruning hidden sizes
  kDirectFc,   // dense, trained at the post-pruning hidden sizes
  kDense,      // dense, trained at the original hidden sizes
};

std::string_view method_name(Method m);
// Accepts the names above case-insensitively ("set", "npset_l1", ...).
Method parse_method(std::string_view name);
bool is_sparse(Method m);
bool prunes_neurons(Method m);

struct ExperimentConfig {
  std::string name = "experiment";
  // CSV path, or "standin:<name>" for a generated stand-in dataset.
  std::string dataset;
  LabelColumn label = std::string("label");
  double train_fraction = 2.0 / 3.0;
  // Zero selects the per-dataset default (see default_hidden_size).
  std::size_t h1 = 0;
  std::size_t h2 = 0;
  Method method = Method::kSet;
  std::uint64_t seed = 42;
  InitConfig init;
  TrainConfig train;
  EvolutionConfig evolution;
  PruneSchedule pruning;
  std::filesystem::path output = "runs/experiment";

  void validate() const;
};

// Settings keyed by bare key name; every key belongs to exactly one section.
using Settings = std::map<std::string, std::string>;

struct KeyInfo {
  std::string_view section;
  std::string_view key;
  std::string_view help;
};
const std::vector<KeyInfo>& config_keys();

// Parses an INI file ([section] headers, key = value lines, ';' or '#'
// comments). Unknown keys or keys in the wrong section throw ConfigError.
Settings read_ini(const std::filesystem::path& path);
Settings parse_ini(const std::string& text);

// Later settings override earlier ones.
void merge_settings(Settings& base, const Settings& overrides);

ExperimentConfig config_from_settings(const Settings& settings);
Settings settings_from_config(const ExperimentConfig& cfg);
std::string to_ini(const ExperimentConfig& cfg);

// Hidden width per benchmark dataset (h1 = h2), chosen so the dense weight
// count n_in*h + h*h + h*n_classes equals the benchmark's reported FC size.
// Returns 1000 for unknown names.
std::size_t default_hidden_size(std::string_view dataset_name);

}  // namespace sparsenet
