#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sparsenet/config.hpp"
#include "sparsenet/data.hpp"
#include "sparsenet/network.hpp"
#include "sparsenet/pruning.hpp"

namespace sparsenet {

struct EpochRecord {
  EpochMetrics metrics;
  std::size_t removed_connections = 0;  // rewiring after this epoch
  std::size_t regrown_connections = 0;
  std::size_t pruned_neurons = 0;  // neuron pruning before this epoch
};

struct ExperimentResult {
  Method method = Method::kSet;
  std::string dataset;
  Dims initial_dims;
  Dims final_dims;
  bool stratified_split = true;
  std::vector<EpochRecord> epochs;
  std::vector<PruneReport> prune_reports;
  double max_test_accuracy = 0.0;
  int max_test_epoch = 0;
  ParameterCount final_parameters;
  std::size_t final_neurons = 0;
  // Dense weight count at the initial dims: the compression reference.
  std::size_t dense_reference_weights = 0;
  std::size_t compression_rate = 0;
  Mlp model;
};

// Train/test splits ready for training (standardized with train statistics).
struct PreparedData {
  Dataset train;
  Dataset test;
  bool stratified = true;
};

// Loads the configured dataset (CSV or "standin:<name>").
Dataset load_dataset(const ExperimentConfig& cfg);
PreparedData prepare_data(const ExperimentConfig& cfg, const Dataset& data);

// Hidden sizes the configured run starts from (DIRECT_* resolve the
// post-pruning sizes of the matching NPSET run).
Dims initial_dims(const ExperimentConfig& cfg, const Dataset& data);
Dims build_dims(const ExperimentConfig& cfg, const Dims& initial);

// Effective pruning schedule for a method (targets follow the method for
// the NPSET variants, the configured targets otherwise).
PruneSchedule schedule_for(const ExperimentConfig& cfg);

// Called after each epoch with the finished record.
using EpochCallback = std::function<void(const EpochRecord&)>;

ExperimentResult run_experiment(const ExperimentConfig& cfg, const EpochCallback& on_epoch = {});
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& data, const EpochCallback& on_epoch = {});

// round(dense / sparse); throws ConfigError when sparse is zero.
std::size_t compression_rate(std::uint64_t dense_weights, std::uint64_t sparse_weights);

struct AblationPoint {
  double fraction = 0.0;
  std::size_t removed = 0;
  double accuracy = 0.0;
};

// For each fraction f, removes floor(f * n) least-connected neurons of the
// layer from a copy of the model and measures test accuracy.
std::vector<AblationPoint> ablate_least_connected(const Mlp& model, HiddenLayer layer,
                                                  std::span<const double> fractions, const Dataset& test,
                                                  DegreeMode mode);

std::string metrics_csv(const ExperimentResult& result);
std::string prune_csv(const ExperimentResult& result);
std::string summary_json(const ExperimentResult& result, const ExperimentConfig& cfg);
std::string ablation_csv(std::span<const AblationPoint> points);

// Writes metrics.csv, prune.csv, summary.json and config.ini into dir.
void export_metrics(const ExperimentResult& result, const ExperimentConfig& cfg, const std::filesystem::path& dir);

}  // namespace sparsenet
