#include "sparsenet/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>

#include "sparsenet/errors.hpp"
#include "sparsenet/evolution.hpp"
#include "sparsenet/synthetic.hpp"

namespace sparsenet {

namespace {

constexpr std::string_view kStandinPrefix = "standin:";

// Independent streams derived from the master seed.
enum StreamTag : std::uint64_t { kSplitStream = 1, kInitStream = 2, kShuffleStream = 3, kEvolveStream = 4, kDataStream = 5 };

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

Dataset load_dataset(const ExperimentConfig& cfg) {
  if (cfg.dataset.starts_with(kStandinPrefix)) {
    const std::string name = cfg.dataset.substr(kStandinPrefix.size());
    const auto spec = standin_spec(name);
    if (!spec) throw ConfigError("unknown stand-in dataset '" + name + "'");
    return make_classification(*spec, Rng(cfg.seed).derive(kDataStream).seed());
  }
  return load_csv(cfg.dataset, cfg.label);
}

PreparedData prepare_data(const ExperimentConfig& cfg, const Dataset& data) {
  Split s = split(data, cfg.train_fraction, Rng(cfg.seed).derive(kSplitStream).seed());
  const Standardizer standardizer = Standardizer::fit(s.train);
  return {standardizer.transform(s.train), standardizer.transform(s.test), s.stratified};
}

PruneSchedule schedule_for(const ExperimentConfig& cfg) {
  PruneSchedule sched = cfg.pruning;
  switch (cfg.method) {
    case Method::kNpset:
      sched.prune_first = sched.prune_second = true;
      break;
    case Method::kNpsetL1:
      sched.prune_first = true;
      sched.prune_second = false;
      break;
    case Method::kNpsetL2:
      sched.prune_first = false;
      sched.prune_second = true;
      break;
    default:
      break;
  }
  return sched;
}

Dims initial_dims(const ExperimentConfig& cfg, const Dataset& data) {
  const std::size_t fallback = default_hidden_size(data.name);
  return {data.n_features, cfg.h1 ? cfg.h1 : fallback, cfg.h2 ? cfg.h2 : fallback, data.n_classes};
}

Dims build_dims(const ExperimentConfig& cfg, const Dims& initial) {
  if (cfg.method == Method::kDirectSet || cfg.method == Method::kDirectFc) {
    return pruned_dims(initial, schedule_for(cfg), static_cast<int>(cfg.train.epochs));
  }
  return initial;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  return run_experiment(cfg, load_dataset(cfg), on_epoch);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& data, const EpochCallback& on_epoch) {
  cfg.validate();
  const PreparedData prepared = prepare_data(cfg, data);
  const Rng master(cfg.seed);

  ExperimentResult result;
  result.method = cfg.method;
  result.dataset = data.name;
  result.stratified_split = prepared.stratified;
  result.initial_dims = initial_dims(cfg, data);
  result.dense_reference_weights = dense_weight_count(result.initial_dims);

  InitConfig init = cfg.init;
  init.seed = master.derive(kInitStream).seed();
  TrainConfig train_cfg = cfg.train;
  train_cfg.seed = master.derive(kShuffleStream).seed();
  const PruneSchedule sched = schedule_for(cfg);
  const Topology topology = is_sparse(cfg.method) ? Topology::kSparse : Topology::kDense;

  Rng init_rng(init.seed);
  result.model = build_mlp(build_dims(cfg, result.initial_dims), init, topology, init_rng);
  Mlp& model = result.model;
  Rng shuffle_rng(train_cfg.seed);
  const Rng evolve_root = master.derive(kEvolveStream);

  const int epochs = static_cast<int>(cfg.train.epochs);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    EpochRecord record;
    if (prunes_neurons(cfg.method) && should_prune(epoch, sched)) {
      PruneReport report = prune_neurons(model, sched, epoch);
      record.pruned_neurons = report.removed_neurons();
      result.prune_reports.push_back(std::move(report));
    }
    record.metrics = train_epoch(model, prepared.train, train_cfg, shuffle_rng);
    record.metrics.epoch = epoch;
    const Evaluation test = evaluate(model, prepared.test);
    record.metrics.test_loss = test.loss;
    record.metrics.test_accuracy = test.accuracy;
    if (epoch == 0 || test.accuracy > result.max_test_accuracy) {
      result.max_test_accuracy = test.accuracy;
      result.max_test_epoch = epoch;
    }
    // No rewiring after the last epoch: the returned model is the trained one.
    if (topology == Topology::kSparse && epoch + 1 < epochs) {
      Rng evolve_rng = evolve_root.derive(static_cast<std::uint64_t>(epoch));
      const EvolutionStats stats = evolve(model, cfg.evolution, init, evolve_rng);
      record.removed_connections = stats.total_removed();
      record.regrown_connections = stats.total_regrown();
    }
    if (on_epoch) on_epoch(record);
    result.epochs.push_back(record);
  }

  result.final_dims = model.dims();
  result.final_parameters = count_parameters(model);
  result.final_neurons = count_neurons(model);
  result.compression_rate = compression_rate(result.dense_reference_weights, result.final_parameters.weights);
  return result;
}

std::size_t compression_rate(std::uint64_t dense_weights, std::uint64_t sparse_weights) {
  if (sparse_weights == 0) throw ConfigError("compression rate undefined for a zero sparse weight count");
  return static_cast<std::size_t>(std::llround(static_cast<double>(dense_weights) / static_cast<double>(sparse_weights)));
}

std::vector<AblationPoint> ablate_least_connected(const Mlp& model, HiddenLayer layer,
                                                  std::span<const double> fractions, const Dataset& test,
                                                  DegreeMode mode) {
  const auto degrees = neuron_degree(model, layer, mode);
  std::vector<AblationPoint> out;
  for (double f : fractions) {
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("ablation fractions must lie in [0, 1]");
    const auto k = static_cast<std::size_t>(std::floor(f * static_cast<double>(degrees.size())));
    Mlp copy = model;
    remove_hidden_neurons(copy, layer, least_connected(degrees, k));
    out.push_back({f, k, evaluate(copy, test).accuracy});
  }
  return out;
}

std::string metrics_csv(const ExperimentResult& result) {
  std::string out =
      "epoch,train_loss,train_acc,test_loss,test_acc,weights,biases,neurons_h1,neurons_h2,removed_conns,"
      "regrown_conns,pruned_neurons\n";
  for (const auto& r : result.epochs) {
    const auto& m = r.metrics;
    out += std::to_string(m.epoch) + ',' + fixed(m.train_loss) + ',' + fixed(m.train_accuracy) + ',' +
           fixed(m.test_loss) + ',' + fixed(m.test_accuracy) + ',' + std::to_string(m.weight_count) + ',' +
           std::to_string(m.bias_count) + ',' + std::to_string(m.hidden_neurons[0]) + ',' +
           std::to_string(m.hidden_neurons[1]) + ',' + std::to_string(r.removed_connections) + ',' +
           std::to_string(r.regrown_connections) + ',' + std::to_string(r.pruned_neurons) + '\n';
  }
  return out;
}

std::string prune_csv(const ExperimentResult& result) {
  std::string out = "epoch,layer,removed_neurons,new_size,removed_conns\n";
  for (const auto& report : result.prune_reports) {
    for (const auto& l : report.layers) {
      // Connections are attributed per report; both rows carry the total.
      out += std::to_string(report.epoch) + ",h" + std::to_string(static_cast<int>(l.layer) + 1) + ',' +
             std::to_string(l.removed.size()) + ',' + std::to_string(l.new_size) + ',' +
             std::to_string(report.removed_connections) + '\n';
    }
  }
  return out;
}

std::string summary_json(const ExperimentResult& r, const ExperimentConfig& cfg) {
  auto dims = [](const Dims& d) { return nlohmann::json::array({d.n_features, d.h1, d.h2, d.n_classes}); };
  nlohmann::ordered_json j;
  j["name"] = cfg.name;
  j["method"] = method_name(r.method);
  j["dataset"] = r.dataset;
  j["seed"] = cfg.seed;
  j["epochs"] = r.epochs.size();
  j["stratified_split"] = r.stratified_split;
  j["initial_dims"] = dims(r.initial_dims);
  j["final_dims"] = dims(r.final_dims);
  j["max_test_accuracy"] = std::round(r.max_test_accuracy * 1e6) / 1e6;
  j["max_test_epoch"] = r.max_test_epoch;
  if (!r.epochs.empty()) {
    const auto& last = r.epochs.back().metrics;
    j["final_train_accuracy"] = std::round(last.train_accuracy * 1e6) / 1e6;
    j["final_test_accuracy"] = std::round(last.test_accuracy * 1e6) / 1e6;
  }
  j["weights"] = r.final_parameters.weights;
  j["weights_plus_biases"] = r.final_parameters.weights_plus_biases;
  j["neurons"] = r.final_neurons;
  j["dense_reference_weights"] = r.dense_reference_weights;
  j["compression_rate"] = r.compression_rate;
  return j.dump(2) + "\n";
}

std::string ablation_csv(std::span<const AblationPoint> points) {
  std::string out = "fraction,removed_neurons,test_acc\n";
  for (const auto& p : points) out += fixed(p.fraction) + ',' + std::to_string(p.removed) + ',' + fixed(p.accuracy) + '\n';
  return out;
}

void export_metrics(const ExperimentResult& result, const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir / "metrics.csv", metrics_csv(result));
  write_text(dir / "prune.csv", prune_csv(result));
  write_text(dir / "summary.json", summary_json(result, cfg));
  write_text(dir / "config.ini", to_ini(cfg));
}

}  // namespace sparsenet
