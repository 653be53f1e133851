#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "sparsenet/batch.hpp"
#include "sparsenet/data.hpp"
#include "sparsenet/layers.hpp"
#include "sparsenet/random.hpp"

namespace sparsenet {

struct Dims {
  std::size_t n_features = 0;
  std::size_t h1 = 0;
  std::size_t h2 = 0;
  std::size_t n_classes = 0;

  friend bool operator==(const Dims&, const Dims&) = default;
};

enum class Topology { kSparse, kDense };

using Layer = std::variant<SparseLayer, DenseLayer>;

std::size_t fan_in(const Layer& layer);
std::size_t fan_out(const Layer& layer);
std::size_t nnz(const Layer& layer);

/// Two-hidden-layer perceptron: input -> ReLU -> ReLU -> softmax.
class Mlp {
 public:
  static constexpr std::size_t kLayers = 3;

  Mlp() = default;
  // Throws ShapeError unless adjacent layers chain.
  explicit Mlp(std::array<Layer, kLayers> layers);

  Dims dims() const;
  bool has_sparse_layer() const;

  const Layer& layer(std::size_t k) const { return layers_[k]; }
  Layer& layer(std::size_t k) { return layers_[k]; }
  std::span<const Layer> layers() const { return layers_; }
  std::span<Layer> layers() { return layers_; }

  // Re-checks the chaining invariant after structural edits.
  void check() const;

 private:
  std::array<Layer, kLayers> layers_;
};

// Throws ConfigError for zero dimensions.
Mlp build_mlp(const Dims& dims, const InitConfig& cfg, Topology topology, Rng& rng);

struct TrainConfig {
  SgdConfig sgd;
  std::size_t batch_size = 32;
  std::size_t epochs = 100;
  std::uint64_t seed = 42;

  void validate() const;
};

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

struct ParameterCount {
  std::size_t weights = 0;
  std::size_t weights_plus_biases = 0;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::size_t weight_count = 0;
  std::size_t bias_count = 0;
  std::array<std::size_t, 2> hidden_neurons{};
};

/// Activations kept from a forward pass, for backpropagation.
struct ForwardPass {
  std::array<Batch, Mlp::kLayers + 1> activations;  // input, h1, h2, softmax
};

ForwardPass forward(const Mlp& model, const Batch& input);

// Row-wise softmax over a (n_classes x batch) logit batch.
Batch softmax(const Batch& logits);

// Mean cross-entropy of the batch and gradients of every layer.
double loss_and_gradients(const Mlp& model, const Batch& input, std::span<const int> labels,
                          std::array<LayerGradients, Mlp::kLayers>& grads);

// Argmax with ties to the lowest class index.
std::vector<int> predict(const Mlp& model, const Batch& input);

// Loss and accuracy over the whole dataset (evaluated in chunks).
Evaluation evaluate(const Mlp& model, const Dataset& data);

// One shuffled mini-batch SGD pass. Train loss/accuracy are measured on the
// full training set after the pass; test fields are left at zero.
EpochMetrics train_epoch(Mlp& model, const Dataset& train, const TrainConfig& cfg, Rng& rng);

ParameterCount count_parameters(const Mlp& model);
// Weight count of the fully connected network with these dims.
std::size_t dense_weight_count(const Dims& dims);
// Inputs plus hidden neurons; outputs are not counted.
std::size_t count_neurons(const Mlp& model);

}  // namespace sparsenet
