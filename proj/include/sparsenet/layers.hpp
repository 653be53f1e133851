#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sparsenet/batch.hpp"
#include "sparsenet/random.hpp"

namespace sparsenet {

/// Erdős–Rényi initialization parameters.
struct InitConfig {
  // Density control: expected connections per layer ~ epsilon * (n_in + n_out).
  double epsilon = 8.0;
  // Half-width of the uniform initial-weight distribution. When unset each
  // layer uses sqrt(6 / (n_in + n_out)).
  std::optional<double> weight_scale;
  std::uint64_t seed = 42;

  void validate() const;
  double scale_for(std::size_t n_in, std::size_t n_out) const;
  double density(std::size_t n_in, std::size_t n_out) const;
};

struct Connection {
  std::uint32_t row;
  std::uint32_t col;
  double weight;

  friend bool operator==(const Connection&, const Connection&) = default;
};

struct SgdConfig {
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0002;
};

/// Gradients of one layer. `weights` follows the layer's own storage order:
/// one entry per connection for sparse layers, n_in * n_out row-major for
/// dense layers.
struct LayerGradients {
  std::vector<double> weights;
  std::vector<double> bias;
  Batch input;  // empty when not requested
};

/// Bipartite sparse layer in COO form.
///
/// Connections are kept sorted by (col, row); a row-major permutation is
/// maintained for the transposed pass. Every weight carries a momentum
/// entry, so rewiring and neuron removal move weights and momentum together.
class SparseLayer {
 public:
  SparseLayer() = default;
  SparseLayer(std::size_t n_in, std::size_t n_out);

  // Throws ShapeError on out-of-range indices or duplicate cells.
  static SparseLayer from_connections(std::size_t n_in, std::size_t n_out, std::vector<Connection> connections,
                                      std::vector<double> bias = {});

  std::size_t n_in() const { return n_in_; }
  std::size_t n_out() const { return n_out_; }
  std::size_t nnz() const { return weights_.size(); }

  std::span<const std::uint32_t> rows() const { return rows_; }
  std::span<const std::uint32_t> cols() const { return cols_; }
  std::span<const double> weights() const { return weights_; }
  std::span<double> weights() { return weights_; }
  std::span<const double> velocity() const { return velocity_; }
  std::span<double> velocity() { return velocity_; }
  std::span<const double> bias() const { return bias_; }
  std::span<double> bias() { return bias_; }
  std::span<const double> bias_velocity() const { return bias_velocity_; }
  std::span<double> bias_velocity() { return bias_velocity_; }
  // Connection indices ordered by (row, col).
  std::span<const std::size_t> row_order() const { return row_order_; }

  std::vector<Connection> connections() const;
  bool contains(std::uint32_t row, std::uint32_t col) const;

  // Removes the connections at the given storage indices (with momentum).
  void erase(std::span<const std::size_t> indices);
  // Adds new connections with zero momentum. Cells must be empty.
  void insert(std::span<const Connection> connections);

  // Keeps only the output (or input) neurons whose mask entry is true and
  // renumbers the survivors densely. Returns the number of dropped connections.
  std::size_t keep_outputs(const std::vector<bool>& keep);
  std::size_t keep_inputs(const std::vector<bool>& keep);

 private:
  void reorder(std::vector<std::size_t> order);
  void rebuild_row_order();

  std::size_t n_in_ = 0;
  std::size_t n_out_ = 0;
  std::vector<std::uint32_t> rows_;
  std::vector<std::uint32_t> cols_;
  std::vector<double> weights_;
  std::vector<double> velocity_;
  std::vector<double> bias_;
  std::vector<double> bias_velocity_;
  std::vector<std::size_t> row_order_;
};

/// Fully connected layer; weights are n_in x n_out row-major.
class DenseLayer {
 public:
  DenseLayer() = default;
  DenseLayer(std::size_t n_in, std::size_t n_out);

  std::size_t n_in() const { return n_in_; }
  std::size_t n_out() const { return n_out_; }
  std::size_t nnz() const { return n_in_ * n_out_; }

  double& weight(std::size_t i, std::size_t j) { return weights_[i * n_out_ + j]; }
  double weight(std::size_t i, std::size_t j) const { return weights_[i * n_out_ + j]; }

  std::span<const double> weights() const { return weights_; }
  std::span<double> weights() { return weights_; }
  std::span<const double> velocity() const { return velocity_; }
  std::span<double> velocity() { return velocity_; }
  std::span<const double> bias() const { return bias_; }
  std::span<double> bias() { return bias_; }
  std::span<const double> bias_velocity() const { return bias_velocity_; }
  std::span<double> bias_velocity() { return bias_velocity_; }

  std::size_t keep_outputs(const std::vector<bool>& keep);
  std::size_t keep_inputs(const std::vector<bool>& keep);

 private:
  std::size_t n_in_ = 0;
  std::size_t n_out_ = 0;
  std::vector<double> weights_;
  std::vector<double> velocity_;
  std::vector<double> bias_;
  std::vector<double> bias_velocity_;
};

// Samples each of the n_in * n_out cells independently with probability
// min(1, epsilon * (n_in + n_out) / (n_in * n_out)); weights uniform in
// [-scale, scale], zero biases.
SparseLayer er_init(std::size_t n_in, std::size_t n_out, const InitConfig& cfg, Rng& rng);

// Dense counterpart with the same weight-scale rule. Weights are drawn in
// (col, row) order so a dense layer and a fully connected sparse layer built
// from equal streams hold identical values.
DenseLayer dense_init(std::size_t n_in, std::size_t n_out, const InitConfig& cfg, Rng& rng);

// Pre-activation affine map.
Batch forward(const SparseLayer& layer, const Batch& input);
Batch forward(const DenseLayer& layer, const Batch& input);

// Gradients summed over the batch (the loss gradient already carries the
// 1/batch factor). The input gradient is skipped when not needed.
LayerGradients backward(const SparseLayer& layer, const Batch& input, const Batch& upstream,
                        bool want_input_grad = true);
LayerGradients backward(const DenseLayer& layer, const Batch& input, const Batch& upstream,
                        bool want_input_grad = true);

// v <- momentum * v + g + decay * w;  w <- w - lr * v.  Biases are not decayed.
void apply_update(SparseLayer& layer, const LayerGradients& grads, const SgdConfig& sgd);
void apply_update(DenseLayer& layer, const LayerGradients& grads, const SgdConfig& sgd);

std::size_t nnz(const SparseLayer& layer);
std::size_t nnz(const DenseLayer& layer);
DenseLayer to_dense(const SparseLayer& layer);

}  // namespace sparsenet
