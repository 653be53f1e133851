#include "sparsenet/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "sparsenet/errors.hpp"

namespace sparsenet {

namespace {

std::uint64_t cell_key(std::uint32_t row, std::uint32_t col, std::size_t n_in) {
  return static_cast<std::uint64_t>(col) * n_in + row;
}

void check_input(std::size_t n_in, const Batch& input) {
  if (input.width() != n_in) {
    throw ShapeError("input width " + std::to_string(input.width()) + " does not match layer fan-in " +
                     std::to_string(n_in));
  }
}

void check_upstream(std::size_t n_out, const Batch& input, const Batch& upstream) {
  if (upstream.width() != n_out || upstream.size() != input.size()) {
    throw ShapeError("upstream gradient shape does not match layer output");
  }
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  const std::size_t n = y.size();
  const double* xs = x.data();
  double* ys = y.data();
  for (std::size_t b = 0; b < n; ++b) ys[b] += a * xs[b];
}

double dot(std::span<const double> x, std::span<const double> y) {
  double sum = 0.0;
  for (std::size_t b = 0; b < x.size(); ++b) sum += x[b] * y[b];
  return sum;
}

double sum(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s;
}

void broadcast_bias(std::span<const double> bias, Batch& out) {
  for (std::size_t j = 0; j < bias.size(); ++j) std::ranges::fill(out.feature(j), bias[j]);
}

}  // namespace

void InitConfig::validate() const {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (weight_scale && !(*weight_scale > 0.0)) throw ConfigError("weight_scale must be positive");
}

double InitConfig::scale_for(std::size_t n_in, std::size_t n_out) const {
  if (weight_scale) return *weight_scale;
  return std::sqrt(6.0 / static_cast<double>(n_in + n_out));
}

double InitConfig::density(std::size_t n_in, std::size_t n_out) const {
  const double cells = static_cast<double>(n_in) * static_cast<double>(n_out);
  return std::min(1.0, epsilon * static_cast<double>(n_in + n_out) / cells);
}

// ---------------------------------------------------------------------------
// SparseLayer

SparseLayer::SparseLayer(std::size_t n_in, std::size_t n_out)
    : n_in_(n_in), n_out_(n_out), bias_(n_out, 0.0), bias_velocity_(n_out, 0.0) {
  if (n_in == 0 || n_out == 0) throw ShapeError("layer dimensions must be positive");
  if (n_in > std::numeric_limits<std::uint32_t>::max() || n_out > std::numeric_limits<std::uint32_t>::max()) {
    throw ShapeError("layer dimensions exceed 32-bit index range");
  }
}

SparseLayer SparseLayer::from_connections(std::size_t n_in, std::size_t n_out, std::vector<Connection> connections,
                                          std::vector<double> bias) {
  SparseLayer layer(n_in, n_out);
  if (!bias.empty()) {
    if (bias.size() != n_out) throw ShapeError("bias length must equal n_out");
    layer.bias_ = std::move(bias);
  }
  for (const auto& c : connections) {
    if (c.row >= n_in || c.col >= n_out) throw ShapeError("connection index out of bounds");
  }
  layer.insert(connections);
  return layer;
}

std::vector<Connection> SparseLayer::connections() const {
  std::vector<Connection> out(nnz());
  for (std::size_t k = 0; k < nnz(); ++k) out[k] = {rows_[k], cols_[k], weights_[k]};
  return out;
}

bool SparseLayer::contains(std::uint32_t row, std::uint32_t col) const {
  const std::uint64_t key = cell_key(row, col, n_in_);
  std::size_t lo = 0;
  std::size_t hi = nnz();
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (cell_key(rows_[mid], cols_[mid], n_in_) < key) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return lo < nnz() && rows_[lo] == row && cols_[lo] == col;
}

void SparseLayer::reorder(std::vector<std::size_t> order) {
  auto permute = [&order](auto& values) {
    std::remove_reference_t<decltype(values)> next(values.size());
    for (std::size_t k = 0; k < order.size(); ++k) next[k] = values[order[k]];
    values = std::move(next);
  };
  permute(rows_);
  permute(cols_);
  permute(weights_);
  permute(velocity_);
}

void SparseLayer::rebuild_row_order() {
  row_order_.resize(nnz());
  std::iota(row_order_.begin(), row_order_.end(), std::size_t{0});
  std::ranges::stable_sort(row_order_, [this](std::size_t a, std::size_t b) { return rows_[a] < rows_[b]; });
}

void SparseLayer::erase(std::span<const std::size_t> indices) {
  std::vector<bool> drop(nnz(), false);
  for (std::size_t k : indices) {
    if (k >= nnz()) throw ShapeError("connection index out of range");
    drop[k] = true;
  }
  std::size_t w = 0;
  for (std::size_t k = 0; k < nnz(); ++k) {
    if (drop[k]) continue;
    rows_[w] = rows_[k];
    cols_[w] = cols_[k];
    weights_[w] = weights_[k];
    velocity_[w] = velocity_[k];
    ++w;
  }
  rows_.resize(w);
  cols_.resize(w);
  weights_.resize(w);
  velocity_.resize(w);
  rebuild_row_order();
}

void SparseLayer::insert(std::span<const Connection> connections) {
  for (const auto& c : connections) {
    if (c.row >= n_in_ || c.col >= n_out_) throw ShapeError("connection index out of bounds");
    rows_.push_back(c.row);
    cols_.push_back(c.col);
    weights_.push_back(c.weight);
    velocity_.push_back(0.0);
  }
  std::vector<std::size_t> order(nnz());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::ranges::sort(order, [this](std::size_t a, std::size_t b) {
    return cell_key(rows_[a], cols_[a], n_in_) < cell_key(rows_[b], cols_[b], n_in_);
  });
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (rows_[order[k]] == rows_[order[k - 1]] && cols_[order[k]] == cols_[order[k - 1]]) {
      const std::string cell = "(" + std::to_string(rows_[order[k]]) + ", " + std::to_string(cols_[order[k]]) + ")";
      // Roll back the append so the layer stays valid.
      const std::size_t n = nnz() - connections.size();
      rows_.resize(n);
      cols_.resize(n);
      weights_.resize(n);
      velocity_.resize(n);
      throw ShapeError("duplicate connection " + cell);
    }
  }
  reorder(std::move(order));
  rebuild_row_order();
}

namespace {

std::vector<std::uint32_t> renumber(const std::vector<bool>& keep, std::size_t& survivors) {
  std::vector<std::uint32_t> map(keep.size(), std::numeric_limits<std::uint32_t>::max());
  survivors = 0;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i]) map[i] = static_cast<std::uint32_t>(survivors++);
  }
  if (survivors == 0) throw ShapeError("a layer cannot be reduced to zero neurons");
  return map;
}

}  // namespace

std::size_t SparseLayer::keep_outputs(const std::vector<bool>& keep) {
  if (keep.size() != n_out_) throw ShapeError("output mask length must equal n_out");
  std::size_t survivors = 0;
  const auto map = renumber(keep, survivors);
  std::vector<std::size_t> dropped;
  for (std::size_t k = 0; k < nnz(); ++k) {
    if (!keep[cols_[k]]) dropped.push_back(k);
  }
  erase(dropped);
  for (auto& c : cols_) c = map[c];
  std::vector<double> bias;
  std::vector<double> bias_velocity;
  for (std::size_t j = 0; j < n_out_; ++j) {
    if (!keep[j]) continue;
    bias.push_back(bias_[j]);
    bias_velocity.push_back(bias_velocity_[j]);
  }
  bias_ = std::move(bias);
  bias_velocity_ = std::move(bias_velocity);
  n_out_ = survivors;
  return dropped.size();
}

std::size_t SparseLayer::keep_inputs(const std::vector<bool>& keep) {
  if (keep.size() != n_in_) throw ShapeError("input mask length must equal n_in");
  std::size_t survivors = 0;
  const auto map = renumber(keep, survivors);
  std::vector<std::size_t> dropped;
  for (std::size_t k = 0; k < nnz(); ++k) {
    if (!keep[rows_[k]]) dropped.push_back(k);
  }
  erase(dropped);
  for (auto& r : rows_) r = map[r];
  n_in_ = survivors;
  return dropped.size();
}

// ---------------------------------------------------------------------------
// DenseLayer

DenseLayer::DenseLayer(std::size_t n_in, std::size_t n_out)
    : n_in_(n_in),
      n_out_(n_out),
      weights_(n_in * n_out, 0.0),
      velocity_(n_in * n_out, 0.0),
      bias_(n_out, 0.0),
      bias_velocity_(n_out, 0.0) {
  if (n_in == 0 || n_out == 0) throw ShapeError("layer dimensions must be positive");
}

std::size_t DenseLayer::keep_outputs(const std::vector<bool>& keep) {
  if (keep.size() != n_out_) throw ShapeError("output mask length must equal n_out");
  std::size_t survivors = 0;
  renumber(keep, survivors);
  DenseLayer next(n_in_, survivors);
  std::size_t j2 = 0;
  for (std::size_t j = 0; j < n_out_; ++j) {
    if (!keep[j]) continue;
    for (std::size_t i = 0; i < n_in_; ++i) {
      next.weights_[i * survivors + j2] = weights_[i * n_out_ + j];
      next.velocity_[i * survivors + j2] = velocity_[i * n_out_ + j];
    }
    next.bias_[j2] = bias_[j];
    next.bias_velocity_[j2] = bias_velocity_[j];
    ++j2;
  }
  const std::size_t dropped = (n_out_ - survivors) * n_in_;
  *this = std::move(next);
  return dropped;
}

std::size_t DenseLayer::keep_inputs(const std::vector<bool>& keep) {
  if (keep.size() != n_in_) throw ShapeError("input mask length must equal n_in");
  std::size_t survivors = 0;
  renumber(keep, survivors);
  DenseLayer next(survivors, n_out_);
  std::size_t i2 = 0;
  for (std::size_t i = 0; i < n_in_; ++i) {
    if (!keep[i]) continue;
    std::copy_n(weights_.begin() + i * n_out_, n_out_, next.weights_.begin() + i2 * n_out_);
    std::copy_n(velocity_.begin() + i * n_out_, n_out_, next.velocity_.begin() + i2 * n_out_);
    ++i2;
  }
  next.bias_ = bias_;
  next.bias_velocity_ = bias_velocity_;
  const std::size_t dropped = (n_in_ - survivors) * n_out_;
  *this = std::move(next);
  return dropped;
}

// ---------------------------------------------------------------------------
// Initialization

SparseLayer er_init(std::size_t n_in, std::size_t n_out, const InitConfig& cfg, Rng& rng) {
  cfg.validate();
  SparseLayer layer(n_in, n_out);
  const double p = cfg.density(n_in, n_out);
  const double scale = cfg.scale_for(n_in, n_out);
  const std::uint64_t cells = static_cast<std::uint64_t>(n_in) * n_out;

  std::vector<Connection> picked;
  picked.reserve(static_cast<std::size_t>(std::min<double>(static_cast<double>(cells), 1.2 * p * cells + 16)));
  auto emit = [&](std::uint64_t cell) {
    const auto row = static_cast<std::uint32_t>(cell % n_in);
    const auto col = static_cast<std::uint32_t>(cell / n_in);
    picked.push_back({row, col, rng.uniform(-scale, scale)});
  };
  if (p >= 1.0) {
    for (std::uint64_t cell = 0; cell < cells; ++cell) emit(cell);
  } else {
    // Geometric gaps between successes of independent Bernoulli(p) trials
    // taken in cell order: same distribution as one trial per cell.
    const double log_q = std::log1p(-p);
    std::uint64_t cell = 0;
    while (true) {
      const double u = 1.0 - rng.uniform();  // (0, 1]
      const double gap = std::floor(std::log(u) / log_q);
      if (gap >= static_cast<double>(cells - cell)) break;
      cell += static_cast<std::uint64_t>(gap);
      emit(cell);
      if (++cell >= cells) break;
    }
  }
  layer.insert(picked);
  return layer;
}

DenseLayer dense_init(std::size_t n_in, std::size_t n_out, const InitConfig& cfg, Rng& rng) {
  cfg.validate();
  DenseLayer layer(n_in, n_out);
  const double scale = cfg.scale_for(n_in, n_out);
  for (std::size_t j = 0; j < n_out; ++j) {
    for (std::size_t i = 0; i < n_in; ++i) layer.weight(i, j) = rng.uniform(-scale, scale);
  }
  return layer;
}

// ---------------------------------------------------------------------------
// Kernels

Batch forward(const SparseLayer& layer, const Batch& input) {
  check_input(layer.n_in(), input);
  Batch out(layer.n_out(), input.size());
  broadcast_bias(layer.bias(), out);
  const auto rows = layer.rows();
  const auto cols = layer.cols();
  const auto w = layer.weights();
  for (std::size_t k = 0; k < layer.nnz(); ++k) axpy(w[k], input.feature(rows[k]), out.feature(cols[k]));
  return out;
}

Batch forward(const DenseLayer& layer, const Batch& input) {
  check_input(layer.n_in(), input);
  Batch out(layer.n_out(), input.size());
  broadcast_bias(layer.bias(), out);
  for (std::size_t i = 0; i < layer.n_in(); ++i) {
    const auto x = input.feature(i);
    for (std::size_t j = 0; j < layer.n_out(); ++j) axpy(layer.weight(i, j), x, out.feature(j));
  }
  return out;
}

LayerGradients backward(const SparseLayer& layer, const Batch& input, const Batch& upstream, bool want_input_grad) {
  check_input(layer.n_in(), input);
  check_upstream(layer.n_out(), input, upstream);
  LayerGradients g;
  const auto rows = layer.rows();
  const auto cols = layer.cols();
  const auto w = layer.weights();
  g.weights.resize(layer.nnz());
  for (std::size_t k = 0; k < layer.nnz(); ++k) g.weights[k] = dot(input.feature(rows[k]), upstream.feature(cols[k]));
  g.bias.resize(layer.n_out());
  for (std::size_t j = 0; j < layer.n_out(); ++j) g.bias[j] = sum(upstream.feature(j));
  if (want_input_grad) {
    g.input = Batch(layer.n_in(), input.size());
    for (std::size_t k : layer.row_order()) axpy(w[k], upstream.feature(cols[k]), g.input.feature(rows[k]));
  }
  return g;
}

LayerGradients backward(const DenseLayer& layer, const Batch& input, const Batch& upstream, bool want_input_grad) {
  check_input(layer.n_in(), input);
  check_upstream(layer.n_out(), input, upstream);
  LayerGradients g;
  g.weights.resize(layer.nnz());
  for (std::size_t i = 0; i < layer.n_in(); ++i) {
    const auto x = input.feature(i);
    for (std::size_t j = 0; j < layer.n_out(); ++j) g.weights[i * layer.n_out() + j] = dot(x, upstream.feature(j));
  }
  g.bias.resize(layer.n_out());
  for (std::size_t j = 0; j < layer.n_out(); ++j) g.bias[j] = sum(upstream.feature(j));
  if (want_input_grad) {
    g.input = Batch(layer.n_in(), input.size());
    for (std::size_t i = 0; i < layer.n_in(); ++i) {
      auto gx = g.input.feature(i);
      for (std::size_t j = 0; j < layer.n_out(); ++j) axpy(layer.weight(i, j), upstream.feature(j), gx);
    }
  }
  return g;
}

namespace {

template <typename Layer>
void sgd_step(Layer& layer, const LayerGradients& grads, const SgdConfig& sgd) {
  auto w = layer.weights();
  auto v = layer.velocity();
  if (grads.weights.size() != w.size() || grads.bias.size() != layer.bias().size()) {
    throw ShapeError("gradient shape does not match layer");
  }
  for (std::size_t k = 0; k < w.size(); ++k) {
    v[k] = sgd.momentum * v[k] + grads.weights[k] + sgd.weight_decay * w[k];
    w[k] -= sgd.lr * v[k];
  }
  auto b = layer.bias();
  auto bv = layer.bias_velocity();
  for (std::size_t j = 0; j < b.size(); ++j) {
    bv[j] = sgd.momentum * bv[j] + grads.bias[j];
    b[j] -= sgd.lr * bv[j];
  }
}

}  // namespace

void apply_update(SparseLayer& layer, const LayerGradients& grads, const SgdConfig& sgd) {
  sgd_step(layer, grads, sgd);
}

void apply_update(DenseLayer& layer, const LayerGradients& grads, const SgdConfig& sgd) {
  sgd_step(layer, grads, sgd);
}

std::size_t nnz(const SparseLayer& layer) { return layer.nnz(); }
std::size_t nnz(const DenseLayer& layer) { return layer.nnz(); }

DenseLayer to_dense(const SparseLayer& layer) {
  DenseLayer dense(layer.n_in(), layer.n_out());
  const auto rows = layer.rows();
  const auto cols = layer.cols();
  const auto w = layer.weights();
  for (std::size_t k = 0; k < layer.nnz(); ++k) dense.weight(rows[k], cols[k]) = w[k];
  std::ranges::copy(layer.bias(), dense.bias().begin());
  return dense;
}

}  // namespace sparsenet
