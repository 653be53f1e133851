#include "sparsenet/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "sparsenet/errors.hpp"

namespace sparsenet {

namespace {

constexpr std::size_t kEvalChunk = 512;

void relu_inplace(Batch& b) {
  for (double& v : b.values()) v = v > 0.0 ? v : 0.0;
}

double cross_entropy(const Batch& probs, std::span<const int> labels) {
  double total = 0.0;
  for (std::size_t s = 0; s < probs.size(); ++s) {
    const double p = probs(static_cast<std::size_t>(labels[s]), s);
    total -= std::log(std::max(p, std::numeric_limits<double>::min()));
  }
  return total;
}

}  // namespace

std::size_t fan_in(const Layer& layer) {
  return std::visit([](const auto& l) { return l.n_in(); }, layer);
}
std::size_t fan_out(const Layer& layer) {
  return std::visit([](const auto& l) { return l.n_out(); }, layer);
}
std::size_t nnz(const Layer& layer) {
  return std::visit([](const auto& l) { return l.nnz(); }, layer);
}

Mlp::Mlp(std::array<Layer, kLayers> layers) : layers_(std::move(layers)) { check(); }

void Mlp::check() const {
  for (std::size_t k = 0; k + 1 < kLayers; ++k) {
    if (fan_out(layers_[k]) != fan_in(layers_[k + 1])) {
      throw ShapeError("layer " + std::to_string(k) + " output width does not match layer " + std::to_string(k + 1) +
                       " input width");
    }
  }
}

Dims Mlp::dims() const {
  return {fan_in(layers_[0]), fan_out(layers_[0]), fan_out(layers_[1]), fan_out(layers_[2])};
}

bool Mlp::has_sparse_layer() const {
  return std::ranges::any_of(layers_, [](const Layer& l) { return std::holds_alternative<SparseLayer>(l); });
}

Mlp build_mlp(const Dims& dims, const InitConfig& cfg, Topology topology, Rng& rng) {
  if (dims.n_features == 0 || dims.h1 == 0 || dims.h2 == 0 || dims.n_classes == 0) {
    throw ConfigError("all network dimensions must be at least 1");
  }
  const std::array<std::size_t, 4> widths{dims.n_features, dims.h1, dims.h2, dims.n_classes};
  std::array<Layer, Mlp::kLayers> layers;
  for (std::size_t k = 0; k < Mlp::kLayers; ++k) {
    Rng stream = rng.derive(k);
    if (topology == Topology::kSparse) {
      layers[k] = er_init(widths[k], widths[k + 1], cfg, stream);
    } else {
      layers[k] = dense_init(widths[k], widths[k + 1], cfg, stream);
    }
  }
  return Mlp(std::move(layers));
}

void TrainConfig::validate() const {
  if (!(sgd.lr >= 0.0)) throw ConfigError("lr must be non-negative");
  if (!(sgd.momentum >= 0.0 && sgd.momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (!(sgd.weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (epochs == 0) throw ConfigError("epochs must be positive");
}

Batch softmax(const Batch& logits) {
  Batch probs(logits.width(), logits.size());
  for (std::size_t s = 0; s < logits.size(); ++s) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < logits.width(); ++c) peak = std::max(peak, logits(c, s));
    double total = 0.0;
    for (std::size_t c = 0; c < logits.width(); ++c) {
      probs(c, s) = std::exp(logits(c, s) - peak);
      total += probs(c, s);
    }
    for (std::size_t c = 0; c < logits.width(); ++c) probs(c, s) /= total;
  }
  return probs;
}

ForwardPass forward(const Mlp& model, const Batch& input) {
  ForwardPass pass;
  pass.activations[0] = input;
  for (std::size_t k = 0; k < Mlp::kLayers; ++k) {
    Batch z = std::visit([&](const auto& l) { return forward(l, pass.activations[k]); }, model.layer(k));
    if (k + 1 < Mlp::kLayers) {
      relu_inplace(z);
      pass.activations[k + 1] = std::move(z);
    } else {
      pass.activations[k + 1] = softmax(z);
    }
  }
  return pass;
}

double loss_and_gradients(const Mlp& model, const Batch& input, std::span<const int> labels,
                          std::array<LayerGradients, Mlp::kLayers>& grads) {
  if (labels.size() != input.size()) throw ShapeError("label count does not match batch size");
  const ForwardPass pass = forward(model, input);
  const Batch& probs = pass.activations.back();
  const double n = static_cast<double>(input.size());
  const double loss = cross_entropy(probs, labels) / n;

  Batch delta = probs;
  for (std::size_t s = 0; s < input.size(); ++s) delta(static_cast<std::size_t>(labels[s]), s) -= 1.0;
  for (double& v : delta.values()) v /= n;

  for (std::size_t k = Mlp::kLayers; k-- > 0;) {
    const bool need_input = k > 0;
    grads[k] = std::visit([&](const auto& l) { return backward(l, pass.activations[k], delta, need_input); },
                          model.layer(k));
    if (!need_input) break;
    delta = std::move(grads[k].input);
    // ReLU derivative, taken as 0 at the kink.
    const auto act = pass.activations[k].values();
    auto d = delta.values();
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!(act[i] > 0.0)) d[i] = 0.0;
    }
    grads[k].input = Batch();
  }
  return loss;
}

std::vector<int> predict(const Mlp& model, const Batch& input) {
  const Batch probs = forward(model, input).activations.back();
  std::vector<int> out(input.size());
  for (std::size_t s = 0; s < input.size(); ++s) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < probs.width(); ++c) {
      if (probs(c, s) > probs(best, s)) best = c;
    }
    out[s] = static_cast<int>(best);
  }
  return out;
}

Evaluation evaluate(const Mlp& model, const Dataset& data) {
  if (data.size() == 0) throw DataError("cannot evaluate on an empty dataset");
  if (data.n_features != model.dims().n_features) throw ShapeError("dataset width does not match model input");
  double loss = 0.0;
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += kEvalChunk) {
    const std::size_t end = std::min(data.size(), start + kEvalChunk);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const Batch probs = forward(model, gather(data, idx)).activations.back();
    const std::span<const int> labels(data.labels.data() + start, end - start);
    loss += cross_entropy(probs, labels);
    for (std::size_t s = 0; s < labels.size(); ++s) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < probs.width(); ++c) {
        if (probs(c, s) > probs(best, s)) best = c;
      }
      if (static_cast<int>(best) == labels[s]) ++correct;
    }
  }
  const auto n = static_cast<double>(data.size());
  return {loss / n, static_cast<double>(correct) / n};
}

EpochMetrics train_epoch(Mlp& model, const Dataset& train, const TrainConfig& cfg, Rng& rng) {
  cfg.validate();
  if (train.size() == 0) throw DataError("cannot train on an empty dataset");
  if (train.n_features != model.dims().n_features) throw ShapeError("dataset width does not match model input");

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span(order));

  std::array<LayerGradients, Mlp::kLayers> grads;
  std::vector<int> labels;
  for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
    const std::size_t end = std::min(order.size(), start + cfg.batch_size);
    const std::span<const std::size_t> idx(order.data() + start, end - start);
    labels.clear();
    for (std::size_t i : idx) labels.push_back(train.labels[i]);
    loss_and_gradients(model, gather(train, idx), labels, grads);
    for (std::size_t k = 0; k < Mlp::kLayers; ++k) {
      std::visit([&](auto& l) { apply_update(l, grads[k], cfg.sgd); }, model.layer(k));
    }
  }

  EpochMetrics m;
  const Evaluation e = evaluate(model, train);
  m.train_loss = e.loss;
  m.train_accuracy = e.accuracy;
  const ParameterCount p = count_parameters(model);
  m.weight_count = p.weights;
  m.bias_count = p.weights_plus_biases - p.weights;
  const Dims d = model.dims();
  m.hidden_neurons = {d.h1, d.h2};
  return m;
}

ParameterCount count_parameters(const Mlp& model) {
  ParameterCount c;
  for (const Layer& l : model.layers()) {
    c.weights += nnz(l);
    c.weights_plus_biases += nnz(l) + fan_out(l);
  }
  return c;
}

std::size_t dense_weight_count(const Dims& d) {
  return d.n_features * d.h1 + d.h1 * d.h2 + d.h2 * d.n_classes;
}

std::size_t count_neurons(const Mlp& model) {
  const Dims d = model.dims();
  return d.n_features + d.h1 + d.h2;
}

}  // namespace sparsenet
