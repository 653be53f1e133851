#include "sparsenet/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "sparsenet/errors.hpp"
#include "sparsenet/random.hpp"

namespace sparsenet {

void SyntheticSpec::validate() const {
  if (n_samples == 0 || n_features == 0 || n_classes < 2) throw ConfigError("synthetic shape must be non-empty");
  if (n_informative == 0 || n_informative + n_redundant > n_features) {
    throw ConfigError("informative + redundant features exceed the feature count");
  }
  const std::size_t clusters = n_classes * clusters_per_class;
  if (clusters == 0 || (n_informative < 63 && (std::size_t{1} << n_informative) < clusters)) {
    throw ConfigError("too few informative features for the requested number of clusters");
  }
  if (!(flip_y >= 0.0 && flip_y <= 1.0)) throw ConfigError("flip_y must lie in [0, 1]");
  if (!(class_sep > 0.0)) throw ConfigError("class_sep must be positive");
}

Dataset make_classification(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  const std::size_t n = spec.n_samples;
  const std::size_t d = spec.n_features;
  const std::size_t inf = spec.n_informative;
  const std::size_t clusters = spec.n_classes * spec.clusters_per_class;

  // Distinct hypercube vertices, one per cluster.
  std::set<std::vector<bool>> seen;
  std::vector<std::vector<double>> centroids;
  while (centroids.size() < clusters) {
    std::vector<bool> bits(inf);
    for (std::size_t i = 0; i < inf; ++i) bits[i] = rng.uniform() < 0.5;
    if (!seen.insert(bits).second) continue;
    std::vector<double> c(inf);
    for (std::size_t i = 0; i < inf; ++i) c[i] = bits[i] ? spec.class_sep : -spec.class_sep;
    centroids.push_back(std::move(c));
  }

  Dataset data;
  data.name = spec.name;
  data.n_features = d;
  data.n_classes = spec.n_classes;
  data.features.assign(n * d, 0.0);
  data.labels.resize(n);

  // Informative block: per-cluster random linear transform of N(0, I).
  std::vector<double> z(inf);
  std::size_t row = 0;
  for (std::size_t k = 0; k < clusters; ++k) {
    const std::size_t count = n / clusters + (k < n % clusters ? 1 : 0);
    std::vector<double> mix(inf * inf);
    for (double& a : mix) a = rng.uniform(-1.0, 1.0);
    for (std::size_t s = 0; s < count; ++s, ++row) {
      for (double& v : z) v = rng.normal();
      double* x = data.features.data() + row * d;
      for (std::size_t j = 0; j < inf; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < inf; ++i) acc += z[i] * mix[i * inf + j];
        x[j] = acc + centroids[k][j];
      }
      data.labels[row] = static_cast<int>(k % spec.n_classes);
    }
  }

  // Redundant block.
  std::vector<double> combo(inf * spec.n_redundant);
  for (double& b : combo) b = rng.uniform(-1.0, 1.0);
  for (std::size_t r = 0; r < n; ++r) {
    double* x = data.features.data() + r * d;
    for (std::size_t j = 0; j < spec.n_redundant; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < inf; ++i) acc += x[i] * combo[i * spec.n_redundant + j];
      x[inf + j] = acc;
    }
    for (std::size_t j = inf + spec.n_redundant; j < d; ++j) x[j] = rng.normal();
  }

  for (auto& y : data.labels) {
    if (rng.uniform() < spec.flip_y) y = static_cast<int>(rng.index(spec.n_classes));
  }

  if (spec.quantize_levels > 0) {
    const double top = spec.quantize_levels - 1;
    for (double& v : data.features) v = std::clamp(std::round(v + top / 2.0), 0.0, top);
  }

  // Shuffle samples and feature order.
  std::vector<std::size_t> samples(n);
  std::iota(samples.begin(), samples.end(), std::size_t{0});
  rng.shuffle(std::span(samples));
  std::vector<std::size_t> columns(d);
  std::iota(columns.begin(), columns.end(), std::size_t{0});
  rng.shuffle(std::span(columns));
  Dataset out = data.subset(samples);
  for (std::size_t r = 0; r < n; ++r) {
    const auto src = data.row(samples[r]);
    double* dst = out.features.data() + r * d;
    for (std::size_t j = 0; j < d; ++j) dst[j] = src[columns[j]];
  }
  out.validate();
  return out;
}

std::optional<SyntheticSpec> standin_spec(std::string_view name) {
  SyntheticSpec s;
  s.name = std::string(name);
  if (name == "madelon") {
    // The hypercube construction MADELON itself was generated with.
    s.n_samples = 2600;
    s.n_features = 500;
    s.n_classes = 2;
    s.n_informative = 5;
    s.n_redundant = 15;
    s.clusters_per_class = 16;
    s.class_sep = 1.0;
    s.flip_y = 0.01;
  } else if (name == "gisette") {
    s.n_samples = 7000;
    s.n_features = 5000;
    s.n_classes = 2;
    s.n_informative = 50;
    s.n_redundant = 2450;
    s.clusters_per_class = 2;
    s.class_sep = 1.0;
    s.flip_y = 0.01;
  } else if (name == "yale") {
    s.n_samples = 165;
    s.n_features = 1024;
    s.n_classes = 15;
    s.n_informative = 40;
    s.n_redundant = 400;
    s.clusters_per_class = 1;
    s.class_sep = 1.0;
    s.flip_y = 0.0;
  } else if (name == "lung_discrete") {
    s.n_samples = 73;
    s.n_features = 325;
    s.n_classes = 7;
    s.n_informative = 20;
    s.n_redundant = 80;
    s.clusters_per_class = 1;
    s.class_sep = 1.0;
    s.flip_y = 0.0;
    s.quantize_levels = 3;
  } else {
    return std::nullopt;
  }
  return s;
}

std::vector<std::string> standin_names() { return {"madelon", "gisette", "yale", "lung_discrete"}; }

}  // namespace sparsenet
