#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sparsenet/batch.hpp"

namespace sparsenet {

/// Labelled tabular data, features stored row-major (one row per sample).
struct Dataset {
  std::string name;
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  std::vector<double> features;
  std::vector<int> labels;
  std::vector<std::string> class_names;  // optional, index = class id

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const { return {features.data() + i * n_features, n_features}; }

  // Throws DataError when shapes or label ranges are inconsistent.
  void validate() const;
  // Rows in the given order, as a new dataset with the same class set.
  Dataset subset(std::span<const std::size_t> indices) const;
};

// Label column selected by header name or zero-based position.
using LabelColumn = std::variant<std::string, std::size_t>;

// Reads the CSV ingestion format: header row, comma separated, one label
// column, every other column a decimal real. Labels map to class ids in
// order of first appearance.
Dataset load_csv(const std::filesystem::path& path, const LabelColumn& label);
Dataset parse_csv(std::string_view text, const LabelColumn& label, std::string name = "inline");

// Writes features followed by a trailing "label" column. Class names are
// used when present, otherwise the integer id.
void write_csv(const Dataset& data, const std::filesystem::path& path);

struct Split {
  Dataset train;
  Dataset test;
  bool stratified = true;
};

// Random split with train size n - ceil(n * (1 - train_fraction)), allocated
// across classes by largest remainder. Falls back to an unstratified split
// when some class has fewer than two samples.
Split split(const Dataset& data, double train_fraction, std::uint64_t seed);

/// Per-feature z-score statistics (population convention).
class Standardizer {
 public:
  static Standardizer fit(const Dataset& train);

  Dataset transform(const Dataset& data) const;

  std::span<const double> mean() const { return mean_; }
  // Divisors actually applied; constant features use 1.
  std::span<const double> scale() const { return scale_; }

 private:
  std::vector<double> mean_;
  std::vector<double> scale_;
};

// Copies the selected samples into a feature-major batch.
Batch gather(const Dataset& data, std::span<const std::size_t> indices);

}  // namespace sparsenet
