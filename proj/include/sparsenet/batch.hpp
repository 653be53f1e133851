#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sparsenet {

/// A mini-batch of activation vectors stored feature-major: each feature
/// owns a contiguous run of `size()` sample values. Kernels iterate over
/// connections and stream through samples, which keeps the inner loop
/// contiguous for both sparse and dense layers.
class Batch {
 public:
  Batch() = default;
  Batch(std::size_t width, std::size_t size, double fill = 0.0)
      : width_(width), size_(size), values_(width * size, fill) {}

  std::size_t width() const { return width_; }
  std::size_t size() const { return size_; }

  double& operator()(std::size_t feature, std::size_t sample) { return values_[feature * size_ + sample]; }
  double operator()(std::size_t feature, std::size_t sample) const { return values_[feature * size_ + sample]; }

  std::span<double> feature(std::size_t f) { return {values_.data() + f * size_, size_}; }
  std::span<const double> feature(std::size_t f) const { return {values_.data() + f * size_, size_}; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  // Column for one sample, copied out (features are strided).
  std::vector<double> sample(std::size_t s) const;

 private:
  std::size_t width_ = 0;
  std::size_t size_ = 0;
  std::vector<double> values_;
};

inline std::vector<double> Batch::sample(std::size_t s) const {
  std::vector<double> out(width_);
  for (std::size_t f = 0; f < width_; ++f) out[f] = (*this)(f, s);
  return out;
}

}  // namespace sparsenet
