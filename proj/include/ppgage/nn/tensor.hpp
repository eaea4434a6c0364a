#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ppgage::nn {

/// Dense (batch, channels, length) array, row-major.
struct Tensor {
  std::size_t batch = 0;
  std::size_t channels = 0;
  std::size_t length = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::size_t b, std::size_t c, std::size_t l) : batch(b), channels(c), length(l), data(b * c * l, 0.0) {}

  std::size_t sample_size() const { return channels * length; }
  std::span<double> sample(std::size_t b) { return {data.data() + b * sample_size(), sample_size()}; }
  std::span<const double> sample(std::size_t b) const { return {data.data() + b * sample_size(), sample_size()}; }
  double& at(std::size_t b, std::size_t c, std::size_t t) { return data[(b * channels + c) * length + t]; }
  double at(std::size_t b, std::size_t c, std::size_t t) const { return data[(b * channels + c) * length + t]; }
  bool same_shape(const Tensor& o) const { return batch == o.batch && channels == o.channels && length == o.length; }
};

}  // namespace ppgage::nn
