#include "ppgage/nn/saliency.hpp"

#include <algorithm>
#include <cmath>

#include "ppgage/error.hpp"

namespace ppgage::nn {

namespace {

void rescale_unit(std::vector<double>& x) {
  const double top = x.empty() ? 0.0 : *std::max_element(x.begin(), x.end());
  if (top > 0.0)
    for (double& v : x) v /= top;
}

std::vector<double> smoothed_abs(std::span<const double> grad, double sigma) {
  std::vector<double> a(grad.size());
  std::transform(grad.begin(), grad.end(), a.begin(), [](double g) { return std::abs(g); });
  return gaussian_smooth(a, sigma);
}

}  // namespace

Tensor input_gradients(const Net1D& net, const ModelParams& p, const Tensor& batch) {
  Net1D::Cache cache;
  net.forward(p, batch, cache);
  std::vector<double> d_params(p.parameter_count(), 0.0);
  const std::vector<double> ones(batch.batch, 1.0);
  Tensor dx;
  net.backward(p, cache, ones, d_params, &dx);
  return dx;
}

std::vector<double> gaussian_smooth(std::span<const double> x, double sigma) {
  require(sigma >= 0.0 && std::isfinite(sigma), "smoothing sigma must be non-negative");
  if (sigma == 0.0) return {x.begin(), x.end()};
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  for (std::ptrdiff_t d = -radius; d <= radius; ++d)
    kernel[static_cast<std::size_t>(d + radius)] = std::exp(-0.5 * static_cast<double>(d * d) / (sigma * sigma));

  const auto n = static_cast<std::ptrdiff_t>(x.size());
  std::vector<double> out(x.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0, wsum = 0.0;
    for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, i - radius); j <= std::min(n - 1, i + radius); ++j) {
      const double w = kernel[static_cast<std::size_t>(j - i + radius)];
      acc += w * x[static_cast<std::size_t>(j)];
      wsum += w;
    }
    out[static_cast<std::size_t>(i)] = acc / wsum;
  }
  return out;
}

std::vector<double> saliency(const Net1D& net, const ModelParams& p, std::span<const double> waveform, double sigma) {
  Tensor x(1, 1, waveform.size());
  std::copy(waveform.begin(), waveform.end(), x.data.begin());
  const Tensor g = input_gradients(net, p, x);
  std::vector<double> s = smoothed_abs(g.data, sigma);
  rescale_unit(s);
  return s;
}

std::vector<double> mean_saliency(const Net1D& net, const ModelParams& p, const Tensor& batch, double sigma) {
  require(batch.batch > 0, "saliency needs at least one waveform");
  const Tensor g = input_gradients(net, p, batch);
  std::vector<double> mean(batch.length, 0.0);
  for (std::size_t b = 0; b < batch.batch; ++b) {
    std::vector<double> s = smoothed_abs(g.sample(b), sigma);
    rescale_unit(s);
    for (std::size_t t = 0; t < mean.size(); ++t) mean[t] += s[t];
  }
  rescale_unit(mean);
  return mean;
}

}  // namespace ppgage::nn
